#include "cstrack/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cstrack {

namespace {

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw MissingArtifactError("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open: " + path);
    return in;
}

void put_provenance(std::ofstream& out, const std::string& provenance) {
    if (!provenance.empty()) out << "# config " << provenance << "\n";
}

// First line that is not blank and not a # comment.
std::string next_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        std::size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos || line[i] == '#') continue;
        return line;
    }
    return {};
}

std::string method_name(TrackMethod m) {
    return m == TrackMethod::ByValues ? "values" : "vectors";
}

TrackMethod method_from(const std::string& s) {
    if (s == "values") return TrackMethod::ByValues;
    if (s == "vectors") return TrackMethod::ByVectors;
    throw FormatError("unknown tracking method: " + s);
}

}  // namespace

void write_ulam_matrix(const std::string& path, const UlamMatrix& m,
                       const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    out << "ULAM " << m.rows() << " " << m.cols() << " " << m.Q << " "
        << fmt(m.t, 17) << " " << fmt(m.tau, 17) << "\n";
    for (int r = 0; r < m.P.outerSize(); ++r)
        for (SparseMat::InnerIterator it(m.P, r); it; ++it)
            out << r << " " << it.col() << " " << fmt(it.value(), 12) << "\n";
    if (!out) throw MissingArtifactError("write failed: " + path);

    if (!m.identity_ids()) {
        std::ofstream bins = open_out(path + ".bins");
        put_provenance(bins, provenance);
        bins << "BINS " << m.rows() << " " << m.cols() << "\n";
        for (std::size_t i = 0; i < m.row_bins.size(); ++i)
            bins << m.row_bins[i] << (i + 1 < m.row_bins.size() ? ' ' : '\n');
        for (std::size_t i = 0; i < m.col_bins.size(); ++i)
            bins << m.col_bins[i] << (i + 1 < m.col_bins.size() ? ' ' : '\n');
        if (!bins) throw MissingArtifactError("write failed: " + path + ".bins");
    }
}

UlamMatrix read_ulam_matrix(const std::string& path) {
    std::ifstream in = open_in(path);
    std::istringstream header(next_line(in));
    std::string magic;
    int rows = 0, cols = 0;
    UlamMatrix m;
    if (!(header >> magic >> rows >> cols >> m.Q >> m.t >> m.tau) || magic != "ULAM")
        throw FormatError("bad ULAM header in " + path);
    if (rows < 1 || cols < 1 || m.Q < 1)
        throw FormatError("bad ULAM shape in " + path);

    std::vector<Eigen::Triplet<double>> trip;
    for (std::string line; !(line = next_line(in)).empty();) {
        std::istringstream ls(line);
        int r, c;
        double w;
        if (!(ls >> r >> c >> w)) throw FormatError("bad triplet in " + path);
        if (r < 0 || r >= rows || c < 0 || c >= cols)
            throw FormatError("triplet index out of range in " + path);
        const double kq = w * m.Q;
        if (w <= 0.0 || std::abs(kq - std::lround(kq)) > 1e-6)
            throw FormatError("weight is not a positive multiple of 1/Q in " + path);
        // Snap to the exact multiple of 1/Q so a round-trip is bit-exact.
        trip.emplace_back(r, c, double(std::lround(kq)) / m.Q);
    }

    m.row_bins.resize(rows);
    m.col_bins.resize(cols);
    for (int i = 0; i < rows; ++i) m.row_bins[i] = i;
    for (int i = 0; i < cols; ++i) m.col_bins[i] = i;

    std::ifstream bins(path + ".bins");
    if (bins) {
        std::istringstream bh(next_line(bins));
        std::string bmagic;
        int brows = 0, bcols = 0;
        if (!(bh >> bmagic >> brows >> bcols) || bmagic != "BINS" || brows != rows ||
            bcols != cols)
            throw FormatError("bin-id companion does not match " + path);
        for (int i = 0; i < rows; ++i)
            if (!(bins >> m.row_bins[i])) throw FormatError("short bin-id list: " + path);
        for (int i = 0; i < cols; ++i)
            if (!(bins >> m.col_bins[i])) throw FormatError("short bin-id list: " + path);
    }

    m.P.resize(rows, cols);
    m.P.setFromTriplets(trip.begin(), trip.end());
    m.P.makeCompressed();
    for (int r = 0; r < m.P.outerSize(); ++r) {
        double sum = 0.0;
        for (SparseMat::InnerIterator it(m.P, r); it; ++it) sum += it.value();
        if (sum > 1.0 + 1e-9) throw FormatError("row sum exceeds 1 in " + path);
    }
    return m;
}

void write_window_svd(const std::string& path, const WindowSVD& svd,
                      const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    const int N = static_cast<int>(svd.s.size());
    out << "SVD " << fmt(svd.t0, 17) << " " << svd.n << " " << N << " " << svd.U.rows()
        << " " << svd.V.rows() << "\n";
    for (int j = 0; j < N; ++j) out << j + 1 << " " << fmt(svd.s[j], 17) << "\n";
    for (Eigen::Index r = 0; r < svd.U.rows(); ++r) {
        for (int j = 0; j < N; ++j) out << (j ? " " : "") << fmt(svd.U(r, j), 17);
        out << "\n";
    }
    for (Eigen::Index r = 0; r < svd.V.rows(); ++r) {
        for (int j = 0; j < N; ++j) out << (j ? " " : "") << fmt(svd.V(r, j), 17);
        out << "\n";
    }
    if (!out) throw MissingArtifactError("write failed: " + path);
}

WindowSVD read_window_svd(const std::string& path) {
    std::ifstream in = open_in(path);
    std::istringstream header(next_line(in));
    std::string magic;
    int N = 0, m = 0, mp = 0;
    WindowSVD svd;
    if (!(header >> magic >> svd.t0 >> svd.n >> N >> m >> mp) || magic != "SVD")
        throw FormatError("bad SVD header in " + path);
    if (N < 1 || m < 1 || mp < 1) throw FormatError("bad SVD shape in " + path);
    svd.s.resize(N);
    for (int j = 0; j < N; ++j) {
        std::istringstream ls(next_line(in));
        int idx;
        if (!(ls >> idx >> svd.s[j]) || idx != j + 1)
            throw FormatError("bad singular value line in " + path);
    }
    svd.U.resize(m, N);
    svd.V.resize(mp, N);
    for (int r = 0; r < m; ++r) {
        std::istringstream ls(next_line(in));
        for (int j = 0; j < N; ++j)
            if (!(ls >> svd.U(r, j))) throw FormatError("short U block in " + path);
    }
    for (int r = 0; r < mp; ++r) {
        std::istringstream ls(next_line(in));
        for (int j = 0; j < N; ++j)
            if (!(ls >> svd.V(r, j))) throw FormatError("short V block in " + path);
    }
    return svd;
}

void write_tracked_paths(const std::string& path, const TrackedPaths& paths,
                         const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    out << "method,mode,k,rank,value,sign\n";
    const std::string name = method_name(paths.method);
    for (int mode = 0; mode < paths.modes(); ++mode)
        for (int layer = 0; layer < paths.layers(); ++layer) {
            const PathPoint& p = paths.paths[mode][layer];
            out << name << "," << mode + 1 << "," << paths.first_k + layer << ","
                << p.rank + 1 << "," << fmt(p.value, 17) << "," << p.sign << "\n";
        }
    if (!out) throw MissingArtifactError("write failed: " + path);
}

TrackedPaths read_tracked_paths(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line = next_line(in);
    if (line != "method,mode,k,rank,value,sign")
        throw FormatError("bad tracked-paths header in " + path);

    TrackedPaths out;
    bool first = true;
    int expect_k = 0;
    while (!(line = next_line(in)).empty()) {
        std::istringstream ls(line);
        std::string method, f;
        std::getline(ls, method, ',');
        int mode, k, rank, sign;
        double value;
        std::getline(ls, f, ',');
        mode = std::stoi(f);
        std::getline(ls, f, ',');
        k = std::stoi(f);
        std::getline(ls, f, ',');
        rank = std::stoi(f);
        std::getline(ls, f, ',');
        value = std::stod(f);
        if (!std::getline(ls, f)) throw FormatError("short row in " + path);
        sign = std::stoi(f);

        if (first) {
            out.method = method_from(method);
            out.first_k = k;
            first = false;
        }
        if (mode < 1) throw FormatError("bad mode index in " + path);
        if (static_cast<int>(out.paths.size()) < mode) {
            out.paths.resize(mode);
            expect_k = out.first_k;
        }
        if (k != expect_k++) throw FormatError("non-consecutive k in " + path);
        out.paths[mode - 1].push_back({rank - 1, value, sign});
    }
    if (out.paths.empty()) throw FormatError("empty tracked-paths file: " + path);
    for (const auto& p : out.paths)
        if (p.size() != out.paths[0].size())
            throw FormatError("ragged tracked-paths file: " + path);
    return out;
}

void write_equivariance_series(const std::string& path, const EquivarianceSeries& s,
                               const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    out << "method,mode,k,sigma\n";
    const std::string name = method_name(s.method);
    for (std::size_t mode = 0; mode < s.sigma.size(); ++mode)
        for (std::size_t i = 0; i < s.sigma[mode].size(); ++i)
            out << name << "," << mode + 1 << "," << s.first_k + static_cast<int>(i)
                << "," << fmt(s.sigma[mode][i], 17) << "\n";
    if (!out) throw MissingArtifactError("write failed: " + path);
}

void write_frame_csv(const std::string& path, const RasterFrame& frame,
                     const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    for (int r = 0; r < frame.ny; ++r) {
        for (int c = 0; c < frame.nx; ++c)
            out << (c ? "," : "") << fmt(frame.grid(r, c), 17);
        out << "\n";
    }
    if (!out) throw MissingArtifactError("write failed: " + path);
}

RasterFrame read_frame_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    for (std::string line; !(line = next_line(in)).empty();) {
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows[0].size())
            throw FormatError("ragged frame grid in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty frame grid in " + path);
    RasterFrame f;
    f.ny = static_cast<int>(rows.size());
    f.nx = static_cast<int>(rows[0].size());
    f.grid.resize(f.ny, f.nx);
    for (int r = 0; r < f.ny; ++r)
        for (int c = 0; c < f.nx; ++c) f.grid(r, c) = rows[r][c];
    return f;
}

void write_frame_pgm(const std::string& path, const RasterFrame& frame) {
    std::ofstream out = open_out(path);
    out << "P2\n" << frame.nx << " " << frame.ny << "\n255\n";
    for (int r = 0; r < frame.ny; ++r) {
        for (int c = 0; c < frame.nx; ++c) {
            int pix = 128;
            if (frame.limit > 0.0) {
                const double v = frame.grid(r, c);
                pix = static_cast<int>(
                    std::lround((v + frame.limit) / (2.0 * frame.limit) * 255.0));
                pix = std::clamp(pix, 0, 255);
            }
            out << (c ? " " : "") << pix;
        }
        out << "\n";
    }
    if (!out) throw MissingArtifactError("write failed: " + path);
}

void write_coherence_log(const std::string& path, int mode, int k,
                         const std::vector<double>& rates,
                         const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    out << "mode,k,n_t,rate\n";
    for (std::size_t i = 0; i < rates.size(); ++i)
        out << mode << "," << k << "," << i + 1 << "," << fmt(rates[i], 17) << "\n";
    if (!out) throw MissingArtifactError("write failed: " + path);
}

void write_gridded_field(const std::string& path, const GriddedFieldData& data,
                         const std::string& provenance) {
    std::ofstream out = open_out(path);
    put_provenance(out, provenance);
    out << fmt(data.lon0, 17) << " " << fmt(data.dlon, 17) << " " << data.nlon << "\n";
    out << fmt(data.lat0, 17) << " " << fmt(data.dlat, 17) << " " << data.nlat << "\n";
    out << fmt(data.t0, 17) << " " << fmt(data.dt, 17) << " " << data.nt << "\n";
    out << fmt(data.radius_m, 17) << "\n";
    if (data.u.size() != data.samples() || data.v.size() != data.samples())
        throw ConfigError("gridded field: array shapes inconsistent with grid lengths");
    for (std::size_t i = 0; i < data.samples(); ++i)
        out << fmt(data.u[i], 17) << " " << fmt(data.v[i], 17) << "\n";
    if (!out) throw MissingArtifactError("write failed: " + path);
}

GriddedFieldData read_gridded_field(const std::string& path) {
    std::ifstream in = open_in(path);
    GriddedFieldData d;
    {
        std::istringstream ls(next_line(in));
        if (!(ls >> d.lon0 >> d.dlon >> d.nlon)) throw FormatError("bad lon header: " + path);
    }
    {
        std::istringstream ls(next_line(in));
        if (!(ls >> d.lat0 >> d.dlat >> d.nlat)) throw FormatError("bad lat header: " + path);
    }
    {
        std::istringstream ls(next_line(in));
        if (!(ls >> d.t0 >> d.dt >> d.nt)) throw FormatError("bad time header: " + path);
    }
    {
        std::istringstream ls(next_line(in));
        if (!(ls >> d.radius_m)) throw FormatError("bad radius header: " + path);
    }
    if (d.nlon < 1 || d.nlat < 1 || d.nt < 1)
        throw FormatError("bad grid shape in " + path);
    const std::size_t n = d.samples();
    d.u.reserve(n);
    d.v.reserve(n);
    for (std::string line; !(line = next_line(in)).empty();) {
        std::istringstream ls(line);
        double u, v;
        if (!(ls >> u >> v)) throw FormatError("bad sample row in " + path);
        d.u.push_back(u);
        d.v.push_back(v);
    }
    if (d.u.size() != n)
        throw FormatError("sample count does not match the grid shape in " + path);
    return d;
}

}  // namespace cstrack
