#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "cstrack/io.hpp"

using namespace cstrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cstrack_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

UlamMatrix sample_matrix(int Q = 25) {
    UlamMatrix m;
    m.t = 3.0;
    m.tau = 1.0;
    m.Q = Q;
    m.row_bins = {0, 1, 2};
    m.col_bins = {0, 1, 2, 3};
    std::vector<Eigen::Triplet<double>> trip{{0, 0, 5.0 / Q},
                                             {0, 1, 20.0 / Q},
                                             {1, 3, 1.0 / Q},
                                             {2, 2, 24.0 / Q}};
    m.P.resize(3, 4);
    m.P.setFromTriplets(trip.begin(), trip.end());
    m.P.makeCompressed();
    return m;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void corrupt_line(const std::string& path, int line_no, const std::string& replacement) {
    std::istringstream in(slurp(path));
    std::ostringstream out;
    std::string line;
    int i = 0;
    while (std::getline(in, line)) {
        if (++i == line_no) out << replacement << "\n";
        else out << line << "\n";
    }
    std::ofstream rewrite(path);
    rewrite << out.str();
}

}  // namespace

TEST_CASE("ulam matrix round-trips bit-exactly") {
    const TempDir dir;
    const UlamMatrix m = sample_matrix();
    write_ulam_matrix(dir.file("p.ulam"), m, "deadbeef");
    CHECK(slurp(dir.file("p.ulam")).starts_with("# config deadbeef\nULAM 3 4 25 3 1\n"));

    const UlamMatrix r = read_ulam_matrix(dir.file("p.ulam"));
    CHECK(r.t == m.t);
    CHECK(r.tau == m.tau);
    CHECK(r.Q == m.Q);
    CHECK(r.row_bins == m.row_bins);
    CHECK(r.col_bins == m.col_bins);
    REQUIRE(r.P.nonZeros() == m.P.nonZeros());
    CHECK(Eigen::MatrixXd(r.P) == Eigen::MatrixXd(m.P));
}

TEST_CASE("ulam matrix with non-identity ids keeps its companion") {
    const TempDir dir;
    UlamMatrix m = sample_matrix();
    m.row_bins = {7, 9, 11};
    m.col_bins = {7, 9, 11, 40};
    write_ulam_matrix(dir.file("w.ulam"), m);
    CHECK(fs::exists(dir.file("w.ulam.bins")));
    const UlamMatrix r = read_ulam_matrix(dir.file("w.ulam"));
    CHECK(r.row_bins == m.row_bins);
    CHECK(r.col_bins == m.col_bins);

    // Identity ids need no companion.
    write_ulam_matrix(dir.file("p.ulam"), sample_matrix());
    CHECK_FALSE(fs::exists(dir.file("p.ulam.bins")));
}

TEST_CASE("ulam reader rejects corrupted files") {
    const TempDir dir;
    write_ulam_matrix(dir.file("p.ulam"), sample_matrix());

    corrupt_line(dir.file("p.ulam"), 2, "0 9 0.2");  // column out of range
    CHECK_THROWS_AS(read_ulam_matrix(dir.file("p.ulam")), FormatError);

    write_ulam_matrix(dir.file("q.ulam"), sample_matrix());
    corrupt_line(dir.file("q.ulam"), 3, "0 1 0.137");  // not a multiple of 1/25
    CHECK_THROWS_AS(read_ulam_matrix(dir.file("q.ulam")), FormatError);

    write_ulam_matrix(dir.file("r.ulam"), sample_matrix());
    corrupt_line(dir.file("r.ulam"), 1, "ULAM x y");  // mangled header
    CHECK_THROWS_AS(read_ulam_matrix(dir.file("r.ulam")), FormatError);

    write_ulam_matrix(dir.file("s.ulam"), sample_matrix());
    corrupt_line(dir.file("s.ulam"), 2, "0 2 1");  // pushes row sum past 1
    CHECK_THROWS_AS(read_ulam_matrix(dir.file("s.ulam")), FormatError);

    CHECK_THROWS_AS(read_ulam_matrix(dir.file("missing.ulam")), MissingArtifactError);
}

TEST_CASE("window svd round-trips exactly") {
    const TempDir dir;
    std::mt19937 gen(12);
    std::normal_distribution<double> normal;
    WindowSVD svd;
    svd.t0 = 5.0;
    svd.n = 7;
    svd.s.resize(3);
    svd.s << 0.9, 0.5, 1.0 / 3.0;
    svd.U.resize(6, 3);
    svd.V.resize(4, 3);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 3; ++c) svd.U(r, c) = normal(gen);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c) svd.V(r, c) = normal(gen);

    write_window_svd(dir.file("w.svd"), svd, "cafe");
    const WindowSVD r = read_window_svd(dir.file("w.svd"));
    CHECK(r.t0 == svd.t0);
    CHECK(r.n == svd.n);
    CHECK(r.s == svd.s);
    CHECK(r.U == svd.U);
    CHECK(r.V == svd.V);

    corrupt_line(dir.file("w.svd"), 3, "2");  // break a singular-value line
    CHECK_THROWS_AS(read_window_svd(dir.file("w.svd")), FormatError);
}

TEST_CASE("tracked paths round-trip through CSV") {
    const TempDir dir;
    TrackedPaths paths;
    paths.method = TrackMethod::ByVectors;
    paths.first_k = 2;
    paths.paths = {{{0, 0.9, 1}, {1, 0.8, -1}}, {{1, 0.4, 1}, {0, 0.35, 1}}};
    write_tracked_paths(dir.file("p.csv"), paths, "beef");

    const TrackedPaths r = read_tracked_paths(dir.file("p.csv"));
    CHECK(r.method == paths.method);
    CHECK(r.first_k == paths.first_k);
    REQUIRE(r.modes() == 2);
    REQUIRE(r.layers() == 2);
    for (int mode = 0; mode < 2; ++mode)
        for (int layer = 0; layer < 2; ++layer) {
            CHECK(r.paths[mode][layer].rank == paths.paths[mode][layer].rank);
            CHECK(r.paths[mode][layer].value == paths.paths[mode][layer].value);
            CHECK(r.paths[mode][layer].sign == paths.paths[mode][layer].sign);
        }
}

TEST_CASE("frame CSV round-trips and PGM maps the colour scale") {
    const TempDir dir;
    RasterFrame f;
    f.nx = 3;
    f.ny = 2;
    f.limit = 0.5;
    f.grid.resize(2, 3);
    f.grid << 0.5, 0.0, -0.5, 0.25, 1.0 / 3.0, 0.0;

    write_frame_csv(dir.file("f.csv"), f, "feed");
    const RasterFrame r = read_frame_csv(dir.file("f.csv"));
    CHECK(r.nx == 3);
    CHECK(r.ny == 2);
    CHECK(r.grid == f.grid);

    write_frame_pgm(dir.file("f.pgm"), f);
    const std::string pgm = slurp(dir.file("f.pgm"));
    CHECK(pgm.starts_with("P2\n3 2\n255\n"));
    CHECK(pgm.find("255") != std::string::npos);  // +limit pixel
    CHECK(pgm.find("\n255 128 0\n") != std::string::npos);

    RasterFrame zero;
    zero.nx = 2;
    zero.ny = 1;
    zero.limit = 0.0;
    zero.grid = Eigen::MatrixXd::Zero(1, 2);
    write_frame_pgm(dir.file("z.pgm"), zero);
    CHECK(slurp(dir.file("z.pgm")) == "P2\n2 1\n255\n128 128\n");
}

TEST_CASE("gridded field file round-trips and rejects shape mismatches") {
    const TempDir dir;
    GriddedFieldData d;
    d.lon0 = 0.0;
    d.dlon = 120.0;
    d.nlon = 3;
    d.lat0 = -80.0;
    d.dlat = 20.0;
    d.nlat = 2;
    d.t0 = 0.0;
    d.dt = 6.0;
    d.nt = 2;
    d.radius_m = 6.371e6;
    for (std::size_t i = 0; i < d.samples(); ++i) {
        d.u.push_back(0.25 * double(i));
        d.v.push_back(-1.0 / 3.0 * double(i));
    }
    write_gridded_field(dir.file("wind.txt"), d, "f00d");
    const GriddedFieldData r = read_gridded_field(dir.file("wind.txt"));
    CHECK(r.nlon == 3);
    CHECK(r.nlat == 2);
    CHECK(r.nt == 2);
    CHECK(r.radius_m == d.radius_m);
    CHECK(r.u == d.u);
    CHECK(r.v == d.v);

    // Drop one sample row: the reader must reject the shape mismatch.
    std::string text = slurp(dir.file("wind.txt"));
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    std::ofstream(dir.file("short.txt")) << text;
    CHECK_THROWS_AS(read_gridded_field(dir.file("short.txt")), FormatError);
}
