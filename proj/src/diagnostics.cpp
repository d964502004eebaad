#include "cstrack/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace cstrack {

namespace {

Eigen::VectorXd evolve_raw(const Eigen::VectorXd& u, std::span<const UlamMatrix> matrices,
                           int k, int n_tilde) {
    if (n_tilde < 0) throw ConfigError("evolve mode: n_tilde must be >= 0");
    if (k < 0 || k + n_tilde > static_cast<int>(matrices.size()))
        throw ConfigError("evolve mode: window exceeds the matrix sequence");
    Eigen::VectorXd x = u;
    for (int i = 0; i < n_tilde; ++i) {
        const UlamMatrix& P = matrices[k + i];
        if (P.rows() != x.size())
            throw ConfigError("evolve mode: vector does not match matrix rows");
        x = P.P.transpose() * x;
    }
    return x;
}

}  // namespace

EvolvedMode evolve_mode(const Eigen::VectorXd& u, std::span<const UlamMatrix> matrices,
                        int k, int n_tilde) {
    Eigen::VectorXd x = evolve_raw(u, matrices, k, n_tilde);
    const double nrm = x.norm();
    if (nrm <= 0.0) return {std::move(x), true};
    x /= nrm;
    return {std::move(x), false};
}

double coherence_log(const Eigen::VectorXd& u, std::span<const UlamMatrix> matrices,
                     int k, int n_t) {
    if (n_t < 1) throw ConfigError("coherence log: n_t must be >= 1");
    const double nrm = evolve_raw(u, matrices, k, n_t).norm();
    if (nrm <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(nrm) / n_t;
}

double equivariance_mismatch(const Eigen::VectorXd& v, const Eigen::VectorXd& u_next) {
    if (v.size() != u_next.size())
        throw ConfigError("equivariance: vectors must share an index set");
    const double plus = (v + u_next).norm();
    const double minus = (v - u_next).norm();
    return std::min(plus, minus) / std::sqrt(2.0);
}

double equivariance_mismatch(const Eigen::VectorXd& v, std::span<const int> v_bins,
                             const Eigen::VectorXd& u_next,
                             std::span<const int> u_bins) {
    if (v.size() != static_cast<Eigen::Index>(v_bins.size()) ||
        u_next.size() != static_cast<Eigen::Index>(u_bins.size()))
        throw ConfigError("equivariance: id list does not match vector length");

    std::unordered_map<int, int> upos;
    upos.reserve(u_bins.size() * 2);
    for (std::size_t i = 0; i < u_bins.size(); ++i) upos.emplace(u_bins[i], int(i));

    std::vector<double> a, b;
    for (std::size_t i = 0; i < v_bins.size(); ++i) {
        const auto it = upos.find(v_bins[i]);
        if (it == upos.end()) continue;
        a.push_back(v[static_cast<Eigen::Index>(i)]);
        b.push_back(u_next[it->second]);
    }
    if (a.empty()) return 1.0;
    Eigen::Map<Eigen::VectorXd> va(a.data(), a.size());
    Eigen::Map<Eigen::VectorXd> vb(b.data(), b.size());
    const double na = va.norm(), nb = vb.norm();
    if (na <= 0.0 || nb <= 0.0) return 1.0;
    return equivariance_mismatch(Eigen::VectorXd(va / na), Eigen::VectorXd(vb / nb));
}

EquivarianceSeries equivariance_series(std::span<const WindowSVD> svds,
                                       const TrackedPaths& paths, int n) {
    if (svds.empty()) throw ConfigError("equivariance series: no windows");
    if (n < 1) throw ConfigError("equivariance series: n must be >= 1");
    const int layers = static_cast<int>(svds.size());
    if (paths.layers() != layers || paths.first_k != svds[0].k)
        throw ConfigError("equivariance series: paths and windows disagree");
    for (int i = 0; i < layers; ++i)
        if (svds[i].k != svds[0].k + i)
            throw ConfigError("equivariance series: windows are not consecutive");

    EquivarianceSeries out;
    out.method = paths.method;
    out.first_k = svds[0].k;
    out.n = n;
    out.sigma.resize(paths.modes());
    for (int j = 0; j < paths.modes(); ++j) {
        for (int i = 0; i + n < layers; ++i) {
            const int rank_here = paths.paths[j][i].rank;
            const int rank_next = paths.paths[j][i + n].rank;
            out.sigma[j].push_back(equivariance_mismatch(
                svds[i].V.col(rank_here), svds[i + n].U.col(rank_next)));
        }
    }
    return out;
}

FsmResult fsm_normalize(const Eigen::VectorXd& evolved_mode,
                        const Eigen::VectorXd& evolved_leading) {
    if (evolved_mode.size() != evolved_leading.size())
        throw ConfigError("fsm normalize: vectors must share an index set");
    FsmResult out;
    out.v.resize(evolved_mode.size());
    for (Eigen::Index i = 0; i < evolved_mode.size(); ++i) {
        if (evolved_leading[i] == 0.0) {
            out.v[i] = 0.0;
            if (evolved_mode[i] != 0.0) out.masked.push_back(static_cast<int>(i));
        } else {
            out.v[i] = evolved_mode[i] / evolved_leading[i];
        }
    }
    const double sup = out.v.cwiseAbs().maxCoeff();
    if (sup > 0.0) out.v /= sup;
    return out;
}

ModeFrames animate_mode(const WindowSVD& svd, const TrackedPaths& paths, int mode,
                        std::span<const UlamMatrix> matrices) {
    if (mode < 1 || mode > paths.modes())
        throw ConfigError("animate: mode out of range");
    const int layer = svd.k - paths.first_k;
    if (layer < 0 || layer >= paths.layers())
        throw ConfigError("animate: window not covered by the tracked paths");

    const PathPoint& pp = paths.paths[mode - 1][layer];
    Eigen::VectorXd u = svd.U.col(pp.rank) * double(pp.sign);

    ModeFrames out;
    out.t0 = svd.t0;
    out.n = svd.n;
    out.mode = mode;
    out.colour_limit = u.cwiseAbs().maxCoeff();
    for (int nt = 0; nt <= svd.n; ++nt) {
        out.frames.push_back(evolve_mode(u, matrices, svd.k, nt));
        const std::vector<int>& ids =
            nt == 0 ? matrices[svd.k].row_bins : matrices[svd.k + nt - 1].col_bins;
        out.frame_bins.push_back(ids);
    }
    return out;
}

RasterFrame render_frame(const Eigen::VectorXd& frame, const BinPartition& partition,
                         std::span<const int> bins, double limit) {
    if (frame.size() != static_cast<Eigen::Index>(bins.size()))
        throw ConfigError("render frame: id list does not match vector length");
    RasterFrame out;
    out.nx = partition.bins[0];
    out.ny = partition.bins[1];
    out.limit = limit;
    out.grid = Eigen::MatrixXd::Zero(out.ny, out.nx);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const int b = bins[i];
        if (b < 0 || b >= partition.bin_count())
            throw ConfigError("render frame: bin id out of range");
        const auto [ix, iy] = partition.unflatten(b);
        out.grid(out.ny - 1 - iy, ix) = frame[static_cast<Eigen::Index>(i)];
    }
    return out;
}

}  // namespace cstrack
