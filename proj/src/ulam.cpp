#include "cstrack/ulam.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include <Eigen/SparseCore>

namespace cstrack {

Point BinPartition::bin_origin(int idx) const {
    const auto [ix, iy] = unflatten(idx);
    const Point w = bin_widths();
    return {domain.axis[0].lo + ix * w[0], domain.axis[1].lo + iy * w[1]};
}

Point BinPartition::bin_center(int idx) const {
    const Point o = bin_origin(idx);
    const Point w = bin_widths();
    return {o[0] + 0.5 * w[0], o[1] + 0.5 * w[1]};
}

std::optional<int> BinPartition::locate(const Point& p) const {
    const Point x = domain.wrapped(p);
    const Point w = bin_widths();
    int idx[2];
    for (int d = 0; d < 2; ++d) {
        const double f = (x[d] - domain.axis[d].lo) / w[d];
        int i = static_cast<int>(std::floor(f));
        if (domain.axis[d].periodic) {
            // wrapped() put x in [lo, hi); guard the f == bins edge case anyway
            if (i >= bins[d]) i = bins[d] - 1;
            if (i < 0) i = 0;
        } else if (i < 0 || i >= bins[d]) {
            return std::nullopt;
        }
        idx[d] = i;
    }
    return flatten(idx[0], idx[1]);
}

std::vector<int> BinPartition::bins_with_center_below(int axis, double threshold) const {
    std::vector<int> out;
    for (int i = 0; i < bin_count(); ++i)
        if (bin_center(i)[axis] < threshold) out.push_back(i);
    return out;
}

BinPartition make_partition(const Domain& domain, int bins_x, int bins_y) {
    if (bins_x < 1 || bins_y < 1) throw ConfigError("partition: bins must be >= 1");
    if (domain.axis[0].width() <= 0.0 || domain.axis[1].width() <= 0.0)
        throw ConfigError("partition: domain must have positive extent");
    return BinPartition{domain, {bins_x, bins_y}};
}

std::vector<Point> seed_points(const BinPartition& partition, int bin, int Q,
                               const SeedSpec& seeds) {
    if (Q < 1) throw ConfigError("seed points: Q must be >= 1");
    if (bin < 0 || bin >= partition.bin_count())
        throw ConfigError("seed points: bin index out of range");

    const Point o = partition.bin_origin(bin);
    const Point w = partition.bin_widths();
    std::vector<Point> pts;
    pts.reserve(Q);

    if (seeds.scheme == SeedScheme::Lattice) {
        const int q = static_cast<int>(std::lround(std::sqrt(double(Q))));
        if (q * q != Q)
            throw ConfigError("seed points: lattice scheme requires a square Q");
        for (int iy = 0; iy < q; ++iy)
            for (int ix = 0; ix < q; ++ix)
                pts.push_back({o[0] + w[0] * (ix + 0.5) / q, o[1] + w[1] * (iy + 0.5) / q});
    } else {
        std::mt19937_64 gen(seeds.seed ^ (0x9E3779B97F4A7C15ULL * (bin + 1)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int i = 0; i < Q; ++i) {
            const double fx = unit(gen);
            const double fy = unit(gen);
            pts.push_back({o[0] + w[0] * fx, o[1] + w[1] * fy});
        }
    }
    return pts;
}

namespace {

// Destination bins of one row's test points, as (global bin, count) sorted by
// bin id. Escaped points are dropped.
std::vector<std::pair<int, int>> row_transitions(const FlowSpec& flow,
                                                 const BinPartition& partition,
                                                 double t, int bin, int Q,
                                                 const SeedSpec& seeds) {
    std::vector<int> dests;
    dests.reserve(Q);
    for (const Point& p : seed_points(partition, bin, Q, seeds)) {
        const FlowResult r = flow_map(flow, t, p);
        if (r.escaped) continue;
        if (auto d = partition.locate(r.x)) dests.push_back(*d);
    }
    std::sort(dests.begin(), dests.end());
    std::vector<std::pair<int, int>> counts;
    for (std::size_t i = 0; i < dests.size();) {
        std::size_t j = i;
        while (j < dests.size() && dests[j] == dests[i]) ++j;
        counts.emplace_back(dests[i], static_cast<int>(j - i));
        i = j;
    }
    return counts;
}

std::vector<std::vector<std::pair<int, int>>> all_transitions(
    const FlowSpec& flow, const BinPartition& partition, double t,
    const std::vector<int>& row_bins, const UlamBuildOptions& options) {
    const int nrows = static_cast<int>(row_bins.size());
    std::vector<std::vector<std::pair<int, int>>> rows(nrows);

    const int nthreads = std::max(1, options.threads);
    if (nthreads == 1 || nrows < 2 * nthreads) {
        for (int r = 0; r < nrows; ++r)
            rows[r] = row_transitions(flow, partition, t, row_bins[r], options.Q,
                                      options.seeds);
        return rows;
    }

    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < nthreads; ++w) {
        pool.emplace_back([&] {
            try {
                for (;;) {
                    const int r = next.fetch_add(1);
                    if (r >= nrows) return;
                    rows[r] = row_transitions(flow, partition, t, row_bins[r], options.Q,
                                              options.seeds);
                }
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(nrows);
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

UlamMatrix assemble(const FlowSpec& flow, const BinPartition& partition, double t,
                    const std::vector<int>& row_bins, std::vector<int> col_bins,
                    bool grow_columns, const UlamBuildOptions& options) {
    if (options.Q < 1) throw ConfigError("ulam build: Q must be >= 1");
    if (!(flow.domain.axis[0].lo == partition.domain.axis[0].lo &&
          flow.domain.axis[0].hi == partition.domain.axis[0].hi &&
          flow.domain.axis[1].lo == partition.domain.axis[1].lo &&
          flow.domain.axis[1].hi == partition.domain.axis[1].hi))
        throw ConfigError("ulam build: flow and partition domains differ");

    const auto rows = all_transitions(flow, partition, t, row_bins, options);

    std::unordered_map<int, int> col_of;
    col_of.reserve(col_bins.size() * 2);
    for (std::size_t c = 0; c < col_bins.size(); ++c)
        col_of.emplace(col_bins[c], static_cast<int>(c));

    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
        for (const auto& [gbin, count] : rows[r]) {
            auto it = col_of.find(gbin);
            if (it == col_of.end()) {
                if (!grow_columns) continue;  // unreachable in full-domain mode
                it = col_of.emplace(gbin, static_cast<int>(col_bins.size())).first;
                col_bins.push_back(gbin);
            }
            trip.emplace_back(r, it->second, double(count) / options.Q);
        }
    }

    UlamMatrix m;
    m.t = t;
    m.tau = flow.tau;
    m.Q = options.Q;
    m.row_bins = row_bins;
    m.col_bins = std::move(col_bins);
    m.P.resize(m.rows(), m.cols());
    m.P.setFromTriplets(trip.begin(), trip.end());
    m.P.makeCompressed();
    return m;
}

}  // namespace

bool UlamMatrix::identity_ids() const {
    for (int i = 0; i < rows(); ++i)
        if (row_bins[i] != i) return false;
    for (int i = 0; i < cols(); ++i)
        if (col_bins[i] != i) return false;
    return true;
}

UlamMatrix build_ulam(const FlowSpec& flow, const BinPartition& partition, double t,
                      const UlamBuildOptions& options) {
    std::vector<int> all(partition.bin_count());
    for (int i = 0; i < partition.bin_count(); ++i) all[i] = i;
    return assemble(flow, partition, t, all, all, /*grow=*/false, options);
}

UlamMatrix build_ulam_rectangular(const FlowSpec& flow, const BinPartition& partition,
                                  double t, const std::vector<int>& row_bins,
                                  const UlamBuildOptions& options) {
    if (row_bins.empty()) throw ConfigError("ulam build: no seeded bins");
    return assemble(flow, partition, t, row_bins, row_bins, /*grow=*/true, options);
}

std::vector<UlamMatrix> build_window_chain(const FlowSpec& flow,
                                           const BinPartition& partition, double t0,
                                           int n, const std::vector<int>& seed_bins,
                                           const UlamBuildOptions& options) {
    std::vector<UlamMatrix> chain;
    chain.reserve(n);
    std::vector<int> rows = seed_bins;
    for (int j = 0; j < n; ++j) {
        chain.push_back(
            build_ulam_rectangular(flow, partition, t0 + j * flow.tau, rows, options));
        rows = chain.back().col_bins;
    }
    return chain;
}

}  // namespace cstrack
