#include "cstrack/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cstrack {

double edge_weight(double s_a, double s_b) {
    const double d = s_a - s_b;
    return std::sqrt(d * d + 1.0);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum-cost source-to-sink path over the still-available nodes of the
// layered graph, as the sequence of ranks per layer. Virtual source and sink
// edges have zero weight, so the cost is the sum of layer-to-layer edge
// weights. Among equal-cost paths the lexicographically smallest rank
// sequence wins; prefixes are carried per node, which preserves that order
// under extension.
std::vector<int> extract_min_path(const std::vector<std::vector<double>>& values,
                                  const std::vector<std::vector<char>>& removed) {
    const int layers = static_cast<int>(values.size());
    const int ranks = static_cast<int>(values[0].size());

    std::vector<double> cost(ranks), next_cost(ranks);
    std::vector<std::string> prefix(ranks), next_prefix(ranks);

    for (int j = 0; j < ranks; ++j) {
        cost[j] = removed[0][j] ? kInf : 0.0;
        prefix[j] = std::string(1, static_cast<char>(j));
    }
    for (int k = 1; k < layers; ++k) {
        for (int j = 0; j < ranks; ++j) {
            next_cost[j] = kInf;
            next_prefix[j].clear();
            if (removed[k][j]) continue;
            for (int i = 0; i < ranks; ++i) {
                if (cost[i] == kInf) continue;
                const double c = cost[i] + edge_weight(values[k - 1][i], values[k][j]);
                if (c < next_cost[j] ||
                    (c == next_cost[j] && prefix[i] < next_prefix[j])) {
                    next_cost[j] = c;
                    next_prefix[j] = prefix[i];
                }
            }
            next_prefix[j].push_back(static_cast<char>(j));
        }
        cost = next_cost;
        prefix.swap(next_prefix);
    }

    int best = -1;
    for (int j = 0; j < ranks; ++j) {
        if (cost[j] == kInf) continue;
        if (best < 0 || cost[j] < cost[best] ||
            (cost[j] == cost[best] && prefix[j] < prefix[best]))
            best = j;
    }
    if (best < 0) throw NumericalError("tracking: no path left in the graph");

    std::vector<int> path(layers);
    for (int k = 0; k < layers; ++k) path[k] = static_cast<int>(prefix[best][k]);
    return path;
}

// Cumulative sign flags keeping a mode's left singular vectors
// sign-continuous along its path: flip whenever the inner product with the
// previous window's (already oriented) paired vector is negative.
void assign_signs_by_continuity(std::span<const WindowSVD> svds,
                                std::vector<PathPoint>& path) {
    path[0].sign = 1;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double ip = svds[i].U.col(path[i].rank).dot(svds[i + 1].U.col(path[i + 1].rank));
        const int step = ip < 0.0 ? -1 : 1;
        path[i + 1].sign = path[i].sign * step;
    }
}

// Order paths by mean value along the path, descending; stable so that ties
// keep extraction order.
void sort_paths_by_mean(std::vector<std::vector<PathPoint>>& paths) {
    std::vector<double> mean(paths.size(), 0.0);
    for (std::size_t p = 0; p < paths.size(); ++p) {
        for (const PathPoint& q : paths[p]) mean[p] += q.value;
        mean[p] /= static_cast<double>(paths[p].size());
    }
    std::vector<std::size_t> order(paths.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
    std::vector<std::vector<PathPoint>> sorted;
    sorted.reserve(paths.size());
    for (std::size_t i : order) sorted.push_back(std::move(paths[i]));
    paths = std::move(sorted);
}

int check_common_rank_count(std::span<const WindowSVD> svds) {
    if (svds.empty()) throw ConfigError("tracking: no windows");
    const int N = static_cast<int>(svds[0].s.size());
    for (const WindowSVD& w : svds)
        if (static_cast<int>(w.s.size()) != N)
            throw ConfigError("tracking: windows disagree on the number of modes");
    return N;
}

}  // namespace

TrackedPaths track_by_values(std::span<const WindowSVD> svds) {
    const int N = check_common_rank_count(svds);
    const int layers = static_cast<int>(svds.size());

    std::vector<std::vector<double>> values(layers, std::vector<double>(N));
    for (int k = 0; k < layers; ++k)
        for (int j = 0; j < N; ++j) values[k][j] = svds[k].s[j];

    std::vector<std::vector<char>> removed(layers, std::vector<char>(N, 0));
    std::vector<std::vector<PathPoint>> paths;
    for (int p = 0; p < N; ++p) {
        const std::vector<int> ranks = extract_min_path(values, removed);
        std::vector<PathPoint> path(layers);
        for (int k = 0; k < layers; ++k) {
            path[k].rank = ranks[k];
            path[k].value = values[k][ranks[k]];
            removed[k][ranks[k]] = 1;
        }
        paths.push_back(std::move(path));
    }

    sort_paths_by_mean(paths);
    TrackedPaths out;
    out.method = TrackMethod::ByValues;
    out.first_k = svds[0].k;
    out.paths = std::move(paths);
    for (auto& path : out.paths) assign_signs_by_continuity(svds, path);
    return out;
}

TrackedPaths track_by_vectors(std::span<const WindowSVD> svds,
                              std::span<const UlamMatrix> matrices) {
    const int N = check_common_rank_count(svds);
    const int layers = static_cast<int>(svds.size());

    TrackedPaths out;
    out.method = TrackMethod::ByVectors;
    out.first_k = svds[0].k;

    // pairing[k](j') = j'' and the sign attaining the +- minimum.
    std::vector<std::vector<int>> pair_to(std::max(0, layers - 1), std::vector<int>(N));
    std::vector<std::vector<int>> pair_sign(std::max(0, layers - 1), std::vector<int>(N));

    for (int step = 0; step + 1 < layers; ++step) {
        const WindowSVD& a = svds[step];
        const WindowSVD& b = svds[step + 1];
        const int kidx = a.k;
        if (kidx < 0 || kidx >= static_cast<int>(matrices.size()))
            throw MissingArtifactError("tracking: step matrix P_k missing for window " +
                                       std::to_string(kidx));
        const UlamMatrix& P = matrices[kidx];
        if (P.rows() != a.U.rows() || P.cols() != b.U.rows())
            throw ConfigError("tracking: step matrix shape does not match the windows");

        // One-step evolved, normalised left vectors of window k.
        Eigen::MatrixXd evolved(P.cols(), N);
        bool flagged = false;
        for (int j = 0; j < N; ++j) {
            Eigen::VectorXd w = P.P.transpose() * a.U.col(j);
            const double nrm = w.norm();
            if (nrm > 0.0) {
                evolved.col(j) = w / nrm;
            } else {
                // All mass escaped: fall back to the raw vector and flag it.
                evolved.col(j).setZero();
                if (evolved.rows() == a.U.rows()) evolved.col(j) = a.U.col(j);
                flagged = true;
            }
        }
        if (flagged) out.flagged_layers.push_back(step);

        // Greedy pairing: repeatedly take the globally smallest +- distance
        // over the remaining (j', j'') pairs; ties fall to the lowest ranks.
        Eigen::MatrixXd dist(N, N);
        Eigen::MatrixXi sgn(N, N);
        for (int jp = 0; jp < N; ++jp)
            for (int jq = 0; jq < N; ++jq) {
                const double ip = evolved.col(jp).dot(b.U.col(jq));
                const double plus = (evolved.col(jp) + b.U.col(jq)).norm();
                const double minus = (evolved.col(jp) - b.U.col(jq)).norm();
                dist(jp, jq) = std::min(plus, minus);
                sgn(jp, jq) = ip < 0.0 ? -1 : 1;
            }
        std::vector<char> used_p(N, 0), used_q(N, 0);
        for (int round = 0; round < N; ++round) {
            int bp = -1, bq = -1;
            for (int jp = 0; jp < N; ++jp) {
                if (used_p[jp]) continue;
                for (int jq = 0; jq < N; ++jq) {
                    if (used_q[jq]) continue;
                    if (bp < 0 || dist(jp, jq) < dist(bp, bq)) {
                        bp = jp;
                        bq = jq;
                    }
                }
            }
            used_p[bp] = used_q[bq] = 1;
            pair_to[step][bp] = bq;
            pair_sign[step][bp] = sgn(bp, bq);
        }
    }

    // Initial association: path j starts at rank j, then follows the pairings.
    std::vector<std::vector<PathPoint>> paths(N, std::vector<PathPoint>(layers));
    for (int j = 0; j < N; ++j) {
        int rank = j;
        int sign = 1;
        paths[j][0] = {rank, svds[0].s[rank], sign};
        for (int step = 0; step + 1 < layers; ++step) {
            sign *= pair_sign[step][rank];
            rank = pair_to[step][rank];
            paths[j][step + 1] = {rank, svds[step + 1].s[rank], sign};
        }
    }

    sort_paths_by_mean(paths);
    out.paths = std::move(paths);
    return out;
}

}  // namespace cstrack
