#ifndef CSTRACK_TRACKING_HPP
#define CSTRACK_TRACKING_HPP

#include <span>
#include <vector>

#include "cstrack/cocycle.hpp"

namespace cstrack {

enum class TrackMethod { ByValues, ByVectors };

/// One node of a tracked mode path: the rank the mode occupies at a window,
/// the singular value there, and the cumulative orientation flag that keeps
/// the mode's singular vectors sign-continuous along the path.
struct PathPoint {
    int rank = 0;  // 0-based rank within the window's SVD
    double value = 0.0;
    int sign = 1;  // +1 / -1
};

/// N mode paths over consecutive rolling windows. Paths are sorted by mean
/// singular value, descending; at every window the N paths occupy N distinct
/// ranks.
struct TrackedPaths {
    TrackMethod method = TrackMethod::ByValues;
    int first_k = 0;  // window index of layer 0
    std::vector<std::vector<PathPoint>> paths;  // [mode][layer]

    int modes() const { return static_cast<int>(paths.size()); }
    int layers() const { return paths.empty() ? 0 : static_cast<int>(paths[0].size()); }

    /// Layers where the one-step evolved vector vanished and the pairing fell
    /// back to raw vector distances (by-vectors method only).
    std::vector<int> flagged_layers;
};

/// Cost of linking singular values s_a and s_b in neighbouring windows:
/// sqrt((s_a - s_b)^2 + 1), i.e. the point distance in a plot of k vs S with
/// unit window spacing.
double edge_weight(double s_a, double s_b);

/// Mode paths through the layered window graph by iteratively extracting
/// minimum-total-cost source-to-sink paths (Dijkstra on the layered DAG with
/// zero-weight virtual endpoints), removing the used vertices after each
/// extraction. Ties break towards the lexicographically smallest rank
/// sequence.
TrackedPaths track_by_values(std::span<const WindowSVD> svds);

/// Mode paths by greedily pairing left singular vectors of neighbouring
/// windows, comparing the one-step evolved vector u^T P_k / ||u^T P_k|| with
/// both signs of each candidate in the next window. matrices must contain the
/// step matrix P_k for every consecutive window pair.
TrackedPaths track_by_vectors(std::span<const WindowSVD> svds,
                              std::span<const UlamMatrix> matrices);

}  // namespace cstrack

#endif
