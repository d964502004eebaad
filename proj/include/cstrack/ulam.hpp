#ifndef CSTRACK_ULAM_HPP
#define CSTRACK_ULAM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "cstrack/integrate.hpp"
#include "cstrack/types.hpp"

namespace cstrack {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Rectangular grid of half-open bins tiling the domain exactly. Bin indices
/// are row-major with the x axis fastest: index = ix + nx * iy.
struct BinPartition {
    Domain domain;
    std::array<int, 2> bins{1, 1};

    int bin_count() const { return bins[0] * bins[1]; }

    int flatten(int ix, int iy) const { return ix + bins[0] * iy; }
    std::array<int, 2> unflatten(int idx) const { return {idx % bins[0], idx / bins[0]}; }

    Point bin_widths() const {
        return {domain.axis[0].width() / bins[0], domain.axis[1].width() / bins[1]};
    }
    Point bin_origin(int idx) const;
    Point bin_center(int idx) const;

    /// Bin containing x, after wrapping periodic axes. Points on a boundary
    /// belong to the bin of the lower-indexed corner; points outside the
    /// domain (or exactly on the non-periodic upper bound) belong to none.
    std::optional<int> locate(const Point& x) const;

    /// Bins whose centre coordinate along `axis` is strictly below the
    /// threshold, in ascending index order (growing-domain seeding).
    std::vector<int> bins_with_center_below(int axis, double threshold) const;
};

BinPartition make_partition(const Domain& domain, int bins_x, int bins_y);

enum class SeedScheme { Lattice, Rng };

struct SeedSpec {
    SeedScheme scheme = SeedScheme::Lattice;
    std::uint64_t seed = 0;
};

/// Q test points inside one bin. The lattice scheme places the centred
/// sqrt(Q) x sqrt(Q) sublattice (Q must be a perfect square); the rng scheme
/// draws Q i.i.d. uniform points from a generator seeded by (seed, bin).
std::vector<Point> seed_points(const BinPartition& partition, int bin, int Q,
                               const SeedSpec& seeds);

/// Single-step Ulam transition matrix: entry (i, j) is the fraction of the Q
/// test points of bin row_bins[i] that land in bin col_bins[j]. Rows are
/// substochastic; escaped points contribute to no column.
struct UlamMatrix {
    double t = 0.0;
    double tau = 0.0;
    int Q = 0;
    std::vector<int> row_bins;  // global bin ids, one per matrix row
    std::vector<int> col_bins;  // global bin ids, one per matrix column
    SparseMat P;

    int rows() const { return static_cast<int>(row_bins.size()); }
    int cols() const { return static_cast<int>(col_bins.size()); }

    /// True when row and column index lists are both the identity 0..m-1.
    bool identity_ids() const;
};

struct UlamBuildOptions {
    int Q = 100;
    SeedSpec seeds{};
    int threads = 1;
};

/// Full-domain matrix: rows and columns both run over every bin.
UlamMatrix build_ulam(const FlowSpec& flow, const BinPartition& partition, double t,
                      const UlamBuildOptions& options);

/// Growing-domain step: rows are the given (occupied) bins; columns start as a
/// copy of the rows and are extended by every bin actually hit.
UlamMatrix build_ulam_rectangular(const FlowSpec& flow, const BinPartition& partition,
                                  double t, const std::vector<int>& row_bins,
                                  const UlamBuildOptions& options);

/// n-step growing-domain chain from the seeded bins: the row set of each step
/// equals the column set of the previous one.
std::vector<UlamMatrix> build_window_chain(const FlowSpec& flow,
                                           const BinPartition& partition, double t0,
                                           int n, const std::vector<int>& seed_bins,
                                           const UlamBuildOptions& options);

}  // namespace cstrack

#endif
