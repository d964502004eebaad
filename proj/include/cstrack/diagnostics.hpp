#ifndef CSTRACK_DIAGNOSTICS_HPP
#define CSTRACK_DIAGNOSTICS_HPP

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cstrack/tracking.hpp"
#include "cstrack/ulam.hpp"

namespace cstrack {

/// A left singular vector evolved forward through the cocycle and normalised;
/// `empty` is set when all mass escaped (zero norm before normalisation).
struct EvolvedMode {
    Eigen::VectorXd v;
    bool empty = false;
};

/// u^T P_k^(n_tilde) / || . ||_2 : the mode after n_tilde steps of the window
/// starting at matrix index k. n_tilde = 0 returns u itself.
EvolvedMode evolve_mode(const Eigen::VectorXd& u, std::span<const UlamMatrix> matrices,
                        int k, int n_tilde);

/// (1/n_t) log || u^T P_k^(n_t) ||_2 ; -infinity when the norm vanishes.
double coherence_log(const Eigen::VectorXd& u, std::span<const UlamMatrix> matrices,
                     int k, int n_t);

/// Equivariance mismatch between a window's final vector v and the next
/// window's initial vector u_next:
///   min(||v + u||_2, ||v - u||_2) / sqrt(2)  in [0, 1] for unit vectors;
/// 0 iff v = +-u, 1 iff they are orthogonal.
double equivariance_mismatch(const Eigen::VectorXd& v, const Eigen::VectorXd& u_next);

/// Growing-domain variant: both vectors are restricted to the intersection of
/// their bin-id index sets and renormalised before comparing. An empty
/// intersection (or a vanishing restriction) counts as maximal mismatch.
double equivariance_mismatch(const Eigen::VectorXd& v, std::span<const int> v_bins,
                             const Eigen::VectorXd& u_next,
                             std::span<const int> u_bins);

/// Mismatch series per tracked mode: at window k, the path-selected right
/// vector of window k is compared with the path-selected left vector of
/// window k+n.
struct EquivarianceSeries {
    TrackMethod method = TrackMethod::ByValues;
    int first_k = 0;
    int n = 0;
    std::vector<std::vector<double>> sigma;  // [mode][k offset]
};

EquivarianceSeries equivariance_series(std::span<const WindowSVD> svds,
                                       const TrackedPaths& paths, int n);

/// Entrywise quotient of an evolved mode by the evolved leading mode,
/// rescaled to unit sup-norm. Entries where the leading mode vanishes are
/// masked to zero and reported.
struct FsmResult {
    Eigen::VectorXd v;
    std::vector<int> masked;  // indices divided out
};

FsmResult fsm_normalize(const Eigen::VectorXd& evolved_mode,
                        const Eigen::VectorXd& evolved_leading);

/// The frames of one animated window: the mode's left vector evolved for
/// n_tilde = 0..n steps, each normalised. colour_limit is max|u| of the
/// unevolved vector and fixes the symmetric colour scale of every frame.
struct ModeFrames {
    double t0 = 0.0;
    int n = 0;
    int mode = 0;  // 1-based, as reported in files
    double colour_limit = 0.0;
    std::vector<EvolvedMode> frames;             // n+1 entries
    std::vector<std::vector<int>> frame_bins;    // bin ids per frame entry
};

ModeFrames animate_mode(const WindowSVD& svd, const TrackedPaths& paths, int mode,
                        std::span<const UlamMatrix> matrices);

/// A frame mapped onto the partition raster. Row 0 is the highest y (top of
/// the picture); column c is the x bin c.
struct RasterFrame {
    int nx = 0, ny = 0;
    Eigen::MatrixXd grid;  // ny x nx
    double limit = 0.0;    // colour scale is [-limit, +limit]
};

RasterFrame render_frame(const Eigen::VectorXd& frame, const BinPartition& partition,
                         std::span<const int> bins, double limit);

}  // namespace cstrack

#endif
