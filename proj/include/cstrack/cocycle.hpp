#ifndef CSTRACK_COCYCLE_HPP
#define CSTRACK_COCYCLE_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cstrack/ulam.hpp"

namespace cstrack {

/// Ordered product P_k P_{k+1} ... P_{k+n-1} of step matrices, kept in
/// factored form and applied by running mat-vecs through the chain. Small
/// products (every dimension <= dense_threshold) are additionally multiplied
/// out once, so repeated applies hit the explicit matrix.
class WindowOperator {
  public:
    explicit WindowOperator(std::vector<const UlamMatrix*> chain,
                            int dense_threshold = kDefaultDenseThreshold);

    /// Zero-length window: the identity on an m-dimensional space.
    static WindowOperator identity(int m);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int steps() const { return static_cast<int>(chain_.size()); }

    /// y^T = x^T P_k ... P_{k+n-1} (forward through the chain); x has rows()
    /// entries, the result cols().
    Eigen::VectorXd apply_left(const Eigen::VectorXd& x) const;

    /// y = P_k ... P_{k+n-1} w (reverse through the chain); w has cols()
    /// entries, the result rows().
    Eigen::VectorXd apply_right(const Eigen::VectorXd& w) const;

    /// The explicitly multiplied product (test oracle / small problems).
    Eigen::MatrixXd dense() const;

    const std::vector<const UlamMatrix*>& factors() const { return chain_; }

    static constexpr int kDefaultDenseThreshold = 1024;

  private:
    WindowOperator() = default;

    std::vector<const UlamMatrix*> chain_;
    int rows_ = 0;
    int cols_ = 0;
    std::optional<Eigen::MatrixXd> cached_;
};

/// Factored product of matrices[k .. k+n-1]; n = 0 gives the identity on the
/// row space of matrices[k].
WindowOperator window_product(std::span<const UlamMatrix> matrices, int k, int n,
                              int dense_threshold = WindowOperator::kDefaultDenseThreshold);

/// Top singular triples of one rolling window.
struct WindowSVD {
    int k = 0;        // window start index within the matrix sequence
    double t0 = 0.0;  // window start time label
    int n = 0;        // window length in steps
    Eigen::VectorXd s;  // N singular values, descending
    Eigen::MatrixXd U;  // rows() x N left singular vectors
    Eigen::MatrixXd V;  // cols() x N right singular vectors
};

struct SvdOptions {
    double tol = 1e-10;  // on singular-value Rayleigh residuals, relative to s1
    int max_iterations = 0;  // 0 = 10 * N * sqrt(m), capped at min(m, m')
};

/// Top-N singular triples via Golub-Kahan-Lanczos bidiagonalisation with full
/// reorthogonalisation, applying mat-vecs through the factored chain. The
/// start vector is deterministic, and each returned u_j is flipped so its
/// entry of largest magnitude is nonnegative. Throws NumericalError (with the
/// residual achieved) if the iteration fails to converge.
WindowSVD truncated_svd(const WindowOperator& map, int N, const SvdOptions& options = {});

struct RollingOptions {
    int N = 4;
    int threads = 1;
    int dense_threshold = WindowOperator::kDefaultDenseThreshold;
    SvdOptions svd{};
};

/// One WindowSVD per window start k = 0 .. #matrices - n.
std::vector<WindowSVD> rolling_windows(std::span<const UlamMatrix> matrices, int n,
                                       const RollingOptions& options);

/// Per-window growing-domain variant: one pre-built chain per window start.
std::vector<WindowSVD> rolling_windows_chained(
    std::span<const std::vector<UlamMatrix>> chains, const RollingOptions& options);

/// Lyapunov-exponent estimate (1/n) log s_j; j is 0-based. s_j = 0 maps to
/// -infinity.
double lyapunov_rate(const WindowSVD& svd, int j);

}  // namespace cstrack

#endif
