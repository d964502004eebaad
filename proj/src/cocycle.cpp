#include "cstrack/cocycle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace cstrack {

WindowOperator::WindowOperator(std::vector<const UlamMatrix*> chain, int dense_threshold)
    : chain_(std::move(chain)) {
    if (chain_.empty()) throw ConfigError("window product: empty chain");
    for (std::size_t i = 0; i + 1 < chain_.size(); ++i) {
        if (chain_[i]->col_bins != chain_[i + 1]->row_bins)
            throw ConfigError("window product: column index of factor " +
                              std::to_string(i) + " does not match the next row index");
    }
    rows_ = chain_.front()->rows();
    cols_ = chain_.back()->cols();

    int max_dim = 0;
    for (const UlamMatrix* m : chain_)
        max_dim = std::max({max_dim, m->rows(), m->cols()});
    if (max_dim <= dense_threshold && chain_.size() > 1) cached_ = dense();
}

WindowOperator WindowOperator::identity(int m) {
    if (m < 1) throw ConfigError("window product: identity needs m >= 1");
    WindowOperator op;
    op.rows_ = op.cols_ = m;
    return op;
}

Eigen::VectorXd WindowOperator::apply_left(const Eigen::VectorXd& x) const {
    if (x.size() != rows_) throw ConfigError("window product: apply_left size mismatch");
    if (chain_.empty()) return x;
    if (cached_) return cached_->transpose() * x;
    Eigen::VectorXd y = x;
    for (const UlamMatrix* m : chain_) y = m->P.transpose() * y;
    return y;
}

Eigen::VectorXd WindowOperator::apply_right(const Eigen::VectorXd& w) const {
    if (w.size() != cols_) throw ConfigError("window product: apply_right size mismatch");
    if (chain_.empty()) return w;
    if (cached_) return *cached_ * w;
    Eigen::VectorXd y = w;
    for (auto it = chain_.rbegin(); it != chain_.rend(); ++it) y = (*it)->P * y;
    return y;
}

Eigen::MatrixXd WindowOperator::dense() const {
    if (chain_.empty()) return Eigen::MatrixXd::Identity(rows_, cols_);
    if (cached_) return *cached_;
    Eigen::MatrixXd acc = chain_.front()->P;
    for (std::size_t i = 1; i < chain_.size(); ++i) acc = acc * chain_[i]->P;
    return acc;
}

WindowOperator window_product(std::span<const UlamMatrix> matrices, int k, int n,
                              int dense_threshold) {
    if (n < 0 || k < 0) throw ConfigError("window product: k and n must be >= 0");
    if (n == 0) {
        if (k >= static_cast<int>(matrices.size()))
            throw ConfigError("window product: k out of range");
        return WindowOperator::identity(matrices[k].rows());
    }
    if (k + n > static_cast<int>(matrices.size()))
        throw ConfigError("window product: window extends past the matrix sequence");
    std::vector<const UlamMatrix*> chain(n);
    for (int i = 0; i < n; ++i) chain[i] = &matrices[k + i];
    return WindowOperator(std::move(chain), dense_threshold);
}

namespace {

// Deterministic unit start vector: all-ones plus a fixed perturbation so the
// solver needs no RNG and re-runs are bit-stable.
Eigen::VectorXd start_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 1.0 + 1e-3 * std::sin(0.7 * i + 0.3);
    v.normalize();
    return v;
}

// Orthogonalise r against the basis (two passes); returns the resulting norm.
double reorthogonalise(Eigen::VectorXd& r, const std::vector<Eigen::VectorXd>& basis) {
    for (int pass = 0; pass < 2; ++pass)
        for (const Eigen::VectorXd& b : basis) r -= b.dot(r) * b;
    return r.norm();
}

// Deterministic replacement direction orthogonal to the basis, used when the
// bidiagonalisation exhausts an invariant subspace before N triples converged.
Eigen::VectorXd fresh_direction(int dim, const std::vector<Eigen::VectorXd>& basis,
                                int& cursor) {
    while (cursor < dim) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
        e[cursor++] = 1.0;
        const double nrm = reorthogonalise(e, basis);
        if (nrm > 1e-8) return e / nrm;
    }
    throw NumericalError("truncated svd: no direction left for restart");
}

}  // namespace

WindowSVD truncated_svd(const WindowOperator& map, int N, const SvdOptions& options) {
    const int m = map.rows();
    const int mp = map.cols();
    const int p = std::min(m, mp);
    if (N < 1) throw ConfigError("truncated svd: N must be >= 1");
    if (N > p) throw ConfigError("truncated svd: N exceeds min(m, m')");

    int max_iter = options.max_iterations;
    if (max_iter <= 0)
        max_iter = static_cast<int>(std::ceil(10.0 * N * std::sqrt(double(m))));
    max_iter = std::min(std::max(max_iter, N), p);

    constexpr double kBreakdown = 1e-13;

    // Golub-Kahan recurrence:
    //   alpha_j u_j  = A v_j      - beta_{j-1} u_{j-1}
    //   beta_j v_{j+1} = A^T u_j  - alpha_j v_j
    // so A V_j = U_j B_j and A^T U_j = V_j B_j^T + beta_j v_{j+1} e_j^T with
    // B_j upper bidiagonal (alpha on the diagonal, beta above it).
    std::vector<Eigen::VectorXd> vbasis, ubasis;
    std::vector<double> alpha, beta;
    int vcursor = 0, ucursor = 0;
    Eigen::VectorXd prev_ritz;  // top-N values at the previous residual check
    // Final recurrence column at termination. When m < m' the bidiagonalisation
    // needs one more right vector than left ones; dropping it would replace the
    // smallest singular values by interlaced impostors.
    double final_beta = 0.0;
    Eigen::VectorXd final_v;

    vbasis.push_back(start_vector(mp));
    {
        Eigen::VectorXd u = map.apply_right(vbasis[0]);
        double a = u.norm();
        if (!std::isfinite(a)) throw NumericalError("truncated svd: non-finite mat-vec");
        if (a <= kBreakdown) {
            ubasis.push_back(fresh_direction(m, ubasis, ucursor));
            alpha.push_back(0.0);
        } else {
            ubasis.push_back(u / a);
            alpha.push_back(a);
        }
    }

    for (;;) {
        const int j = static_cast<int>(alpha.size());  // completed GKL steps

        Eigen::VectorXd r = map.apply_left(ubasis.back());
        r -= alpha.back() * vbasis.back();
        const double beta_j = reorthogonalise(r, vbasis);
        if (!std::isfinite(beta_j))
            throw NumericalError("truncated svd: non-finite mat-vec");

        // Ritz residual check for B_j. B_j^T B_j is tridiagonal; its
        // eigenpairs give sigma_i = sqrt(lambda_i) and right vectors psi_i,
        // and the residual of triple i is
        //   ||A^T u_hat_i - sigma_i v_hat_i|| = beta_j |phi_i[j-1]|
        // with phi_i[j-1] = alpha_{j} psi_i[j-1] / sigma_i.
        // Residual smallness alone can misconverge: every Ritz triple may sit
        // near a genuine singular triple while a slowly-emerging direction is
        // still missing from the Krylov space entirely. Guard with a minimum
        // basis size and demand the top-N Ritz values hold still between two
        // consecutive checks.
        const int min_steps = std::min(p, 2 * N + 6);
        bool converged = false;
        double worst = std::numeric_limits<double>::infinity();
        if (j >= min_steps) {
            Eigen::VectorXd d(j), e(std::max(0, j - 1));
            for (int i = 0; i < j; ++i)
                d[i] = alpha[i] * alpha[i] + (i > 0 ? beta[i - 1] * beta[i - 1] : 0.0);
            for (int i = 0; i + 1 < j; ++i) e[i] = alpha[i] * beta[i];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(d, e);
            const auto& lam = es.eigenvalues();  // ascending
            const double s1 = std::sqrt(std::max(0.0, lam[j - 1]));
            const double scale = std::max(s1, 1e-300);
            Eigen::VectorXd ritz(N);
            converged = true;
            worst = 0.0;
            for (int i = 0; i < N; ++i) {
                const double sig = std::sqrt(std::max(0.0, lam[j - 1 - i]));
                ritz[i] = sig;
                double res = 0.0;
                if (sig > kBreakdown)
                    res = beta_j *
                          std::abs(alpha[j - 1] * es.eigenvectors()(j - 1, j - 1 - i)) /
                          sig;
                worst = std::max(worst, res / scale);
                if (res > options.tol * scale) converged = false;
            }
            if (converged && prev_ritz.size() == N) {
                for (int i = 0; i < N; ++i)
                    if (std::abs(ritz[i] - prev_ritz[i]) > options.tol * scale)
                        converged = false;
            } else if (prev_ritz.size() != N) {
                converged = false;  // need a second consecutive pass
            }
            prev_ritz = ritz;
            if (j >= p) converged = true;  // the basis is complete
        }
        if (converged) {
            if (beta_j > kBreakdown) {
                final_beta = beta_j;
                final_v = r / beta_j;
            }
            break;
        }
        if (j >= max_iter) {
            std::ostringstream msg;
            msg << "truncated svd: no convergence after " << j
                << " iterations (relative residual " << worst << ")";
            throw NumericalError(msg.str());
        }

        // Expand to step j+1.
        if (beta_j <= kBreakdown) {
            vbasis.push_back(fresh_direction(mp, vbasis, vcursor));
            beta.push_back(0.0);
        } else {
            vbasis.push_back(r / beta_j);
            beta.push_back(beta_j);
        }

        Eigen::VectorXd q = map.apply_right(vbasis.back());
        q -= beta.back() * ubasis.back();
        const double a = reorthogonalise(q, ubasis);
        if (!std::isfinite(a)) throw NumericalError("truncated svd: non-finite mat-vec");
        if (a <= kBreakdown) {
            ubasis.push_back(fresh_direction(m, ubasis, ucursor));
            alpha.push_back(0.0);
        } else {
            ubasis.push_back(q / a);
            alpha.push_back(a);
        }
    }

    // Extract the top-N triples from a dense SVD of the small bidiagonal,
    // augmented by the final recurrence column when it carries weight.
    const int k = static_cast<int>(alpha.size());
    const bool augmented = final_v.size() > 0;
    const int kcols = k + (augmented ? 1 : 0);
    if (augmented) vbasis.push_back(std::move(final_v));
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, kcols);
    for (int i = 0; i < k; ++i) B(i, i) = alpha[i];
    for (int i = 0; i + 1 < k; ++i) B(i, i + 1) = beta[i];
    if (augmented) B(k - 1, k) = final_beta;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);

    WindowSVD out;
    out.s = svd.singularValues().head(N);
    out.U.resize(m, N);
    out.V.resize(mp, N);
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(mp);
        for (int c = 0; c < k; ++c) u += svd.matrixU()(c, i) * ubasis[c];
        for (int c = 0; c < kcols; ++c) v += svd.matrixV()(c, i) * vbasis[c];
        // Sign convention: the largest-magnitude entry of u is nonnegative.
        int arg = 0;
        u.cwiseAbs().maxCoeff(&arg);
        if (u[arg] < 0.0) {
            u = -u;
            v = -v;
        }
        out.U.col(i) = u;
        out.V.col(i) = v;
    }
    return out;
}

namespace {

template <typename Solve>
void run_indexed(int count, int threads, const Solve& solve) {
    if (threads <= 1 || count < 2) {
        for (int k = 0; k < count; ++k) solve(k);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            try {
                for (;;) {
                    const int k = next.fetch_add(1);
                    if (k >= count) return;
                    solve(k);
                }
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);  // stop the other workers
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<WindowSVD> rolling_windows(std::span<const UlamMatrix> matrices, int n,
                                       const RollingOptions& options) {
    const int steps = static_cast<int>(matrices.size());
    if (n < 1 || n > steps)
        throw ConfigError("rolling windows: need 1 <= n <= number of matrices");
    const int count = steps - n + 1;
    std::vector<WindowSVD> out(count);
    run_indexed(count, options.threads, [&](int k) {
        const WindowOperator op = window_product(matrices, k, n, options.dense_threshold);
        WindowSVD w = truncated_svd(op, options.N, options.svd);
        w.k = k;
        w.t0 = matrices[k].t;
        w.n = n;
        out[k] = std::move(w);
    });
    return out;
}

std::vector<WindowSVD> rolling_windows_chained(
    std::span<const std::vector<UlamMatrix>> chains, const RollingOptions& options) {
    std::vector<WindowSVD> out(chains.size());
    run_indexed(static_cast<int>(chains.size()), options.threads, [&](int k) {
        const auto& chain = chains[k];
        if (chain.empty()) throw ConfigError("rolling windows: empty chain");
        const WindowOperator op = window_product(
            std::span<const UlamMatrix>(chain.data(), chain.size()), 0,
            static_cast<int>(chain.size()), options.dense_threshold);
        WindowSVD w = truncated_svd(op, options.N, options.svd);
        w.k = k;
        w.t0 = chain.front().t;
        w.n = static_cast<int>(chain.size());
        out[k] = std::move(w);
    });
    return out;
}

double lyapunov_rate(const WindowSVD& svd, int j) {
    if (j < 0 || j >= svd.s.size()) throw ConfigError("lyapunov rate: rank out of range");
    if (svd.n < 1) throw ConfigError("lyapunov rate: window length must be >= 1");
    const double s = svd.s[j];
    if (s <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(s) / svd.n;
}

}  // namespace cstrack
