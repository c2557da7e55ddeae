#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ptl/core_data.hpp"
#include "ptl/types.hpp"

namespace ptl {

// l1-penalized least squares,
//
//     minimize (2n)^{-1} ||y - X b||^2 + lambda ||b||_1,
//
// solved by cyclic coordinate descent in covariance form: the solver keeps
// the gradient g = Xᵀ(y - Xb)/n and touches one column of XᵀX/n per
// coefficient change, so a sweep costs O(p) plus O(p) per moved coordinate.

struct LassoOptions {
    double tol = 1e-7;      // max coefficient change per sweep, and KKT bound
    int max_sweeps = 10000;
    int n_lambdas = 100;
    std::optional<double> lambda_min_ratio; // unset: 0.01 if n < p, else 1e-4

    void validate() const
    {
        if (!(tol > 0)) throw InvalidArgument("LassoOptions: tol must be > 0");
        if (max_sweeps < 1) throw InvalidArgument("LassoOptions: max_sweeps must be >= 1");
        if (n_lambdas < 1) throw InvalidArgument("LassoOptions: n_lambdas must be >= 1");
        if (lambda_min_ratio && !(*lambda_min_ratio > 0 && *lambda_min_ratio < 1))
            throw InvalidArgument("LassoOptions: lambda_min_ratio must lie in (0, 1)");
    }

    double resolved_min_ratio(Eigen::Index n, Eigen::Index p) const
    {
        if (lambda_min_ratio) return *lambda_min_ratio;
        return n < p ? 1e-2 : 1e-4;
    }
};

template <typename Scalar>
struct LassoFit {
    Vector<Scalar> beta;
    Scalar lambda = 0;
    int sweeps_used = 0;
    Scalar kkt_violation = 0;
    bool converged = false;
};

template <typename Scalar>
Scalar soft_threshold(Scalar z, Scalar gamma)
{
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return Scalar(0);
}

/// Max stationarity residual given the gradient g = Xᵀ(y - Xb)/n.
template <typename Scalar, typename DerivedG, typename DerivedB>
Scalar kkt_from_gradient(const Eigen::MatrixBase<DerivedG>& grad, const Eigen::MatrixBase<DerivedB>& beta,
                         Scalar lambda)
{
    Scalar worst = 0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const Scalar g = grad(j);
        const Scalar r = beta(j) != Scalar(0) ? std::abs(g - lambda * (beta(j) > 0 ? Scalar(1) : Scalar(-1)))
                                              : std::max(Scalar(0), std::abs(g) - lambda);
        worst = std::max(worst, r);
    }
    return worst;
}

/// Stationarity residual computed directly from the data: for each j,
/// |n⁻¹X_jᵀr - λ sign(b_j)| on the support and (|n⁻¹X_jᵀr| - λ)₊ off it.
template <typename DerivedX, typename DerivedY, typename DerivedB>
typename DerivedX::Scalar kkt_violation(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
                                        const Eigen::MatrixBase<DerivedB>& beta, typename DerivedX::Scalar lambda)
{
    using Scalar = typename DerivedX::Scalar;
    if (X.rows() != y.size() || X.cols() != beta.size())
        throw InvalidArgument("kkt_violation: dimension mismatch");
    const Vector<Scalar> resid = y - X * beta;
    const Vector<Scalar> grad = X.transpose() * resid / static_cast<Scalar>(X.rows());
    return kkt_from_gradient<Scalar>(grad, beta, lambda);
}

template <typename DerivedX, typename DerivedY, typename DerivedB>
typename DerivedX::Scalar lasso_objective(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedB>& beta, typename DerivedX::Scalar lambda)
{
    using Scalar = typename DerivedX::Scalar;
    return (y - X * beta).squaredNorm() / (Scalar(2) * static_cast<Scalar>(X.rows())) + lambda * beta.template lpNorm<1>();
}

/// Coordinate descent on precomputed Gram products.
template <typename Scalar>
LassoFit<Scalar> solve_lasso_gram(const GramProducts<Scalar>& gp, Scalar lambda, const LassoOptions& opts,
                                  const Vector<Scalar>* warm_start = nullptr)
{
    opts.validate();
    if (!(lambda >= 0)) throw InvalidArgument("solve_lasso: lambda must be >= 0");
    const Eigen::Index p = gp.xty.size();
    const Matrix<Scalar>& G = gp.gram;
    const Scalar tol = static_cast<Scalar>(opts.tol);

    LassoFit<Scalar> fit;
    fit.lambda = lambda;
    if (warm_start) {
        if (warm_start->size() != p) throw InvalidArgument("solve_lasso: warm start has wrong length");
        fit.beta = *warm_start;
    } else {
        fit.beta.setZero(p);
    }
    Vector<Scalar>& beta = fit.beta;
    for (Eigen::Index j = 0; j < p; ++j)
        if (G(j, j) <= Scalar(0)) beta(j) = 0;

    Vector<Scalar> grad = gp.xty - G * beta;

    auto update = [&](Eigen::Index j) -> Scalar {
        const Scalar v = G(j, j);
        if (v <= Scalar(0)) return Scalar(0);
        const Scalar old = beta(j);
        const Scalar next = soft_threshold(grad(j) + v * old, lambda) / v;
        if (next == old) return Scalar(0);
        const Scalar step = next - old;
        beta(j) = next;
        grad.noalias() -= step * G.col(j);
        return std::abs(step);
    };

    auto gram_objective = [&](const Vector<Scalar>& b) {
        return Scalar(0.5) * b.dot(G * b) - gp.xty.dot(b) + lambda * b.template lpNorm<1>();
    };

#ifndef NDEBUG
    auto objective = [&] { return gram_objective(beta); };
    Scalar last_objective = objective();
    auto check_descent = [&] {
        const Scalar now = objective();
        assert(now <= last_objective + Scalar(1e-9) * (Scalar(1) + std::abs(last_objective)));
        last_objective = now;
    };
#else
    auto check_descent = [] {};
#endif

    // Active-set refinement for ill-conditioned supports (n close to p),
    // where plain sweeps crawl. Solves the stationarity equations on the
    // current support with signs held fixed; if a sign would flip, steps only
    // to the first zero crossing and drops that coordinate. Each step lowers
    // the objective. Reports success only when the full KKT check passes.
    std::vector<Eigen::Index> active;
    auto try_active_solve = [&]() -> bool {
        for (int round = 0; round < 2 * static_cast<int>(p) + 2; ++round) {
            active.clear();
            for (Eigen::Index j = 0; j < p; ++j)
                if (beta(j) != Scalar(0)) active.push_back(j);
            if (active.empty()) return false;
            const auto m = static_cast<Eigen::Index>(active.size());
            Matrix<Scalar> G_aa(m, m);
            Vector<Scalar> rhs(m);
            for (Eigen::Index a = 0; a < m; ++a) {
                for (Eigen::Index b = 0; b < m; ++b) G_aa(a, b) = G(active[a], active[b]);
                rhs(a) = gp.xty(active[a]) - (beta(active[a]) > 0 ? lambda : -lambda);
            }
            Eigen::LDLT<Matrix<Scalar>> ldlt(G_aa);
            if (ldlt.info() != Eigen::Success) return false;
            const Vector<Scalar> sol = ldlt.solve(rhs);
            if (!sol.allFinite()) return false;

            Scalar t = 1;
            Eigen::Index blocking = -1;
            for (Eigen::Index a = 0; a < m; ++a) {
                const Scalar b = beta(active[a]);
                if ((sol(a) > 0) == (b > 0) && sol(a) != Scalar(0)) continue;
                const Scalar hit = b / (b - sol(a));
                if (hit < t) t = hit, blocking = a;
            }
            const Vector<Scalar> before = beta;
            for (Eigen::Index a = 0; a < m; ++a) beta(active[a]) += t * (sol(a) - beta(active[a]));
            if (blocking >= 0) beta(active[blocking]) = 0;
            for (Eigen::Index a = 0; a < m; ++a) // rounding must not flip a sign
                if ((beta(active[a]) > 0) != (before(active[a]) > 0)) beta(active[a]) = 0;
            // a singular G_aa can yield a non-minimizer; never accept an uphill step
            if (gram_objective(beta) > gram_objective(before)) {
                beta = before;
                return false;
            }
            grad.noalias() = gp.xty - G * beta;
            check_descent();
            if (blocking >= 0) continue;

            const Scalar kkt = kkt_from_gradient<Scalar>(grad, beta, lambda);
            if (!(kkt <= tol)) return false; // support must grow; back to sweeps
            fit.kkt_violation = kkt;
            fit.converged = true;
            return true;
        }
        return false;
    };
    constexpr int kActiveSolveAfter = 20; // sweeps on this lambda before trying

    int sweeps = 0;
    while (sweeps < opts.max_sweeps) {
        Scalar max_change = 0;
        for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
        ++sweeps;
        check_descent();

        if (max_change < tol) {
            grad.noalias() = gp.xty - G * beta; // drop accumulated rounding
            fit.kkt_violation = kkt_from_gradient<Scalar>(grad, beta, lambda);
            if (fit.kkt_violation <= tol) {
                fit.converged = true;
                break;
            }
            if (max_change == Scalar(0)) break; // fixed point of the sweep; rounding floor
            continue;
        }

        if (sweeps >= kActiveSolveAfter && try_active_solve()) break;
        active.clear();
        for (Eigen::Index j = 0; j < p; ++j)
            if (beta(j) != Scalar(0)) active.push_back(j);
        int inner = 0;
        bool solved = false;
        while (sweeps < opts.max_sweeps) {
            Scalar active_change = 0;
            for (Eigen::Index j : active) active_change = std::max(active_change, update(j));
            ++sweeps;
            check_descent();
            if (active_change < tol) break;
            if (++inner % kActiveSolveAfter == 0 && (solved = try_active_solve())) break;
        }
        if (solved) break;
    }
    fit.sweeps_used = sweeps;
    if (!fit.converged) {
        grad.noalias() = gp.xty - G * beta;
        fit.kkt_violation = kkt_from_gradient<Scalar>(grad, beta, lambda);
    }
    return fit;
}

template <typename DerivedX, typename DerivedY>
auto solve_lasso(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
                 typename DerivedX::Scalar lambda, const LassoOptions& opts = {},
                 const Vector<typename DerivedX::Scalar>* warm_start = nullptr)
{
    using Scalar = typename DerivedX::Scalar;
    if (!(lambda >= 0)) throw InvalidArgument("solve_lasso: lambda must be >= 0");
    const auto gp = gram_products(X, y);
    return solve_lasso_gram<Scalar>(gp, lambda, opts, warm_start);
}

/// Descending geometric sequence from lambda_max = ||Xᵀy||_inf / n down to
/// lambda_max * min_ratio. A zero response gives the single-point path {0}.
template <typename Scalar>
std::vector<Scalar> lambda_path_from(const Vector<Scalar>& xty, Eigen::Index n, const LassoOptions& opts)
{
    opts.validate();
    const Scalar lambda_max = xty.size() ? xty.cwiseAbs().maxCoeff() : Scalar(0);
    if (lambda_max == Scalar(0)) return {Scalar(0)};
    const int count = opts.n_lambdas;
    if (count == 1) return {lambda_max};
    const Scalar ratio = static_cast<Scalar>(opts.resolved_min_ratio(n, xty.size()));
    std::vector<Scalar> path(static_cast<std::size_t>(count));
    const Scalar log_step = std::log(ratio) / static_cast<Scalar>(count - 1);
    for (int k = 0; k < count; ++k) path[k] = lambda_max * std::exp(log_step * static_cast<Scalar>(k));
    path.front() = lambda_max;
    path.back() = lambda_max * ratio;
    return path;
}

template <typename DerivedX, typename DerivedY>
auto lambda_path(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y, const LassoOptions& opts = {})
{
    using Scalar = typename DerivedX::Scalar;
    if (X.rows() != y.size()) throw InvalidArgument("lambda_path: dimension mismatch");
    // same rounding as gram_products, so path.front() zeroes the solver exactly
    Vector<Scalar> xty = X.transpose() * y;
    xty *= Scalar(1) / static_cast<Scalar>(X.rows());
    return lambda_path_from<Scalar>(xty, X.rows(), opts);
}

template <typename Scalar>
struct CvLassoResult {
    Scalar best_lambda = 0;
    LassoFit<Scalar> fit;           // full-data fit at best_lambda
    std::vector<Scalar> lambdas;    // descending
    std::vector<Scalar> cv_error;   // mean held-out squared error per lambda
};

/// K-fold cross-validated lasso. The lambda grid is built from the full
/// data; each fold walks it with warm starts. Ties go to the larger lambda.
template <typename Scalar>
CvLassoResult<Scalar> cv_lasso(const DataSet<Scalar>& data, int folds, const LassoOptions& opts, std::uint64_t seed)
{
    validate(data, "cv_lasso");
    opts.validate();
    const Eigen::Index n = data.n();
    const auto assignment = make_folds(static_cast<std::size_t>(n), folds, seed);

    const auto full = gram_products(data.X, data.y);
    CvLassoResult<Scalar> out;
    out.lambdas = lambda_path_from<Scalar>(full.xty, n, opts);
    const std::size_t L = out.lambdas.size();
    out.cv_error.assign(L, Scalar(0));

    for (int f = 0; f < folds; ++f) {
        const auto train_rows = assignment.complement(f);
        const auto test_rows = assignment.members(f);
        const Matrix<Scalar> X_train = data.X(train_rows, Eigen::all);
        const Vector<Scalar> y_train = data.y(train_rows);
        const Matrix<Scalar> X_test = data.X(test_rows, Eigen::all);
        const Vector<Scalar> y_test = data.y(test_rows);
        const auto gp = gram_products(X_train, y_train);

        Vector<Scalar> warm = Vector<Scalar>::Zero(data.p());
        for (std::size_t k = 0; k < L; ++k) {
            auto fit = solve_lasso_gram<Scalar>(gp, out.lambdas[k], opts, &warm);
            out.cv_error[k] += (y_test - X_test * fit.beta).squaredNorm();
            warm = std::move(fit.beta);
        }
    }
    for (auto& e : out.cv_error) e /= static_cast<Scalar>(n);

    std::size_t best = 0;
    for (std::size_t k = 1; k < L; ++k)
        if (out.cv_error[k] < out.cv_error[best]) best = k;
    out.best_lambda = out.lambdas[best];

    Vector<Scalar> warm = Vector<Scalar>::Zero(data.p());
    for (std::size_t k = 0; k <= best; ++k) {
        out.fit = solve_lasso_gram<Scalar>(full, out.lambdas[k], opts, &warm);
        warm = out.fit.beta;
    }
    return out;
}

} // namespace ptl
