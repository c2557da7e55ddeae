#pragma once

#include <cmath>
#include <limits>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "ptl/core_data.hpp"
#include "ptl/lasso.hpp"
#include "ptl/parallel.hpp"
#include "ptl/rng.hpp"
#include "ptl/types.hpp"

namespace ptl {

// Profiled transfer learning.
//
//   1. Fit each source, stack the estimates as the columns of B̂ (p x K).
//   2. Transfer the target covariates, Ẑ = X B̂, and regress y on Ẑ by OLS
//      to get ŵ. The residuals ê = y - Ẑŵ are the profiled responses.
//   3. Lasso of ê on X (lambda by cross-validation) gives δ̂.
//   4. Assemble β̂ = B̂ŵ + δ̂.

enum class SourceEstimator { Auto, LassoCv, Ols, Ridge };

std::string to_string(SourceEstimator kind);
SourceEstimator parse_source_estimator(const std::string& name);

struct SourceSpec {
    SourceEstimator kind = SourceEstimator::Auto;
    double ridge_lambda = 0; // used when kind == Ridge
};

/// Resolves Auto: lasso-cv when n_k <= 2p, OLS otherwise.
inline SourceEstimator resolve_estimator(SourceEstimator kind, Eigen::Index n, Eigen::Index p)
{
    if (kind != SourceEstimator::Auto) return kind;
    return n <= 2 * p ? SourceEstimator::LassoCv : SourceEstimator::Ols;
}

template <typename Scalar>
struct SourceBasis {
    Matrix<Scalar> B_hat; // p x K
    std::vector<SourceEstimator> kinds;
    std::vector<Scalar> penalties;    // lasso lambda or ridge lambda, 0 for OLS
    std::vector<bool> ridge_fallback; // OLS normal matrix was singular

    Eigen::Index p() const { return B_hat.rows(); }
    Eigen::Index K() const { return B_hat.cols(); }
};

struct PtlConfig {
    int folds = 5;
    std::uint64_t seed = 0;
    LassoOptions lasso;
    std::vector<SourceSpec> sources; // per source; missing entries mean Auto
    int threads = 1;                 // source fits only
};

namespace detail {

inline constexpr std::uint64_t kDeltaStream = 0x5ea1de17aULL;

template <typename Scalar>
Vector<Scalar> ridge_solve(const GramProducts<Scalar>& gp, Scalar lambda)
{
    Matrix<Scalar> A = gp.gram;
    A.diagonal().array() += lambda;
    Eigen::LLT<Matrix<Scalar>> llt(A);
    if (llt.info() != Eigen::Success) throw SingularDesign("ridge: penalized normal matrix is not positive definite");
    return llt.solve(gp.xty);
}

} // namespace detail

template <typename Scalar>
struct SourceFit {
    Vector<Scalar> beta;
    SourceEstimator kind = SourceEstimator::LassoCv;
    Scalar penalty = 0;
    bool ridge_fallback = false;
};

template <typename Scalar>
SourceFit<Scalar> fit_source(const DataSet<Scalar>& source, const SourceSpec& spec, int folds,
                             const LassoOptions& opts, std::uint64_t seed)
{
    validate(source, "source");
    SourceFit<Scalar> out;
    out.kind = resolve_estimator(spec.kind, source.n(), source.p());
    switch (out.kind) {
    case SourceEstimator::LassoCv: {
        auto cv = cv_lasso(source, folds, opts, seed);
        out.beta = std::move(cv.fit.beta);
        out.penalty = cv.best_lambda;
        break;
    }
    case SourceEstimator::Ols: {
        if (source.n() <= source.p())
            throw InvalidConfiguration("ols source estimator needs n_k > p (n_k=" + std::to_string(source.n())
                                       + ", p=" + std::to_string(source.p()) + ")");
        const auto gp = gram_products(source.X, source.y);
        Eigen::LLT<Matrix<Scalar>> llt(gp.gram);
        if (llt.info() == Eigen::Success && llt.rcond() > Scalar(1) / Scalar(kMaxCondition)) {
            out.beta = llt.solve(gp.xty);
        } else {
            out.ridge_fallback = true;
            out.penalty = Scalar(1e-8) * gp.gram.trace() / static_cast<Scalar>(source.p());
            out.beta = detail::ridge_solve(gp, out.penalty);
        }
        break;
    }
    case SourceEstimator::Ridge: {
        if (!(spec.ridge_lambda > 0)) throw InvalidConfiguration("ridge source estimator needs lambda > 0");
        out.penalty = static_cast<Scalar>(spec.ridge_lambda);
        out.beta = detail::ridge_solve(gram_products(source.X, source.y), out.penalty);
        break;
    }
    case SourceEstimator::Auto:
        break;
    }
    return out;
}

/// Step 1: one estimate per source; source k uses seed derive_seed(seed, k).
template <typename Scalar>
SourceBasis<Scalar> fit_sources(const std::vector<DataSet<Scalar>>& sources, const std::vector<SourceSpec>& specs,
                                int folds, const LassoOptions& opts, std::uint64_t seed, int threads = 1)
{
    if (sources.empty()) throw InvalidArgument("fit_sources: need at least one source");
    const Eigen::Index p = sources.front().p();
    for (const auto& s : sources)
        if (s.p() != p) throw InvalidArgument("fit_sources: sources disagree on p");

    const std::size_t K = sources.size();
    std::vector<SourceFit<Scalar>> fits(K);
    parallel_for(K, threads, [&](std::size_t k) {
        const SourceSpec spec = k < specs.size() ? specs[k] : SourceSpec{};
        fits[k] = fit_source(sources[k], spec, folds, opts, derive_seed(seed, k));
    });

    SourceBasis<Scalar> basis;
    basis.B_hat.resize(p, static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k) {
        basis.B_hat.col(static_cast<Eigen::Index>(k)) = fits[k].beta;
        basis.kinds.push_back(fits[k].kind);
        basis.penalties.push_back(fits[k].penalty);
        basis.ridge_fallback.push_back(fits[k].ridge_fallback);
    }
    if (!basis.B_hat.allFinite()) throw InvalidArgument("fit_sources: non-finite source estimate");
    return basis;
}

/// Ẑ = X B̂, so row i is B̂ᵀX_i.
template <typename Scalar, typename DerivedX>
Matrix<Scalar> transfer_features(const SourceBasis<Scalar>& basis, const Eigen::MatrixBase<DerivedX>& X)
{
    if (X.cols() != basis.p())
        throw InvalidArgument("transfer_features: X has " + std::to_string(X.cols()) + " columns, basis has p="
                              + std::to_string(basis.p()));
    return X * basis.B_hat;
}

template <typename Scalar>
struct WFit {
    Vector<Scalar> w;
    Scalar condition = 0; // of ẐᵀẐ
};

/// OLS of y on the transferred features via the K x K normal equations.
/// Near-collinear features mean linearly dependent source estimates; that is
/// reported, not regularized away. An exactly zero feature (a source whose
/// estimate is the zero vector) carries nothing to transfer and gets weight 0.
template <typename Scalar>
WFit<Scalar> fit_w(const Matrix<Scalar>& Z, const Vector<Scalar>& y)
{
    const Eigen::Index n = Z.rows();
    const Eigen::Index K = Z.cols();
    if (y.size() != n) throw InvalidArgument("fit_w: dimension mismatch");
    if (K < 1) throw InvalidArgument("fit_w: need at least one feature");
    if (n <= K)
        throw InvalidArgument("fit_w: need n > K (n=" + std::to_string(n) + ", K=" + std::to_string(K) + ")");

    std::vector<Eigen::Index> live;
    for (Eigen::Index k = 0; k < K; ++k)
        if (!Z.col(k).isZero(0)) live.push_back(k);

    WFit<Scalar> out;
    out.w.setZero(K);
    out.condition = 1;
    if (live.empty()) return out;

    const Matrix<Scalar> Zl = Z(Eigen::all, live);
    const Matrix<Scalar> normal = Zl.transpose() * Zl;
    const auto m = static_cast<Eigen::Index>(live.size());
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(normal);
    const Scalar lo = eig.eigenvalues()(0);
    const Scalar hi = eig.eigenvalues()(m - 1);
    out.condition = lo > 0 ? hi / lo : std::numeric_limits<Scalar>::infinity();
    if (!(out.condition <= Scalar(kMaxCondition))) {
        const Vector<Scalar> v = eig.eigenvectors().col(0);
        std::ostringstream msg;
        msg << "fit_w: transferred features are collinear (condition " << double(out.condition)
            << "); source estimates are linearly dependent, near-null combination:";
        for (Eigen::Index k = 0; k < m; ++k)
            if (std::abs(v(k)) > Scalar(1e-3)) msg << ' ' << double(v(k)) << "*source" << live[k] + 1;
        throw SingularDesign(msg.str());
    }

    Eigen::LLT<Matrix<Scalar>> llt(normal);
    Vector<Scalar> w = llt.solve(Zl.transpose() * y);
    w += llt.solve(Zl.transpose() * (y - Zl * w));
    out.w(live) = w;
    return out;
}

/// Step 2 residuals, ê = y - Ẑŵ.
template <typename Scalar>
Vector<Scalar> profile_responses(const Vector<Scalar>& y, const Matrix<Scalar>& Z, const Vector<Scalar>& w)
{
    if (Z.rows() != y.size() || Z.cols() != w.size()) throw InvalidArgument("profile_responses: dimension mismatch");
    return y - Z * w;
}

template <typename Scalar>
struct DeltaFit {
    Vector<Scalar> delta;
    Scalar lambda = 0;
};

template <typename Scalar>
DeltaFit<Scalar> fit_delta(const Matrix<Scalar>& X, const Vector<Scalar>& e_hat, int folds, const LassoOptions& opts,
                           std::uint64_t seed)
{
    if (X.rows() != e_hat.size()) throw InvalidArgument("fit_delta: dimension mismatch");
    auto cv = cv_lasso(DataSet<Scalar>{X, e_hat}, folds, opts, seed);
    return {std::move(cv.fit.beta), cv.best_lambda};
}

template <typename Scalar>
struct PtlDiagnostics {
    Scalar condition = 0;          // of ẐᵀẐ
    Scalar orthogonality = 0;      // ||Ẑᵀê||_inf
    Scalar response_norm = 0;      // ||y||
    Scalar profiled_norm = 0;      // ||ê||
    Scalar final_residual_norm = 0; // ||ê - Xδ̂||
};

template <typename Scalar>
struct PtlFit {
    SourceBasis<Scalar> basis;
    Vector<Scalar> w_hat;
    Vector<Scalar> delta_hat;
    Vector<Scalar> beta_hat;
    Scalar lambda_delta = 0;
    PtlDiagnostics<Scalar> diagnostics;
};

/// Steps 2-4 against an already fitted source basis.
template <typename Scalar>
PtlFit<Scalar> fit_ptl_with_basis(SourceBasis<Scalar> basis, const DataSet<Scalar>& target, const PtlConfig& config)
{
    validate(target, "target");
    if (target.p() != basis.p()) throw InvalidArgument("fit_ptl: target p does not match sources");
    if (basis.K() >= target.n())
        throw InvalidArgument("fit_ptl: need K < n (K=" + std::to_string(basis.K()) + ", n="
                              + std::to_string(target.n()) + ")");

    PtlFit<Scalar> out;
    const Matrix<Scalar> Z = transfer_features(basis, target.X);
    auto wfit = fit_w(Z, target.y);
    const Vector<Scalar> e_hat = profile_responses(target.y, Z, wfit.w);
    auto dfit = fit_delta(target.X, e_hat, config.folds, config.lasso, derive_seed(config.seed, detail::kDeltaStream));

    out.w_hat = std::move(wfit.w);
    out.delta_hat = std::move(dfit.delta);
    out.lambda_delta = dfit.lambda;
    out.beta_hat = basis.B_hat * out.w_hat + out.delta_hat;

    auto& d = out.diagnostics;
    d.condition = wfit.condition;
    d.orthogonality = (Z.transpose() * e_hat).cwiseAbs().maxCoeff();
    d.response_norm = target.y.norm();
    d.profiled_norm = e_hat.norm();
    d.final_residual_norm = (e_hat - target.X * out.delta_hat).norm();
    out.basis = std::move(basis);
    return out;
}

template <typename Scalar>
PtlFit<Scalar> fit_ptl(const std::vector<DataSet<Scalar>>& sources, const DataSet<Scalar>& target,
                       const PtlConfig& config)
{
    validate(target, "target");
    for (const auto& s : sources)
        if (s.p() != target.p()) throw InvalidArgument("fit_ptl: sources and target disagree on p");
    if (static_cast<Eigen::Index>(sources.size()) >= target.n())
        throw InvalidArgument("fit_ptl: need K < n");
    auto basis = fit_sources(sources, config.sources, config.folds, config.lasso, config.seed, config.threads);
    return fit_ptl_with_basis(std::move(basis), target, config);
}

} // namespace ptl
