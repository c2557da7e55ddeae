#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptl/core_data.hpp"
#include "ptl/lasso.hpp"
#include "ptl/rng.hpp"

namespace ptl {

enum class BaselineMethod { Lasso, TransLasso };

template <typename Scalar>
struct BaselineFit {
    Vector<Scalar> beta;
    BaselineMethod method = BaselineMethod::Lasso;
    std::vector<Scalar> penalties; // one per CV-tuned step
};

/// Cross-validated lasso on the target alone.
template <typename Scalar>
BaselineFit<Scalar> fit_lasso_target(const DataSet<Scalar>& target, int folds, const LassoOptions& opts,
                                     std::uint64_t seed)
{
    auto cv = cv_lasso(target, folds, opts, seed);
    return {std::move(cv.fit.beta), BaselineMethod::Lasso, {cv.best_lambda}};
}

/// Two-step Trans-Lasso with every source treated as informative:
/// a pilot lasso on the pooled source and target rows, then a lasso on the
/// target residuals y - X·pilot for the correction. Without sources this is
/// exactly fit_lasso_target.
template <typename Scalar>
BaselineFit<Scalar> fit_translasso(const std::vector<DataSet<Scalar>>& sources, const DataSet<Scalar>& target,
                                   int folds, const LassoOptions& opts, std::uint64_t seed)
{
    validate(target, "target");
    if (sources.empty()) {
        auto fit = fit_lasso_target(target, folds, opts, seed);
        fit.method = BaselineMethod::TransLasso;
        return fit;
    }

    Eigen::Index rows = target.n();
    for (const auto& s : sources) {
        validate(s, "source");
        if (s.p() != target.p()) throw InvalidArgument("fit_translasso: sources and target disagree on p");
        rows += s.n();
    }
    DataSet<Scalar> pooled;
    pooled.X.resize(rows, target.p());
    pooled.y.resize(rows);
    Eigen::Index at = 0;
    for (const auto& s : sources) {
        pooled.X.middleRows(at, s.n()) = s.X;
        pooled.y.segment(at, s.n()) = s.y;
        at += s.n();
    }
    pooled.X.middleRows(at, target.n()) = target.X;
    pooled.y.segment(at, target.n()) = target.y;

    auto pilot = cv_lasso(pooled, folds, opts, seed);
    DataSet<Scalar> residual{target.X, target.y - target.X * pilot.fit.beta};
    auto correction = cv_lasso(residual, folds, opts, derive_seed(seed, 1));

    BaselineFit<Scalar> out;
    out.method = BaselineMethod::TransLasso;
    out.beta = pilot.fit.beta + correction.fit.beta;
    out.penalties = {pilot.best_lambda, correction.best_lambda};
    return out;
}

} // namespace ptl
