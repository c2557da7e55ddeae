#include "ptl/ptl.hpp"

namespace ptl {

std::string to_string(SourceEstimator kind)
{
    switch (kind) {
    case SourceEstimator::Auto: return "auto";
    case SourceEstimator::LassoCv: return "lasso-cv";
    case SourceEstimator::Ols: return "ols";
    case SourceEstimator::Ridge: return "ridge";
    }
    return "unknown";
}

SourceEstimator parse_source_estimator(const std::string& name)
{
    if (name == "auto") return SourceEstimator::Auto;
    if (name == "lasso-cv" || name == "lasso") return SourceEstimator::LassoCv;
    if (name == "ols") return SourceEstimator::Ols;
    if (name == "ridge") return SourceEstimator::Ridge;
    throw InvalidConfiguration("unknown source estimator '" + name + "' (expected auto, lasso-cv, ols or ridge)");
}

} // namespace ptl
