#pragma once

#include <algorithm>
#include <string>
#include <utility>

#include "ptl/types.hpp"

namespace ptl {

/// Population-level target model: beta = B w + delta with target covariance
/// Sigma. The pair (w, delta) is identified when BᵀΣδ = 0.
template <typename Scalar>
struct PopulationModel {
    Matrix<Scalar> B;     // p x K, column k is the k-th source coefficient vector
    Matrix<Scalar> Sigma; // p x p
    Vector<Scalar> w;
    Vector<Scalar> delta;
    Vector<Scalar> beta;

    Eigen::Index p() const { return B.rows(); }
    Eigen::Index K() const { return B.cols(); }
};

using PopulationModelXd = PopulationModel<double>;

template <typename Scalar>
struct Decomposition {
    Vector<Scalar> w;
    Vector<Scalar> delta;
};

/// Canonical split of beta into the Σ-weighted projection onto span(B) and
/// the Σ-orthogonal remainder:
///
///     w = (BᵀΣB)⁻¹ BᵀΣβ,   δ = β − Bw.
template <typename Scalar>
Decomposition<Scalar> decompose(const Vector<Scalar>& beta, const Matrix<Scalar>& B, const Matrix<Scalar>& Sigma)
{
    const Eigen::Index p = B.rows();
    if (beta.size() != p || Sigma.rows() != p || Sigma.cols() != p)
        throw InvalidArgument("decompose: dimension mismatch");
    if (B.cols() < 1) throw InvalidArgument("decompose: B needs at least one column");

    const Matrix<Scalar> SB = Sigma * B;
    const Matrix<Scalar> normal = B.transpose() * SB;
    const Vector<Scalar> rhs = SB.transpose() * beta;

    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(normal, Eigen::EigenvaluesOnly);
    const Scalar lo = eig.eigenvalues().minCoeff();
    const Scalar hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0) || hi / lo > Scalar(kMaxCondition))
        throw RankDeficient("decompose: BᵀΣB is singular (condition estimate "
                            + std::to_string(lo > 0 ? double(hi / lo) : std::numeric_limits<double>::infinity())
                            + "); source coefficient vectors must be linearly independent");

    Eigen::LLT<Matrix<Scalar>> llt(normal);
    if (llt.info() != Eigen::Success) throw RankDeficient("decompose: BᵀΣB is not positive definite");

    Decomposition<Scalar> out;
    out.w = llt.solve(rhs);
    out.delta = beta - B * out.w;
    // One refinement step: drives BᵀΣδ to rounding level.
    out.w += llt.solve(SB.transpose() * out.delta);
    out.delta = beta - B * out.w;
    return out;
}

template <typename Scalar>
PopulationModel<Scalar> make_population_model(const Vector<Scalar>& beta, Matrix<Scalar> B, Matrix<Scalar> Sigma)
{
    auto parts = decompose(beta, B, Sigma);
    return {std::move(B), std::move(Sigma), std::move(parts.w), std::move(parts.delta), beta};
}

struct IdentificationCheck {
    bool holds = false;
    double max_violation = 0; // ||BᵀΣδ||_inf
};

template <typename Scalar>
IdentificationCheck check_identification(const Matrix<Scalar>& B, const Matrix<Scalar>& Sigma,
                                         const Vector<Scalar>& delta, double tol)
{
    if (B.rows() != delta.size() || Sigma.rows() != delta.size())
        throw InvalidArgument("check_identification: dimension mismatch");
    IdentificationCheck out;
    out.max_violation = static_cast<double>((B.transpose() * (Sigma * delta)).cwiseAbs().maxCoeff());
    out.holds = out.max_violation <= tol;
    return out;
}

template <typename Scalar>
IdentificationCheck check_identification(const PopulationModel<Scalar>& model, double tol)
{
    return check_identification(model.B, model.Sigma, model.delta, tol);
}

} // namespace ptl
