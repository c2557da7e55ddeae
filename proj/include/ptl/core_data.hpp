#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ptl/rng.hpp"
#include "ptl/types.hpp"

namespace ptl {

/// A response vector paired with its covariate matrix (rows are observations).
template <typename Scalar>
struct DataSet {
    Matrix<Scalar> X;
    Vector<Scalar> y;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
};

using DataSetXd = DataSet<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

/// Checks the DataSet invariants, throwing InvalidArgument with `what`
/// as context.
template <typename Scalar>
void validate(const DataSet<Scalar>& data, const std::string& what = "dataset")
{
    if (data.X.rows() != data.y.size())
        throw InvalidArgument(what + ": X has " + std::to_string(data.X.rows()) + " rows but y has "
                              + std::to_string(data.y.size()) + " entries");
    if (data.X.rows() < 1 || data.X.cols() < 1)
        throw InvalidArgument(what + ": needs n >= 1 and p >= 1");
    if (!all_finite(data.X) || !all_finite(data.y))
        throw InvalidArgument(what + ": non-finite entries");
}

template <typename Scalar>
DataSet<Scalar> make_dataset(Matrix<Scalar> X, Vector<Scalar> y)
{
    DataSet<Scalar> d{std::move(X), std::move(y)};
    validate(d);
    return d;
}

struct FoldAssignment {
    std::vector<int> fold_index;
    int folds = 0;

    std::size_t size() const { return fold_index.size(); }

    std::vector<Eigen::Index> members(int fold) const
    {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < fold_index.size(); ++i)
            if (fold_index[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }

    std::vector<Eigen::Index> complement(int fold) const
    {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < fold_index.size(); ++i)
            if (fold_index[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }
};

/// Seeded shuffle, then round-robin assignment: fold sizes differ by at most one.
inline FoldAssignment make_folds(std::size_t n, int folds, std::uint64_t seed)
{
    if (folds < 2 || static_cast<std::size_t>(folds) > n)
        throw InvalidArgument("make_folds: need 2 <= F <= n (F=" + std::to_string(folds)
                              + ", n=" + std::to_string(n) + ")");
    Rng rng(seed);
    const auto perm = random_permutation(n, rng);
    FoldAssignment out;
    out.folds = folds;
    out.fold_index.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        out.fold_index[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
    return out;
}

template <typename Scalar>
struct GramProducts {
    Matrix<Scalar> gram; // XᵀX / n
    Vector<Scalar> xty;  // Xᵀy / n
};

template <typename DerivedX, typename DerivedY>
auto gram_products(const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y)
{
    using Scalar = typename DerivedX::Scalar;
    if (X.rows() != y.size()) throw InvalidArgument("gram_products: dimension mismatch");
    if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("gram_products: non-finite input");
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(X.rows());
    GramProducts<Scalar> out;
    out.gram.setZero(X.cols(), X.cols());
    out.gram.template selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), inv_n);
    out.gram.template triangularView<Eigen::StrictlyUpper>() = out.gram.transpose();
    out.xty.noalias() = X.transpose() * y;
    out.xty *= inv_n;
    return out;
}

template <typename Scalar>
DataSet<Scalar> select_rows(const DataSet<Scalar>& data, const std::vector<Eigen::Index>& rows)
{
    DataSet<Scalar> out;
    out.X = data.X(rows, Eigen::all);
    out.y = data.y(rows);
    return out;
}

/// Column centering/scaling for real data. Means are per dataset; the scale
/// is shared so that coefficients from different datasets stay comparable.
template <typename Scalar>
struct Standardizer {
    Vector<Scalar> scale; // per-column divisor, 1 for constant columns

    static Standardizer fit(const Matrix<Scalar>& X)
    {
        Standardizer s;
        const Vector<Scalar> mean = X.colwise().mean().transpose();
        s.scale.resize(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const Scalar sd = std::sqrt((X.col(j).array() - mean(j)).square().mean());
            s.scale(j) = sd > Scalar(0) ? sd : Scalar(1);
        }
        return s;
    }

    /// Centers X and y by their own means and divides columns by `scale`.
    /// Returns (x_mean, y_mean) so predictions can be mapped back.
    std::pair<Vector<Scalar>, Scalar> apply(DataSet<Scalar>& data) const
    {
        const Vector<Scalar> x_mean = data.X.colwise().mean().transpose();
        const Scalar y_mean = data.y.mean();
        data.X.rowwise() -= x_mean.transpose();
        data.X = data.X * scale.cwiseInverse().asDiagonal();
        data.y.array() -= y_mean;
        return {x_mean, y_mean};
    }
};

} // namespace ptl
