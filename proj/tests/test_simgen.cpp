#include <gtest/gtest.h>

#include <cmath>

#include "ptl/simgen.hpp"

using namespace ptl;

namespace {

SimConfig config(int example, Eigen::Index p, Eigen::Index s, std::uint64_t seed)
{
    SimConfig c;
    c.example = example;
    c.p = p;
    c.s = s;
    c.seed = seed;
    return c;
}

double min_eigenvalue(const MatrixXd& S)
{
    return Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

} // namespace

TEST(SimConfig, DerivedSizes)
{
    SimConfig c;
    EXPECT_EQ(c.K, 5);
    EXPECT_EQ(c.p, 500);
    EXPECT_EQ(c.h, 6.0);
    c.s = 40;
    EXPECT_EQ(c.r0(), 13);
    EXPECT_EQ(c.s_delta(), 8);
    c.s = 300;
    EXPECT_EQ(c.r0(), 100);
    EXPECT_EQ(c.s_delta(), 60);
}

TEST(DefaultWeights, Pattern)
{
    const VectorXd w = default_weights(5);
    EXPECT_EQ(w, (VectorXd(5) << 1.5, 0.75, 0, 0, -1.25).finished());
    EXPECT_EQ(default_weights(2), (VectorXd(2) << 1.5, 0.75).finished());
    EXPECT_EQ(default_weights(6)(5), 0.0);
}

TEST(Example1, Structure)
{
    const auto cfg = config(1, 200, 40, 3);
    const auto prob = generate_problem(cfg);
    const MatrixXd& B = prob.model.B;
    EXPECT_TRUE(B.bottomRows(200 - 40).isZero(0));
    EXPECT_TRUE((B.middleRows(13, 27).array() == 0.3).all());
    for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR(B.col(k).head(13).norm(), 2.0, 1e-12);
    // columns of U_K are orthonormal
    const MatrixXd U = B.topRows(13) / 2.0;
    EXPECT_LT((U.transpose() * U - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-12);

    EXPECT_TRUE(prob.raw_delta.head(40).isZero(0));
    EXPECT_EQ((prob.raw_delta.array() != 0).count(), 8);
    EXPECT_TRUE((B.transpose() * prob.raw_delta).isZero(0));
    EXPECT_EQ(prob.model.w, default_weights(5));
    EXPECT_EQ(prob.model.beta, B * prob.model.w + prob.model.delta);
    EXPECT_TRUE(prob.model.Sigma.isIdentity(0));
    EXPECT_EQ(prob.sigma2, 1.0);
    EXPECT_EQ(prob.sigma2_k, std::vector<double>(5, 1.0));
}

TEST(Example1, NeedsEnoughSingularVectorRows)
{
    EXPECT_THROW(generate_problem(config(1, 100, 12, 0)), InvalidConfiguration); // r0 = 4 < 5
}

TEST(Example1, ResidualEnergyMatchesBudgetOnAverage)
{
    double total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) total += generate_problem(config(1, 200, 40, seed)).raw_delta.squaredNorm();
    EXPECT_NEAR(total / 100, 6.0, 0.3 * 6.0);
}

TEST(Example2, Structure)
{
    auto cfg = config(2, 200, 40, 4);
    const auto prob = generate_problem(cfg);
    const Eigen::Index s_c = cfg.s_c();
    EXPECT_EQ(s_c, 20);
    EXPECT_TRUE(check_identification(prob.model, 1e-8).holds);
    EXPECT_NEAR(prob.model.delta.norm(), 6.0, 1e-12);
    // zero rows of B in the sampled block leave a degenerate null space, so
    // the chosen eigenvector may vanish on some of the s_delta indices
    EXPECT_LE((prob.model.delta.array() != 0).count(), 8);
    for (Eigen::Index k = 0; k < 5; ++k) {
        EXPECT_EQ((prob.model.B.col(k).array() != 0).count(), 40);
        for (Eigen::Index j = 0; j < s_c; ++j) EXPECT_NE(prob.model.B(j, k), 0.0);
    }
    EXPECT_EQ(prob.model.beta, prob.model.B * prob.model.w + prob.model.delta);
}

TEST(Example2, NeedsResidualSupportLargerThanK)
{
    EXPECT_THROW(generate_problem(config(2, 200, 20, 0)), InvalidConfiguration); // s_delta = 4 <= 5
    EXPECT_NO_THROW(generate_problem(config(2, 200, 30, 0)));
}

TEST(Example3, ToeplitzRows)
{
    const MatrixXd S1 = toeplitz_source_covariance(1, 5);
    EXPECT_EQ(S1.row(0), (Eigen::RowVectorXd(5) << 1, 0.5, 0, 0, 0).finished());
    const MatrixXd S2 = toeplitz_source_covariance(2, 6);
    for (Eigen::Index j = 1; j <= 3; ++j) EXPECT_DOUBLE_EQ(S2(0, j), 1.0 / 3.0);
    EXPECT_EQ(S2(0, 4), 0.0);
    EXPECT_EQ(S2(0, 5), 0.0);
    EXPECT_TRUE(S2.isApprox(S2.transpose(), 0));
    EXPECT_EQ(S2(2, 4), S2(0, 2));
}

TEST(Example3, SourceCovariancesArePositiveDefinite)
{
    for (int k = 1; k <= 5; ++k) EXPECT_GT(min_eigenvalue(toeplitz_source_covariance(k, 500)), 0.0) << k;
}

TEST(Example3, Variances)
{
    const auto prob = generate_problem(config(3, 100, 30, 1));
    EXPECT_EQ(prob.sigma2_k, (std::vector<double>{1, 2, 3, 4, 5}));
    EXPECT_TRUE(prob.model.Sigma.isIdentity(0));
    EXPECT_TRUE(check_identification(prob.model, 1e-8).holds);
}

TEST(Example4, CovariancesAndIdentification)
{
    const auto prob = generate_problem(config(4, 100, 30, 2));
    EXPECT_DOUBLE_EQ(prob.model.Sigma(0, 2), 0.25);
    EXPECT_DOUBLE_EQ(prob.model.Sigma(4, 1), 0.125);
    for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(prob.sigma2_k[k], std::pow(1.25, k + 1 - 3));
    // canonical pair is identified and reassembles the same beta
    EXPECT_LE((prob.model.B.transpose() * prob.model.Sigma * prob.model.delta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((prob.model.B * prob.model.w + prob.model.delta - prob.model.beta).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(prob.raw_w, default_weights(5));
}

TEST(Example4, RawPairViolatesIdentificationAcrossSeeds)
{
    // The AR(1) coupling decays geometrically, so the raw residual is only
    // guaranteed to break BᵀΣδ = 0 when it touches the support of B.
    int touching = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto prob = generate_problem(config(4, 100, 30, seed));
        if (prob.raw_delta.head(30).isZero(0)) continue;
        ++touching;
        EXPECT_FALSE(check_identification(prob.model.B, prob.model.Sigma, prob.raw_delta, 1e-8).holds) << seed;
    }
    EXPECT_GE(touching, 5);
}

TEST(Examples, IdentificationHoldsForOneToThree)
{
    for (int ex = 1; ex <= 3; ++ex)
        for (std::uint64_t seed = 0; seed < 5; ++seed)
            EXPECT_TRUE(check_identification(generate_problem(config(ex, 150, 30, seed)).model, 1e-8).holds);
}

TEST(Examples, CovariancesSymmetricPositiveDefinite)
{
    for (int ex = 1; ex <= 4; ++ex) {
        const auto prob = generate_problem(config(ex, 120, 30, 7));
        EXPECT_TRUE(prob.model.Sigma.isApprox(prob.model.Sigma.transpose(), 0));
        EXPECT_GT(min_eigenvalue(prob.model.Sigma), 0.0);
        for (const auto& S : prob.Sigma_k) {
            EXPECT_TRUE(S.isApprox(S.transpose(), 0));
            EXPECT_GT(min_eigenvalue(S), 0.0);
        }
    }
}

TEST(Examples, RegenerationIsBitIdentical)
{
    for (int ex = 1; ex <= 4; ++ex) {
        const auto a = generate_problem(config(ex, 100, 30, 11));
        const auto b = generate_problem(config(ex, 100, 30, 11));
        EXPECT_EQ(a.model.B, b.model.B);
        EXPECT_EQ(a.model.beta, b.model.beta);
        EXPECT_EQ(a.raw_delta, b.raw_delta);
    }
}

TEST(SingularVectors, UnitNormAndSignConvention)
{
    Rng rng(3);
    const MatrixXd U = random_left_singular_vectors(13, 5, rng);
    for (Eigen::Index k = 0; k < 5; ++k) {
        EXPECT_NEAR(U.col(k).norm(), 1.0, 1e-12);
        Eigen::Index at = 0;
        U.col(k).cwiseAbs().maxCoeff(&at);
        EXPECT_GT(U(at, k), 0.0);
    }
}

TEST(SampleDataset, IdentityMoments)
{
    auto prob = generate_problem(config(1, 20, 15, 1));
    Rng rng(5);
    const auto d = sample_dataset(prob, 10000, kTargetRole, rng);
    const MatrixXd cov = d.X.transpose() * d.X / 10000.0;
    EXPECT_LT((cov - MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(SampleDataset, Ar1Moments)
{
    auto prob = generate_problem(config(4, 20, 15, 1));
    Rng rng(6);
    const auto d = sample_dataset(prob, 20000, kTargetRole, rng);
    const MatrixXd cov = d.X.transpose() * d.X / 20000.0;
    EXPECT_LT((cov - prob.model.Sigma).cwiseAbs().maxCoeff(), 0.1);
}

TEST(SampleDataset, NoiselessAndDeterministic)
{
    auto prob = generate_problem(config(3, 30, 15, 2));
    prob.sigma2 = 0;
    prob.sigma2_k.assign(5, 0.0);
    Rng a(9), b(9);
    const auto t = sample_dataset(prob, 50, kTargetRole, a);
    EXPECT_EQ(t.y, t.X * prob.model.beta);
    const auto s = sample_dataset(prob, 50, 2, a);
    EXPECT_EQ(s.y, s.X * prob.model.B.col(2));
    EXPECT_EQ(sample_dataset(prob, 50, kTargetRole, b).X, t.X);
    EXPECT_THROW(sample_dataset(prob, 5, 7, a), InvalidArgument);
}

TEST(CovarianceFactor, RejectsIndefinite)
{
    MatrixXd S = MatrixXd::Identity(3, 3);
    S(0, 1) = S(1, 0) = 2.0;
    EXPECT_THROW(CovarianceFactor::of(S), NotPositiveDefinite);
}
