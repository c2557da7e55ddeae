#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ptl/core_data.hpp"
#include "ptl/oracle.hpp"
#include "ptl/rng.hpp"
#include "ptl/types.hpp"

namespace ptl {

/// Settings for the four simulation designs. Support sizes derived from s:
/// r0 = floor(s/3) rows carry the singular-vector block of B, s_delta =
/// floor(s/5) entries of delta are nonzero.
struct SimConfig {
    int example = 1;
    Eigen::Index n = 150;  // target size
    Eigen::Index N = 800;  // size of every source
    Eigen::Index p = 500;
    Eigen::Index K = 5;
    Eigen::Index s = 40;
    double h = 6;
    std::uint64_t seed = 0;
    std::optional<Eigen::Index> common_support; // Example 2 only; default floor(s/2)

    Eigen::Index r0() const { return s / 3; }
    Eigen::Index s_delta() const { return s / 5; }
    Eigen::Index s_c() const { return common_support.value_or(s / 2); }

    void validate() const;
};

/// Σ = L Lᵀ, computed once per covariance and reused for every draw.
struct CovarianceFactor {
    MatrixXd L;
    bool identity = false;

    static CovarianceFactor of(const MatrixXd& Sigma);
};

struct GeneratedProblem {
    PopulationModelXd model; // canonical pair: BᵀΣδ = 0
    VectorXd raw_w;          // weights as constructed by the generator
    VectorXd raw_delta;      // residual as constructed (differs from model.delta in Example 4)
    std::vector<MatrixXd> Sigma_k;
    double sigma2 = 1;
    std::vector<double> sigma2_k;

    CovarianceFactor target_factor;
    std::vector<CovarianceFactor> source_factors;

    Eigen::Index p() const { return model.p(); }
    Eigen::Index K() const { return model.K(); }
    const VectorXd& beta() const { return model.beta; }
};

/// (3/2, 3/4, 0, 0, -5/4), truncated or zero-padded to length K.
VectorXd default_weights(Eigen::Index K);

/// Symmetric Toeplitz matrix with first row (1, 1_{2k-1}ᵀ/(k+1), 0ᵀ); k is 1-based.
MatrixXd toeplitz_source_covariance(int k, Eigen::Index p);

/// σ_ij = rho^|i-j|.
MatrixXd ar1_covariance(Eigen::Index p, double rho);

/// First K left singular vectors of a rows x K standard normal matrix, each
/// signed so its largest-magnitude entry is positive.
MatrixXd random_left_singular_vectors(Eigen::Index rows, Eigen::Index K, Rng& rng);

GeneratedProblem gen_example1(const SimConfig& cfg, Rng& rng);
GeneratedProblem gen_example2(const SimConfig& cfg, Rng& rng);
GeneratedProblem gen_example3(const SimConfig& cfg, Rng& rng);
GeneratedProblem gen_example4(const SimConfig& cfg, Rng& rng);

/// Dispatches on cfg.example with an Rng seeded from cfg.seed.
GeneratedProblem generate_problem(const SimConfig& cfg);

/// Recomputes the covariance factors after Sigma or Sigma_k were edited.
void refresh_factors(GeneratedProblem& problem);

inline constexpr int kTargetRole = -1;

/// Draws n rows for the target (role = kTargetRole) or source `role`
/// (0-based): X_i ~ N(0, Σ_role), y = Xβ_role + ε with ε ~ N(0, σ²_role).
DataSetXd sample_dataset(const GeneratedProblem& problem, Eigen::Index n, int role, Rng& rng);

} // namespace ptl
