#include "ptl/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ptl {

namespace {

void fix_sign(Eigen::Ref<VectorXd> v)
{
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0) v = -v;
}

// B for Examples 1, 3 and 4: rows [0, r0) hold 2·U_K, rows [r0, s) are 0.3,
// the rest are zero.
MatrixXd common_support_basis(const SimConfig& cfg, Rng& rng)
{
    MatrixXd B = MatrixXd::Zero(cfg.p, cfg.K);
    B.topRows(cfg.r0()) = 2.0 * random_left_singular_vectors(cfg.r0(), cfg.K, rng);
    B.middleRows(cfg.r0(), cfg.s - cfg.r0()).setConstant(0.3);
    return B;
}

// Gaussian residual with variance h/s_delta on s_delta indices drawn from
// {first, ..., p-1}.
VectorXd gaussian_residual(const SimConfig& cfg, Eigen::Index first, Rng& rng)
{
    VectorXd delta = VectorXd::Zero(cfg.p);
    const auto support = sample_without_replacement(static_cast<std::size_t>(first),
                                                    static_cast<std::size_t>(cfg.p - 1),
                                                    static_cast<std::size_t>(cfg.s_delta()), rng);
    const double sd = std::sqrt(cfg.h / static_cast<double>(cfg.s_delta()));
    for (std::size_t j : support) delta(static_cast<Eigen::Index>(j)) = sd * standard_normal(rng);
    return delta;
}

GeneratedProblem assemble(MatrixXd B, VectorXd w, VectorXd delta, MatrixXd Sigma,
                          std::vector<MatrixXd> Sigma_k, double sigma2, std::vector<double> sigma2_k)
{
    GeneratedProblem out;
    VectorXd beta = B * w + delta;
    out.raw_w = w;
    out.raw_delta = delta;
    const auto check = check_identification(B, Sigma, delta, 1e-8 * B.norm() * Sigma.norm() * delta.norm());
    if (check.holds) {
        out.model = {std::move(B), std::move(Sigma), std::move(w), std::move(delta), std::move(beta)};
    } else {
        out.model = make_population_model(beta, std::move(B), std::move(Sigma));
    }
    out.Sigma_k = std::move(Sigma_k);
    out.sigma2 = sigma2;
    out.sigma2_k = std::move(sigma2_k);
    refresh_factors(out);
    return out;
}

} // namespace

void SimConfig::validate() const
{
    if (example < 1 || example > 4) throw InvalidConfiguration("example must be 1, 2, 3 or 4");
    if (n < 1 || N < 1 || p < 1 || K < 1) throw InvalidConfiguration("n, N, p, K must be positive");
    if (s < 1 || s >= p) throw InvalidConfiguration("need 1 <= s < p");
    if (!(h >= 0)) throw InvalidConfiguration("h must be >= 0");
    if (s_delta() < 1) throw InvalidConfiguration("s must be at least 5 so that s_delta >= 1");
}

CovarianceFactor CovarianceFactor::of(const MatrixXd& Sigma)
{
    CovarianceFactor f;
    if (Sigma.isIdentity(0.0)) {
        f.identity = true;
        return f;
    }
    Eigen::LLT<MatrixXd> llt(Sigma);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("covariance matrix is not positive definite");
    f.L = llt.matrixL();
    return f;
}

VectorXd default_weights(Eigen::Index K)
{
    const double pattern[] = {1.5, 0.75, 0.0, 0.0, -1.25};
    VectorXd w = VectorXd::Zero(K);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(K, 5); ++k) w(k) = pattern[k];
    return w;
}

MatrixXd toeplitz_source_covariance(int k, Eigen::Index p)
{
    if (k < 1 || 2 * k > p) throw InvalidConfiguration("toeplitz covariance needs 1 <= k and 2k <= p");
    MatrixXd S = MatrixXd::Identity(p, p);
    const double off = 1.0 / static_cast<double>(k + 1);
    for (Eigen::Index lag = 1; lag <= 2 * k - 1; ++lag) {
        S.diagonal(lag).setConstant(off);
        S.diagonal(-lag).setConstant(off);
    }
    return S;
}

MatrixXd ar1_covariance(Eigen::Index p, double rho)
{
    MatrixXd S(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) S(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return S;
}

MatrixXd random_left_singular_vectors(Eigen::Index rows, Eigen::Index K, Rng& rng)
{
    if (rows < K) throw InvalidConfiguration("need at least K rows for K left singular vectors (rows="
                                             + std::to_string(rows) + ", K=" + std::to_string(K) + ")");
    MatrixXd omega(rows, K);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < K; ++j) omega(i, j) = standard_normal(rng);
    Eigen::JacobiSVD<MatrixXd> svd(omega, Eigen::ComputeThinU);
    MatrixXd U = svd.matrixU().leftCols(K);
    for (Eigen::Index k = 0; k < K; ++k) fix_sign(U.col(k));
    return U;
}

GeneratedProblem gen_example1(const SimConfig& cfg, Rng& rng)
{
    cfg.validate();
    if (cfg.r0() < cfg.K) throw InvalidConfiguration("example 1 needs r0 = floor(s/3) >= K");
    MatrixXd B = common_support_basis(cfg, rng);
    VectorXd delta = gaussian_residual(cfg, cfg.s, rng);
    const auto K = static_cast<std::size_t>(cfg.K);
    return assemble(std::move(B), default_weights(cfg.K), std::move(delta), MatrixXd::Identity(cfg.p, cfg.p),
                    std::vector<MatrixXd>(K, MatrixXd::Identity(cfg.p, cfg.p)), 1.0, std::vector<double>(K, 1.0));
}

GeneratedProblem gen_example2(const SimConfig& cfg, Rng& rng)
{
    cfg.validate();
    const Eigen::Index s_c = cfg.s_c();
    if (cfg.s_delta() <= cfg.K)
        throw InvalidConfiguration("example 2 needs s_delta = floor(s/5) > K so the residual lies in a null space");
    if (s_c < 0 || s_c > cfg.s) throw InvalidConfiguration("example 2 needs 0 <= s_c <= s");

    const MatrixXd U = random_left_singular_vectors(cfg.s, cfg.K, rng);
    MatrixXd B = MatrixXd::Zero(cfg.p, cfg.K);
    for (Eigen::Index k = 0; k < cfg.K; ++k) {
        B.col(k).head(s_c) = 2.0 * U.col(k).head(s_c);
        const auto own = sample_without_replacement(static_cast<std::size_t>(s_c), static_cast<std::size_t>(cfg.p - 1),
                                                    static_cast<std::size_t>(cfg.s - s_c), rng);
        for (std::size_t j = 0; j < own.size(); ++j)
            B(static_cast<Eigen::Index>(own[j]), k) = 2.0 * U(s_c + static_cast<Eigen::Index>(j), k);
    }

    const auto support = sample_without_replacement(0, static_cast<std::size_t>(cfg.p - 1),
                                                    static_cast<std::size_t>(cfg.s_delta()), rng);
    std::vector<Eigen::Index> rows(support.begin(), support.end());
    const MatrixXd B_sub = B(rows, Eigen::all);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(B_sub * B_sub.transpose());
    VectorXd tilde = eig.eigenvectors().col(0); // smallest eigenvalue
    fix_sign(tilde);
    VectorXd delta = VectorXd::Zero(cfg.p);
    delta(rows) = cfg.h * tilde / tilde.norm();

    const auto K = static_cast<std::size_t>(cfg.K);
    return assemble(std::move(B), default_weights(cfg.K), std::move(delta), MatrixXd::Identity(cfg.p, cfg.p),
                    std::vector<MatrixXd>(K, MatrixXd::Identity(cfg.p, cfg.p)), 1.0, std::vector<double>(K, 1.0));
}

GeneratedProblem gen_example3(const SimConfig& cfg, Rng& rng)
{
    cfg.validate();
    if (2 * cfg.K > cfg.p) throw InvalidConfiguration("example 3 needs 2K <= p");
    if (cfg.r0() < cfg.K) throw InvalidConfiguration("example 3 needs r0 = floor(s/3) >= K");
    MatrixXd B = common_support_basis(cfg, rng);
    VectorXd delta = gaussian_residual(cfg, cfg.s, rng);
    std::vector<MatrixXd> Sigma_k;
    std::vector<double> sigma2_k;
    for (int k = 1; k <= cfg.K; ++k) {
        Sigma_k.push_back(toeplitz_source_covariance(k, cfg.p));
        sigma2_k.push_back(static_cast<double>(k));
    }
    return assemble(std::move(B), default_weights(cfg.K), std::move(delta), MatrixXd::Identity(cfg.p, cfg.p),
                    std::move(Sigma_k), 1.0, std::move(sigma2_k));
}

GeneratedProblem gen_example4(const SimConfig& cfg, Rng& rng)
{
    cfg.validate();
    if (2 * cfg.K > cfg.p) throw InvalidConfiguration("example 4 needs 2K <= p");
    if (cfg.r0() < cfg.K) throw InvalidConfiguration("example 4 needs r0 = floor(s/3) >= K");
    MatrixXd B = common_support_basis(cfg, rng);
    VectorXd delta = gaussian_residual(cfg, 0, rng);
    std::vector<MatrixXd> Sigma_k;
    std::vector<double> sigma2_k;
    for (int k = 1; k <= cfg.K; ++k) {
        Sigma_k.push_back(toeplitz_source_covariance(k, cfg.p));
        sigma2_k.push_back(std::pow(1.25, k - 3));
    }
    return assemble(std::move(B), default_weights(cfg.K), std::move(delta), ar1_covariance(cfg.p, 0.5),
                    std::move(Sigma_k), 1.0, std::move(sigma2_k));
}

GeneratedProblem generate_problem(const SimConfig& cfg)
{
    Rng rng(cfg.seed);
    switch (cfg.example) {
    case 1: return gen_example1(cfg, rng);
    case 2: return gen_example2(cfg, rng);
    case 3: return gen_example3(cfg, rng);
    case 4: return gen_example4(cfg, rng);
    default: throw InvalidConfiguration("example must be 1, 2, 3 or 4");
    }
}

void refresh_factors(GeneratedProblem& problem)
{
    problem.target_factor = CovarianceFactor::of(problem.model.Sigma);
    problem.source_factors.clear();
    for (const auto& S : problem.Sigma_k) problem.source_factors.push_back(CovarianceFactor::of(S));
}

DataSetXd sample_dataset(const GeneratedProblem& problem, Eigen::Index n, int role, Rng& rng)
{
    const Eigen::Index p = problem.p();
    const bool target = role == kTargetRole;
    if (!target && (role < 0 || role >= problem.K())) throw InvalidArgument("sample_dataset: unknown role");
    const auto& factor = target ? problem.target_factor : problem.source_factors[static_cast<std::size_t>(role)];
    const double sigma2 = target ? problem.sigma2 : problem.sigma2_k[static_cast<std::size_t>(role)];
    if (sigma2 < 0) throw InvalidArgument("sample_dataset: negative noise variance");

    MatrixXd Z(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = standard_normal(rng);

    DataSetXd out;
    if (factor.identity)
        out.X = std::move(Z);
    else
        out.X.noalias() = Z * factor.L.transpose();

    if (target)
        out.y.noalias() = out.X * problem.model.beta;
    else
        out.y.noalias() = out.X * problem.model.B.col(role);
    if (sigma2 > 0) {
        const double sd = std::sqrt(sigma2);
        for (Eigen::Index i = 0; i < n; ++i) out.y(i) += sd * standard_normal(rng);
    }
    return out;
}

} // namespace ptl
