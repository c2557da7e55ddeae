// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "oracles.hpp"
#include "ptl/harness.hpp"
#include "ptl/lasso.hpp"
#include "ptl/oracle.hpp"
#include "ptl/parallel.hpp"

using namespace ptl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o, double seconds)
{
    if (!o.pass) ++failures;
    std::printf("%s  %-34s %s  [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
}

double run_timed(const std::string& name, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(name, o, s);
    return s;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

double median_of(const ExperimentResult& r, const std::string& estimator)
{
    for (const auto& s : r.summaries)
        if (s.estimator == estimator) return s.median;
    throw std::runtime_error("no summary for " + estimator);
}

ExperimentConfig scaled(int example, Eigen::Index N, Eigen::Index s)
{
    ExperimentConfig c;
    c.sim.example = example;
    c.sim.p = 200;
    c.sim.n = 100;
    c.sim.N = N;
    c.sim.K = 5;
    c.sim.s = s;
    c.sim.h = 6;
    c.sim.seed = 2024;
    c.replications = 50;
    c.threads = default_thread_count();
    return c;
}

// Worst ||Zᵀe||_inf / (1 + ||y||) over the PTL fits of a run.
double worst_orthogonality(const ExperimentResult& r)
{
    double worst = 0;
    for (double v : r.ptl_orthogonality) worst = std::isnan(v) ? INFINITY : std::max(worst, v);
    return worst;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(PTL_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

int main()
{
    std::printf("threads: %d\n", default_thread_count());

    // 1. Solver correctness
    {
        double seconds = 0;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            Rng rng(101);
            double worst_kkt = 0, worst_dist = 0;
            for (int inst = 0; inst < 20; ++inst) {
                const MatrixXd X = ref::gaussian_matrix(50, 30, rng);
                VectorXd beta = VectorXd::Zero(30);
                for (int j = 0; j < 5; ++j) beta(j * 6) = standard_normal(rng) * 2;
                const VectorXd y = X * beta + ref::gaussian_vector(50, rng);
                for (double lambda : {0.01, 0.1}) {
                    const auto fit = solve_lasso(X, y, lambda, LassoOptions{});
                    worst_kkt = std::max(worst_kkt, kkt_violation(X, y, fit.beta, lambda));
                    const VectorXd ref = ref::proximal_gradient_lasso(X, y, lambda);
                    worst_dist = std::max(worst_dist, (fit.beta - ref).cwiseAbs().maxCoeff());
                }
            }
            seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            o.pass = worst_kkt <= 1e-6 && worst_dist <= 1e-6 && seconds < 5;
            o.detail = "max kkt " + fmt(worst_kkt) + ", max |cd - prox| " + fmt(worst_dist);
        } catch (const std::exception& e) {
            o.detail = e.what();
            seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        report("1 solver correctness", o, seconds);
    }

    // 2. Identification oracle
    run_timed("2 identification oracle", [] {
        const auto t0 = std::chrono::steady_clock::now();
        Rng rng(202);
        double worst_orth = 0, worst_sum = 0;
        for (int m = 0; m < 100; ++m) {
            const MatrixXd B = ref::gaussian_matrix(20, 4, rng);
            const MatrixXd A = ref::gaussian_matrix(20, 20, rng);
            const MatrixXd Sigma = A * A.transpose() / 20.0 + 0.5 * MatrixXd::Identity(20, 20);
            const VectorXd beta = ref::gaussian_vector(20, rng);
            const auto d = decompose(beta, B, Sigma);
            worst_orth = std::max(worst_orth, check_identification(B, Sigma, d.delta, 0).max_violation);
            worst_sum = std::max(worst_sum, (beta - B * d.w - d.delta).cwiseAbs().maxCoeff());
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return Outcome{worst_orth <= 1e-8 && worst_sum <= 1e-10 && s < 1,
                       "max |BᵀΣδ| " + fmt(worst_orth) + ", max reassembly " + fmt(worst_sum)};
    });

    double worst_ortho = 0;
    bool ortho_seen = false;
    auto track = [&](const ExperimentResult& r) {
        worst_ortho = std::max(worst_ortho, worst_orthogonality(r));
        ortho_seen = true;
    };

    // 4. Noiseless end-to-end
    run_timed("4 noiseless end-to-end", [&] {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentConfig c;
        c.sim.example = 1;
        c.sim.p = 100;
        c.sim.n = 50;
        c.sim.N = 200;
        c.sim.s = 20;
        c.sim.seed = 404;
        c.replications = 10;
        c.noiseless = true;
        c.zero_delta = true;
        c.source_estimator = SourceEstimator::Ols;
        c.estimators = {Estimator::Ptl};
        c.threads = default_thread_count();
        const auto r = run_experiment(c);
        track(r);
        int ok = 0;
        double worst = 0;
        for (const auto& rec : r.records) {
            ok += !rec.failed && rec.mse <= 1e-10;
            worst = std::max(worst, rec.failed ? INFINITY : rec.mse);
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return Outcome{ok == 10 && s < 10, std::to_string(ok) + "/10 with mse <= 1e-10, worst " + fmt(worst)};
    });

    // 5. Scaled Example 1
    double med5_ptl = 0;
    run_timed("5 scaled example 1 ordering", [&] {
        const auto r = run_experiment(scaled(1, 500, 20));
        track(r);
        const double ptl = median_of(r, "ptl"), tl = median_of(r, "translasso"), la = median_of(r, "lasso");
        med5_ptl = ptl;
        return Outcome{ptl < tl && tl < la && ptl <= 0.5 * la && r.wall_seconds < 600,
                       "median mse ptl " + fmt(ptl) + ", translasso " + fmt(tl) + ", lasso " + fmt(la)};
    });

    // 6. Scaled Example 2. s = 30: s = 20 gives floor(s/5) = 4 <= K, for
    // which the construction has no residual direction.
    run_timed("6 scaled example 2", [&] {
        const auto small = run_experiment(scaled(2, 250, 30));
        const auto large = run_experiment(scaled(2, 500, 30));
        track(small);
        track(large);
        const double ptl250 = median_of(small, "ptl"), ptl500 = median_of(large, "ptl");
        const double tl250 = median_of(small, "translasso"), tl500 = median_of(large, "translasso");
        const double ptl_drop = 1 - ptl500 / ptl250, tl_drop = 1 - tl500 / tl250;
        const bool pass = ptl500 < tl500 && ptl_drop >= 0.10 && tl_drop < ptl_drop && small.wall_seconds < 600
                          && large.wall_seconds < 600;
        return Outcome{pass, "N=500 ptl " + fmt(ptl500) + " vs translasso " + fmt(tl500) + "; N 250->500 drop ptl "
                                 + fmt(100 * ptl_drop) + "%, translasso " + fmt(100 * tl_drop) + "%"};
    });

    // 3. Orthogonality over every fit of 4-6
    {
        const Outcome o{ortho_seen && worst_ortho <= 1e-8, "max |Zᵀe|/(1+|y|) " + fmt(worst_ortho)};
        report("3 profiling orthogonality", o, 0);
    }

    // 7. Rate trend in N
    run_timed("7 rate trend in N", [] {
        std::string detail = "median ptl mse";
        double prev = INFINITY;
        bool monotone = true;
        for (Eigen::Index N : {250, 500, 1000}) {
            auto c = scaled(1, N, 20);
            c.estimators = {Estimator::Ptl};
            const double m = median_of(run_experiment(c), "ptl");
            monotone = monotone && m <= prev;
            prev = m;
            detail += " N=" + std::to_string(N) + ": " + fmt(m);
        }
        return Outcome{monotone, detail};
    });

    // 8. Scaled Example 4
    run_timed("8 scaled example 4", [] {
        const auto r = run_experiment(scaled(4, 500, 20));
        const double ptl = median_of(r, "ptl"), tl = median_of(r, "translasso"), la = median_of(r, "lasso");
        return Outcome{ptl < tl && ptl < la,
                       "median mse ptl " + fmt(ptl) + ", translasso " + fmt(tl) + ", lasso " + fmt(la)};
    });

    // 9. Determinism of the criterion 5 command
    run_timed("9 cli determinism", [] {
        const auto dir = fs::temp_directory_path() / "ptl_acceptance";
        fs::create_directories(dir);
        const std::string args = "simulate --example 1 --p 200 --n 100 --N 500 --K 5 --s 20 --h 6 --reps 50 "
                                 "--seed 2024 --estimators lasso,translasso,ptl --out ";
        const auto a = dir / "run_a.csv", b = dir / "run_b.csv";
        const int ca = run_cli(args + a.string()), cb = run_cli(args + b.string());
        if (ca != 0 || cb != 0) return Outcome{false, "cli exit codes " + std::to_string(ca) + ", " + std::to_string(cb)};
        const std::string x = slurp(a), y = slurp(b);
        return Outcome{!x.empty() && x == y, std::to_string(x.size()) + " bytes, " + (x == y ? "identical" : "differ")};
    });

    // R² protocol fixture
    run_timed("r2 hand fixture", [] {
        const VectorXd y = (VectorXd(10) << 3.1, -0.4, 2.2, 5.0, 1.7, -2.3, 0.9, 4.4, 2.8, -1.1).finished();
        const VectorXd f = (VectorXd(10) << 2.7, 0.1, 2.0, 4.1, 1.9, -1.8, 1.3, 3.6, 2.2, -0.5).finished();
        double mean = 0;
        for (int i = 0; i < 10; ++i) mean += y(i);
        mean /= 10;
        double ss_res = 0, ss_tot = 0;
        for (int i = 0; i < 10; ++i) {
            ss_res += (y(i) - f(i)) * (y(i) - f(i));
            ss_tot += (y(i) - mean) * (y(i) - mean);
        }
        const double expected = 1 - ss_res / ss_tot;
        const auto got = r_squared(f, y);
        const double err = got ? std::abs(*got - expected) : INFINITY;
        return Outcome{err <= 1e-12, "|diff| " + fmt(err)};
    });

    std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
    return failures ? 1 : 0;
}
