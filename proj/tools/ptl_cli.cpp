// Command-line front end: simulate | fit | evaluate.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ptl/harness.hpp"
#include "ptl/parallel.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

void print_summary(const ptl::ExperimentResult& result)
{
    std::cerr << "estimator    n    median_mse    q1    q3\n";
    for (const auto& s : result.summaries)
        std::cerr << s.estimator << "  " << s.count << "  " << s.median << "  " << s.q1 << "  " << s.q3 << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Profiled transfer learning for high-dimensional linear regression"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo comparison on a simulated design");
    simulate->set_help_flag("--help", "Print this help message and exit"); // -h would clash with --h
    ptl::ExperimentConfig exp;
    std::string estimators = "lasso,translasso,ptl";
    std::string source_estimator = "lasso-cv";
    std::string sim_out;
    bool dump_truth = false;
    std::int64_t common_support = -1;
    simulate->add_option("--example", exp.sim.example, "Simulation design (1-4)")->required()->check(CLI::Range(1, 4));
    simulate->add_option("--n", exp.sim.n, "Target sample size")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--N", exp.sim.N, "Sample size of each source")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--p", exp.sim.p, "Dimension")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--s", exp.sim.s, "Support size")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--K", exp.sim.K, "Number of sources")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--h", exp.sim.h, "Residual budget")->capture_default_str();
    simulate->add_option("--sc", common_support, "Common support size (example 2; default floor(s/2))");
    simulate->add_option("--reps", exp.replications, "Replications")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", exp.sim.seed, "Seed")->required();
    simulate->add_option("--estimators", estimators, "Comma-separated subset of lasso,translasso,ptl")
        ->capture_default_str();
    simulate->add_option("--source-estimator", source_estimator, "auto, lasso-cv, ols")->capture_default_str();
    simulate->add_option("--folds", exp.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000));
    simulate->add_flag("--noiseless", exp.noiseless, "Zero noise variance for target and sources");
    simulate->add_flag("--zero-delta", exp.zero_delta, "Set the residual to zero (beta = B w)");
    simulate->add_option("--out", sim_out, "Output path (.csv or .json)")->required();
    simulate->add_flag("--dump-truth", dump_truth, "Also write ground truth to <out>.truth.csv");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit PTL on CSV datasets named in a config file");
    std::string fit_config, fit_out;
    bool fit_standardize = false;
    fit->add_option("--config", fit_config, "JSON config")->required()->check(CLI::ExistingFile);
    fit->add_option("--out", fit_out, "Output JSON path")->required();
    fit->add_flag("--standardize", fit_standardize, "Center and scale covariates before fitting");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Repeated two-fold out-of-sample R² on real data");
    std::string eval_config, eval_out;
    int repeats = 100;
    std::uint64_t eval_seed = 0;
    std::string eval_estimators = "lasso,translasso,ptl";
    bool eval_standardize = false;
    evaluate->add_option("--config", eval_config, "JSON config")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--repeats", repeats, "Random halvings")->capture_default_str()->check(CLI::PositiveNumber);
    evaluate->add_option("--seed", eval_seed, "Seed")->capture_default_str();
    evaluate->add_option("--out", eval_out, "Output CSV path")->required();
    evaluate->add_option("--estimators", eval_estimators, "Comma-separated subset of lasso,translasso,ptl")
        ->capture_default_str();
    evaluate->add_flag("--standardize", eval_standardize, "Center and scale covariates before fitting");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*simulate) {
            exp.estimators = ptl::parse_estimator_list(estimators);
            exp.source_estimator = ptl::parse_source_estimator(source_estimator);
            if (common_support >= 0) exp.sim.common_support = common_support;
            exp.threads = ptl::default_thread_count();
            exp.sim.validate();
            const auto problem = ptl::prepare_problem(exp);
            const auto result = ptl::run_experiment(exp, problem);
            ptl::emit_results(result, sim_out, ptl::format_for_path(sim_out));
            if (dump_truth) ptl::write_truth_csv(problem, sim_out + ".truth.csv");
            print_summary(result);
        } else if (*fit) {
            auto cfg = ptl::load_config(fit_config);
            cfg.standardize = cfg.standardize || fit_standardize;
            const auto data = ptl::load_data(cfg);
            const auto out = ptl::fit_real(cfg, data);
            ptl::write_fit_json(out, cfg, fit_out);
            std::cerr << "lambda_delta " << out.fit.lambda_delta << ", condition " << out.fit.diagnostics.condition
                      << '\n';
        } else if (*evaluate) {
            auto cfg = ptl::load_config(eval_config);
            cfg.standardize = cfg.standardize || eval_standardize;
            const auto data = ptl::load_data(cfg);
            const auto result = ptl::evaluate_real(cfg, data, repeats, eval_seed,
                                                   ptl::parse_estimator_list(eval_estimators), {},
                                                   ptl::default_thread_count());
            ptl::write_evaluation_csv(result, eval_out);
            for (const auto& [name, mean] : result.means) std::cerr << name << " mean R2 " << mean << '\n';
        }
    } catch (const ptl::InvalidConfiguration& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
