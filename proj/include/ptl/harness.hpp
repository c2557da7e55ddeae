#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptl/baselines.hpp"
#include "ptl/lasso.hpp"
#include "ptl/ptl.hpp"
#include "ptl/simgen.hpp"

namespace ptl {

/// p⁻¹ ||beta_hat - beta||².
double mse(const VectorXd& beta_hat, const VectorXd& beta_true);

/// Out-of-sample R² = 1 - Σ(ŷ - y)² / Σ(y - ȳ)². Empty when the held-out
/// responses are constant.
std::optional<double> r_squared(const VectorXd& y_hat, const VectorXd& y);

enum class Estimator { Lasso, TransLasso, Ptl };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);
std::vector<Estimator> parse_estimator_list(const std::string& comma_separated);

struct ExperimentConfig {
    SimConfig sim;
    int replications = 500;
    std::vector<Estimator> estimators{Estimator::Lasso, Estimator::TransLasso, Estimator::Ptl};
    int folds = 5;
    SourceEstimator source_estimator = SourceEstimator::LassoCv;
    bool noiseless = false; // sigma² = sigma_k² = 0
    bool zero_delta = false; // beta = B w
    LassoOptions lasso;
    int threads = 1;
};

struct ExperimentRecord {
    int replication = 0;
    std::string estimator;
    double mse = 0;
    double log_mse = 0;
    bool failed = false;
    std::string error;

    bool operator==(const ExperimentRecord&) const = default;
};

/// Boxplot five-number summary (linear-interpolation quantiles).
struct QuantileSummary {
    std::string estimator;
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ExperimentRecord> records; // sorted by (replication, estimator order)
    std::vector<std::uint64_t> seeds;      // per-replication data seeds
    std::vector<double> ptl_orthogonality; // ||Ẑᵀê||_inf / (1 + ||y||) per replication, NaN if no PTL fit
    std::vector<QuantileSummary> summaries;
    double wall_seconds = 0;
};

double quantile(std::vector<double> values, double q);
std::vector<QuantileSummary> summarize(const std::vector<ExperimentRecord>& records,
                                       const std::vector<std::string>& estimator_order);

/// Applies the noiseless / zero-residual switches to a generated problem.
GeneratedProblem prepare_problem(const ExperimentConfig& cfg);

/// Monte-Carlo replications over one fixed ground truth. Replication b draws
/// its datasets from derive_seed(sim.seed, b), so it can be rerun alone.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const GeneratedProblem& problem);

enum class ResultFormat { Csv, Json };

ResultFormat format_for_path(const std::filesystem::path& path);
void emit_results(const ExperimentResult& result, const std::filesystem::path& path, ResultFormat format);
std::vector<ExperimentRecord> read_results(const std::filesystem::path& path, ResultFormat format);

/// Long-format ground-truth dump: quantity,index,value.
void write_truth_csv(const GeneratedProblem& problem, const std::filesystem::path& path);

// Real-data protocol --------------------------------------------------------

struct SourceInput {
    std::filesystem::path path;
    SourceSpec spec;
};

struct DataConfig {
    std::filesystem::path target_path;
    std::vector<SourceInput> sources;
    int folds = 5;
    std::uint64_t seed = 0;
    bool standardize = false;
};

/// JSON config: {"target": {"path": ...}, "sources": [{"path": ..., "estimator": ...,
/// "ridge_lambda": ...}], "cv": {"folds": 5}, "seed": 0, "standardize": false}.
/// Relative paths resolve against the config file's directory.
DataConfig load_config(const std::filesystem::path& path);

struct LoadedData {
    DataSetXd target;
    std::vector<DataSetXd> sources;
};

LoadedData load_data(const DataConfig& cfg);

struct RealFitOutput {
    PtlFit<double> fit;
    VectorXd x_scale;       // 1 when not standardized
    VectorXd target_x_mean; // 0 when not standardized
    double target_y_mean = 0;
};

RealFitOutput fit_real(const DataConfig& cfg, const LoadedData& data, const LassoOptions& opts = {});
void write_fit_json(const RealFitOutput& out, const DataConfig& cfg, const std::filesystem::path& path);

struct RSquaredRecord {
    int repeat = 0;
    int orientation = 0; // 0: fit on first half, 1: fit on second half
    std::string estimator;
    double r2 = 0;
};

struct EvaluationResult {
    std::vector<RSquaredRecord> records;
    int skipped = 0;
    std::vector<std::pair<std::string, double>> means;
};

/// Repeated two-fold protocol: each repeat halves the target at random, fits
/// on one half with the sources used in full, scores R² on the other, then
/// swaps the halves.
EvaluationResult evaluate_real(const DataConfig& cfg, const LoadedData& data, int repeats, std::uint64_t seed,
                               const std::vector<Estimator>& estimators, const LassoOptions& opts = {},
                               int threads = 1);

void write_evaluation_csv(const EvaluationResult& result, const std::filesystem::path& path);

} // namespace ptl
