#include "ptl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ptl/io.hpp"
#include "ptl/parallel.hpp"
#include "ptl/rng.hpp"

namespace ptl {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kCvStream = 0xc5;

json config_to_json(const ExperimentConfig& cfg)
{
    json est = json::array();
    for (auto e : cfg.estimators) est.push_back(to_string(e));
    json sim = {{"example", cfg.sim.example}, {"n", cfg.sim.n}, {"N", cfg.sim.N}, {"p", cfg.sim.p},
                {"K", cfg.sim.K}, {"s", cfg.sim.s}, {"h", cfg.sim.h}, {"seed", cfg.sim.seed},
                {"r0", cfg.sim.r0()}, {"s_delta", cfg.sim.s_delta()}};
    if (cfg.sim.example == 2) sim["s_c"] = cfg.sim.s_c();
    return {{"sim", sim},
            {"replications", cfg.replications},
            {"estimators", est},
            {"folds", cfg.folds},
            {"source_estimator", to_string(cfg.source_estimator)},
            {"translasso_variant", "oracle (all sources informative)"},
            {"noiseless", cfg.noiseless},
            {"zero_delta", cfg.zero_delta},
            {"lasso", {{"tol", cfg.lasso.tol}, {"max_sweeps", cfg.lasso.max_sweeps}, {"n_lambdas", cfg.lasso.n_lambdas}}}};
}

json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

} // namespace

double mse(const VectorXd& beta_hat, const VectorXd& beta_true)
{
    if (beta_hat.size() != beta_true.size()) throw InvalidArgument("mse: length mismatch");
    if (beta_hat.size() == 0) throw InvalidArgument("mse: empty vectors");
    return (beta_hat - beta_true).squaredNorm() / static_cast<double>(beta_true.size());
}

std::optional<double> r_squared(const VectorXd& y_hat, const VectorXd& y)
{
    if (y_hat.size() != y.size()) throw InvalidArgument("r_squared: length mismatch");
    if (y.size() == 0) return std::nullopt;
    const double mean = y.mean();
    const double total = (y.array() - mean).square().sum();
    if (!(total > 0)) return std::nullopt;
    return 1.0 - (y_hat - y).squaredNorm() / total;
}

std::string to_string(Estimator e)
{
    switch (e) {
    case Estimator::Lasso: return "lasso";
    case Estimator::TransLasso: return "translasso";
    case Estimator::Ptl: return "ptl";
    }
    return "unknown";
}

Estimator parse_estimator(const std::string& name)
{
    if (name == "lasso") return Estimator::Lasso;
    if (name == "translasso" || name == "trans-lasso") return Estimator::TransLasso;
    if (name == "ptl") return Estimator::Ptl;
    throw InvalidConfiguration("unknown estimator '" + name + "' (expected lasso, translasso or ptl)");
}

std::vector<Estimator> parse_estimator_list(const std::string& comma_separated)
{
    std::vector<Estimator> out;
    for (const auto& name : split_csv_line(comma_separated)) {
        if (name.empty()) continue;
        const auto e = parse_estimator(name);
        if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
    }
    if (out.empty()) throw InvalidConfiguration("no estimators requested");
    return out;
}

double quantile(std::vector<double> values, double q)
{
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<QuantileSummary> summarize(const std::vector<ExperimentRecord>& records,
                                       const std::vector<std::string>& estimator_order)
{
    std::vector<QuantileSummary> out;
    for (const auto& name : estimator_order) {
        std::vector<double> values;
        for (const auto& r : records)
            if (r.estimator == name && !r.failed) values.push_back(r.mse);
        QuantileSummary s;
        s.estimator = name;
        s.count = values.size();
        s.min = quantile(values, 0.0);
        s.q1 = quantile(values, 0.25);
        s.median = quantile(values, 0.5);
        s.q3 = quantile(values, 0.75);
        s.max = quantile(values, 1.0);
        out.push_back(s);
    }
    return out;
}

GeneratedProblem prepare_problem(const ExperimentConfig& cfg)
{
    GeneratedProblem problem = generate_problem(cfg.sim);
    if (cfg.noiseless) {
        problem.sigma2 = 0;
        std::fill(problem.sigma2_k.begin(), problem.sigma2_k.end(), 0.0);
    }
    if (cfg.zero_delta) {
        problem.raw_delta.setZero();
        problem.model.delta.setZero();
        problem.model.w = problem.raw_w;
        problem.model.beta = problem.model.B * problem.raw_w;
    }
    return problem;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
    return run_experiment(cfg, prepare_problem(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const GeneratedProblem& problem)
{
    if (cfg.replications < 1) throw InvalidConfiguration("replications must be >= 1");
    if (cfg.estimators.empty()) throw InvalidConfiguration("no estimators requested");
    cfg.lasso.validate();
    const auto started = std::chrono::steady_clock::now();

    const auto B = static_cast<std::size_t>(cfg.replications);
    const std::size_t E = cfg.estimators.size();
    ExperimentResult result;
    result.config = cfg;
    result.records.resize(B * E);
    result.seeds.resize(B);
    result.ptl_orthogonality.assign(B, std::numeric_limits<double>::quiet_NaN());

    std::vector<SourceSpec> specs(static_cast<std::size_t>(problem.K()), SourceSpec{cfg.source_estimator, 0.0});

    parallel_for(B, cfg.threads, [&](std::size_t b) {
        const std::uint64_t seed = derive_seed(cfg.sim.seed, b);
        result.seeds[b] = seed;
        Rng rng(seed);
        const DataSetXd target = sample_dataset(problem, cfg.sim.n, kTargetRole, rng);
        std::vector<DataSetXd> sources;
        for (int k = 0; k < problem.K(); ++k) sources.push_back(sample_dataset(problem, cfg.sim.N, k, rng));
        const std::uint64_t cv_seed = derive_seed(seed, kCvStream);

        for (std::size_t e = 0; e < E; ++e) {
            ExperimentRecord& rec = result.records[b * E + e];
            rec.replication = static_cast<int>(b);
            rec.estimator = to_string(cfg.estimators[e]);
            try {
                VectorXd beta_hat;
                switch (cfg.estimators[e]) {
                case Estimator::Lasso:
                    beta_hat = fit_lasso_target(target, cfg.folds, cfg.lasso, cv_seed).beta;
                    break;
                case Estimator::TransLasso:
                    beta_hat = fit_translasso(sources, target, cfg.folds, cfg.lasso, cv_seed).beta;
                    break;
                case Estimator::Ptl: {
                    PtlConfig pc;
                    pc.folds = cfg.folds;
                    pc.seed = cv_seed;
                    pc.lasso = cfg.lasso;
                    pc.sources = specs;
                    auto fit = fit_ptl(sources, target, pc);
                    result.ptl_orthogonality[b] = fit.diagnostics.orthogonality / (1.0 + fit.diagnostics.response_norm);
                    beta_hat = std::move(fit.beta_hat);
                    break;
                }
                }
                rec.mse = mse(beta_hat, problem.beta());
                rec.log_mse = std::log(rec.mse);
            } catch (const std::exception& ex) {
                rec.failed = true;
                rec.error = ex.what();
                rec.mse = std::numeric_limits<double>::quiet_NaN();
                rec.log_mse = rec.mse;
            }
        }
    });

    const auto failures = std::count_if(result.records.begin(), result.records.end(), [](const auto& r) { return r.failed; });
    if (static_cast<double>(failures) > 0.1 * static_cast<double>(result.records.size())) {
        std::string first;
        for (const auto& r : result.records)
            if (r.failed) {
                first = r.error;
                break;
            }
        throw std::runtime_error("run_experiment: " + std::to_string(failures) + " of "
                                 + std::to_string(result.records.size()) + " fits failed; first error: " + first);
    }

    std::vector<std::string> order;
    for (auto e : cfg.estimators) order.push_back(to_string(e));
    result.summaries = summarize(result.records, order);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

ResultFormat format_for_path(const std::filesystem::path& path)
{
    return path.extension() == ".json" ? ResultFormat::Json : ResultFormat::Csv;
}

void emit_results(const ExperimentResult& result, const std::filesystem::path& path, ResultFormat format)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == ResultFormat::Csv) {
        out << "replication,estimator,mse,log_mse\n";
        for (const auto& r : result.records)
            out << r.replication << ',' << r.estimator << ',' << format_double(r.mse) << ','
                << format_double(r.log_mse) << '\n';
    } else {
        json records = json::array();
        for (const auto& r : result.records) {
            json j = {{"replication", r.replication}, {"estimator", r.estimator},
                      {"mse", finite_or_null(r.mse)}, {"log_mse", finite_or_null(r.log_mse)}};
            if (r.failed) j["error"] = r.error;
            records.push_back(j);
        }
        json summary = json::array();
        for (const auto& s : result.summaries)
            summary.push_back({{"estimator", s.estimator}, {"count", s.count}, {"min", finite_or_null(s.min)},
                               {"q1", finite_or_null(s.q1)}, {"median", finite_or_null(s.median)},
                               {"q3", finite_or_null(s.q3)}, {"max", finite_or_null(s.max)}});
        json ortho = json::array();
        for (double v : result.ptl_orthogonality) ortho.push_back(finite_or_null(v));
        json doc = {{"config", config_to_json(result.config)},
                    {"seeds", result.seeds},
                    {"wall_seconds", result.wall_seconds},
                    {"records", records},
                    {"summary", summary},
                    {"ptl_orthogonality", ortho}};
        out << doc.dump(2) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ExperimentRecord> read_results(const std::filesystem::path& path, ResultFormat format)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<ExperimentRecord> out;
    if (format == ResultFormat::Csv) {
        std::string line;
        if (!std::getline(in, line) || line != "replication,estimator,mse,log_mse")
            throw IoError(path.string() + ": unexpected results header");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto cells = split_csv_line(line);
            if (cells.size() != 4) throw IoError(path.string() + ": malformed results row '" + line + "'");
            ExperimentRecord r;
            r.replication = static_cast<int>(parse_double(cells[0]));
            r.estimator = cells[1];
            r.mse = parse_double(cells[2]);
            r.log_mse = parse_double(cells[3]);
            r.failed = std::isnan(r.mse);
            out.push_back(std::move(r));
        }
    } else {
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw IoError(path.string() + ": " + e.what());
        }
        for (const auto& j : doc.at("records")) {
            ExperimentRecord r;
            r.replication = j.at("replication").get<int>();
            r.estimator = j.at("estimator").get<std::string>();
            const auto num = [](const json& v) {
                return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
            };
            r.mse = num(j.at("mse"));
            r.log_mse = num(j.at("log_mse"));
            r.failed = j.contains("error");
            if (r.failed) r.error = j.at("error").get<std::string>();
            if (!r.failed && r.mse == 0) r.log_mse = -std::numeric_limits<double>::infinity();
            out.push_back(std::move(r));
        }
    }
    return out;
}

void write_truth_csv(const GeneratedProblem& problem, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "quantity,index,value\n";
    auto emit = [&](const std::string& name, const VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << name << ',' << i + 1 << ',' << format_double(v(i)) << '\n';
    };
    emit("w", problem.model.w);
    emit("delta", problem.model.delta);
    emit("beta", problem.model.beta);
    if (problem.raw_delta != problem.model.delta) {
        emit("w_raw", problem.raw_w);
        emit("delta_raw", problem.raw_delta);
    }
    for (Eigen::Index k = 0; k < problem.K(); ++k) emit("source" + std::to_string(k + 1), problem.model.B.col(k));
    if (!out) throw IoError("write failed: " + path.string());
}

// Real data ------------------------------------------------------------------

DataConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw InvalidConfiguration(path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    DataConfig cfg;
    try {
        cfg.target_path = resolve(doc.at("target").at("path").get<std::string>());
        for (const auto& s : doc.at("sources")) {
            SourceInput src;
            src.path = resolve(s.at("path").get<std::string>());
            src.spec.kind = parse_source_estimator(s.value("estimator", std::string("auto")));
            src.spec.ridge_lambda = s.value("ridge_lambda", 0.0);
            cfg.sources.push_back(std::move(src));
        }
        if (doc.contains("cv")) cfg.folds = doc["cv"].value("folds", 5);
        cfg.seed = doc.value("seed", std::uint64_t{0});
        cfg.standardize = doc.value("standardize", false);
    } catch (const json::exception& e) {
        throw InvalidConfiguration(path.string() + ": " + e.what());
    }
    if (cfg.sources.empty()) throw InvalidConfiguration(path.string() + ": at least one source is required");
    if (cfg.folds < 2) throw InvalidConfiguration(path.string() + ": cv.folds must be >= 2");
    return cfg;
}

LoadedData load_data(const DataConfig& cfg)
{
    LoadedData data;
    data.target = read_dataset_csv(cfg.target_path);
    for (const auto& s : cfg.sources) {
        data.sources.push_back(read_dataset_csv(s.path));
        if (data.sources.back().p() != data.target.p())
            throw InvalidArgument(s.path.string() + ": has p=" + std::to_string(data.sources.back().p())
                                  + " but target has p=" + std::to_string(data.target.p()));
    }
    return data;
}

namespace {

std::vector<SourceSpec> specs_of(const DataConfig& cfg)
{
    std::vector<SourceSpec> specs;
    for (const auto& s : cfg.sources) specs.push_back(s.spec);
    return specs;
}

// Applies the shared scaling; returns the standardized sources.
std::vector<DataSetXd> standardized_sources(const LoadedData& data, const Standardizer<double>& st)
{
    std::vector<DataSetXd> out = data.sources;
    for (auto& s : out) st.apply(s);
    return out;
}

} // namespace

RealFitOutput fit_real(const DataConfig& cfg, const LoadedData& data, const LassoOptions& opts)
{
    PtlConfig pc;
    pc.folds = cfg.folds;
    pc.seed = cfg.seed;
    pc.lasso = opts;
    pc.sources = specs_of(cfg);

    RealFitOutput out;
    const Eigen::Index p = data.target.p();
    out.x_scale = VectorXd::Ones(p);
    out.target_x_mean = VectorXd::Zero(p);
    if (!cfg.standardize) {
        out.fit = fit_ptl(data.sources, data.target, pc);
        return out;
    }
    const auto st = Standardizer<double>::fit(data.target.X);
    auto sources = standardized_sources(data, st);
    DataSetXd target = data.target;
    auto [x_mean, y_mean] = st.apply(target);
    out.x_scale = st.scale;
    out.target_x_mean = x_mean;
    out.target_y_mean = y_mean;
    out.fit = fit_ptl(sources, target, pc);
    return out;
}

void write_fit_json(const RealFitOutput& out, const DataConfig& cfg, const std::filesystem::path& path)
{
    const auto& f = out.fit;
    auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json sources = json::array();
    for (std::size_t k = 0; k < f.basis.kinds.size(); ++k)
        sources.push_back({{"path", cfg.sources[k].path.string()},
                           {"estimator", to_string(f.basis.kinds[k])},
                           {"penalty", f.basis.penalties[k]},
                           {"ridge_fallback", static_cast<bool>(f.basis.ridge_fallback[k])}});
    // Coefficients are on the standardized scale when standardize is set;
    // beta_original maps them back to raw covariates.
    const VectorXd beta_original = f.beta_hat.cwiseQuotient(out.x_scale);
    json doc = {{"w_hat", vec(f.w_hat)},
                {"delta_hat", vec(f.delta_hat)},
                {"beta_hat", vec(f.beta_hat)},
                {"beta_original", vec(beta_original)},
                {"intercept", out.target_y_mean - out.target_x_mean.dot(beta_original)},
                {"lambda_delta", f.lambda_delta},
                {"standardized", cfg.standardize},
                {"sources", sources},
                {"diagnostics",
                 {{"condition", f.diagnostics.condition},
                  {"orthogonality", f.diagnostics.orthogonality},
                  {"response_norm", f.diagnostics.response_norm},
                  {"profiled_norm", f.diagnostics.profiled_norm},
                  {"final_residual_norm", f.diagnostics.final_residual_norm}}}};
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << doc.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

EvaluationResult evaluate_real(const DataConfig& cfg, const LoadedData& data, int repeats, std::uint64_t seed,
                               const std::vector<Estimator>& estimators, const LassoOptions& opts, int threads)
{
    if (repeats < 1) throw InvalidConfiguration("repeats must be >= 1");
    const Eigen::Index n = data.target.n();
    if (n < 2 * cfg.folds) throw InvalidArgument("evaluate: target too small to halve and cross-validate");
    const Eigen::Index p = data.target.p();

    Standardizer<double> st{VectorXd::Ones(p)};
    if (cfg.standardize) st = Standardizer<double>::fit(data.target.X);
    const std::vector<DataSetXd> sources = cfg.standardize ? standardized_sources(data, st) : data.sources;

    // Sources enter every repeat in full, so their fit is shared.
    std::optional<SourceBasis<double>> basis;
    if (std::find(estimators.begin(), estimators.end(), Estimator::Ptl) != estimators.end())
        basis = fit_sources(sources, specs_of(cfg), cfg.folds, opts, cfg.seed, threads);

    const std::size_t E = estimators.size();
    const auto R = static_cast<std::size_t>(repeats);
    std::vector<std::optional<double>> scores(R * 2 * E);

    parallel_for(R, threads, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        const auto perm = random_permutation(static_cast<std::size_t>(n), rng);
        const std::size_t half = static_cast<std::size_t>(n) / 2;
        std::vector<Eigen::Index> first(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
        std::vector<Eigen::Index> second(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
        for (int orientation = 0; orientation < 2; ++orientation) {
            DataSetXd train = select_rows(data.target, orientation == 0 ? first : second);
            const DataSetXd test = select_rows(data.target, orientation == 0 ? second : first);
            VectorXd x_mean = VectorXd::Zero(p);
            double y_mean = 0;
            if (cfg.standardize) std::tie(x_mean, y_mean) = st.apply(train);
            const std::uint64_t cv_seed = derive_seed(seed, 2 * r + static_cast<std::size_t>(orientation) + R);

            for (std::size_t e = 0; e < E; ++e) {
                VectorXd beta;
                switch (estimators[e]) {
                case Estimator::Lasso: beta = fit_lasso_target(train, cfg.folds, opts, cv_seed).beta; break;
                case Estimator::TransLasso: beta = fit_translasso(sources, train, cfg.folds, opts, cv_seed).beta; break;
                case Estimator::Ptl: {
                    PtlConfig pc;
                    pc.folds = cfg.folds;
                    pc.seed = cv_seed;
                    pc.lasso = opts;
                    beta = fit_ptl_with_basis(*basis, train, pc).beta_hat;
                    break;
                }
                }
                const VectorXd scaled = beta.cwiseQuotient(st.scale);
                const VectorXd y_hat =
                    ((test.X.rowwise() - x_mean.transpose()) * scaled).array() + y_mean;
                scores[(r * 2 + static_cast<std::size_t>(orientation)) * E + e] = r_squared(y_hat, test.y);
            }
        }
    });

    EvaluationResult result;
    std::vector<double> sums(E, 0.0);
    std::vector<int> counts(E, 0);
    for (std::size_t r = 0; r < R; ++r)
        for (int o = 0; o < 2; ++o)
            for (std::size_t e = 0; e < E; ++e) {
                const auto& s = scores[(r * 2 + static_cast<std::size_t>(o)) * E + e];
                if (!s) {
                    ++result.skipped;
                    std::cerr << "warning: repeat " << r << " orientation " << o
                              << ": constant validation responses, R² undefined; skipped\n";
                    continue;
                }
                result.records.push_back({static_cast<int>(r), o, to_string(estimators[e]), *s});
                sums[e] += *s;
                ++counts[e];
            }
    for (std::size_t e = 0; e < E; ++e)
        result.means.emplace_back(to_string(estimators[e]),
                                  counts[e] ? sums[e] / counts[e] : std::numeric_limits<double>::quiet_NaN());
    return result;
}

void write_evaluation_csv(const EvaluationResult& result, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "repeat,orientation,estimator,r2\n";
    for (const auto& r : result.records)
        out << r.repeat << ',' << r.orientation << ',' << r.estimator << ',' << format_double(r.r2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace ptl
