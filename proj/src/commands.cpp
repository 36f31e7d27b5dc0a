/*
 * Copyright 2026 The gprate Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#include "gprate/commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gprate/csv.hpp"
#include "gprate/random.hpp"

namespace gprate {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) { return format_double(v); }

/// Training data plus prediction sites for fit / predict / hier.
struct Prepared {
    Dataset train;
    Eigen::MatrixXd test_x;      // model coordinates
    Eigen::MatrixXd test_x_out;  // coordinates as written to predictions.csv
    std::optional<Eigen::VectorXd> test_y;
    std::optional<Eigen::VectorXd> test_truth;
    std::vector<std::string> coord_names;
    CsvTransform transform;
    std::string source;
};

std::vector<std::string> default_names(int d) {
    std::vector<std::string> names;
    for (int j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
    return names;
}

Prepared prepare(const RunConfig& cfg, const std::optional<std::filesystem::path>& test) {
    Prepared p;
    if (cfg.data.scenario) {
        const ScenarioConfig sc = build_scenario(cfg);
        ReplicateData rep = make_replicate(sc, 0);
        p.train = std::move(rep.train);
        p.coord_names = default_names(sc.d);
        p.source = "scenario replicate 0 (truth " + truth_name(sc.truth) + ")";
        if (test) {
            p.test_x = read_coordinates_csv(*test, p.coord_names);
        } else {
            p.test_x = rep.test_x;
            p.test_y = rep.test_y;
            p.test_truth = rep.test_truth;
        }
        p.test_x_out = p.test_x;
        return p;
    }
    const FileSection& f = *cfg.data.file;
    CsvPreprocess pre;
    pre.center_scale_coords = f.center_scale_coords;
    pre.scale_response_by_max = f.scale_response_by_max;
    IngestedCsv in = ingest_csv(resolve_path(cfg, f.path), pre, f.omega.value_or(1.0));
    if (!f.omega && !in.omega_from_file)
        throw ConfigError("data.file.omega", "required: the noise variance is not estimated (no omega column in " +
                                                 f.path + ")");
    p.train = std::move(in.data);
    p.transform = in.transform;
    p.coord_names = in.coord_names;
    p.source = f.path;
    std::optional<std::filesystem::path> site_file = test;
    if (!site_file && !f.test_path.empty()) site_file = resolve_path(cfg, f.test_path);
    if (site_file) p.test_x_out = read_coordinates_csv(*site_file, p.coord_names);
    else p.test_x_out.resize(0, p.train.d());
    p.test_x = p.test_x_out.rows() > 0 ? p.transform.apply_coords(p.test_x_out) : p.test_x_out;
    return p;
}

ScenarioConfig method_scenario(const RunConfig& cfg, const Prepared& p) {
    ScenarioConfig sc;
    sc.d = static_cast<int>(p.train.d());
    sc.omega = p.train.omega;
    sc.model = build_model(cfg.model);
    if (sc.model.anisotropy() && sc.model.anisotropy()->dim() != sc.d)
        throw ConfigError("model.anisotropy", "dimension differs from the data dimension " + std::to_string(sc.d));
    sc.method = build_method(cfg, sc.d);
    sc.seed = cfg.seed;
    return sc;
}

std::string model_json_text(const CovarianceModel& m) {
    RunConfig tmp;
    tmp.model = model_config_of(m);
    tmp.data.scenario = ScenarioSection{};
    const json j = json::parse(serialize_run_config(tmp));
    return j.at("model").dump();
}

std::string predictions_csv(const Prepared& p, const std::vector<double>& means,
                            const std::vector<Interval>& iv) {
    std::ostringstream os;
    for (const auto& name : p.coord_names) os << name << ',';
    os << "mean,lo95,hi95\n";
    const double s = p.transform.response_scale;
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (Eigen::Index j = 0; j < p.test_x_out.cols(); ++j)
            os << fmt(p.test_x_out(static_cast<Eigen::Index>(i), j)) << ',';
        os << fmt(means[i] * s) << ',' << fmt(iv[i].lo * s) << ',' << fmt(iv[i].hi * s) << '\n';
    }
    return os.str();
}

std::string header_lines(const std::string& command, const RunConfig& cfg) {
    std::ostringstream os;
    os << "command: " << command << '\n'
       << "method: " << method_name(cfg.method.kind) << '\n'
       << "seed: " << cfg.seed << '\n';
    return os.str();
}

ReplicateData as_replicate(const Prepared& p) {
    ReplicateData rep;
    rep.train = p.train;
    rep.test_x = p.test_x;
    rep.test_y = p.test_y.value_or(Eigen::VectorXd::Constant(p.test_x.rows(), std::nan("")));
    rep.test_truth = p.test_truth.value_or(Eigen::VectorXd::Constant(p.test_x.rows(), std::nan("")));
    return rep;
}

}  // namespace

OutputFiles cmd_simulate(const RunConfig& cfg) {
    const ScenarioConfig sc = build_scenario(cfg);
    const auto rows = run_scenario(sc);
    const std::string method = method_name(sc.method.kind);

    std::ostringstream metrics, cvg, mspe, alci;
    metrics << "replicate,method,mspe,cvg,alci,rmse_truth,status\n";
    cvg << "method,replicate,cvg\n";
    mspe << "method,replicate,mspe\n";
    alci << "method,replicate,alci\n";
    for (const auto& r : rows) {
        metrics << r.replicate << ',' << method << ',' << fmt(r.mspe) << ',' << fmt(r.cvg) << ','
                << fmt(r.alci) << ',' << fmt(r.rmse_truth) << ',' << (r.ok ? "ok" : "failed") << '\n';
        if (!r.ok) continue;
        cvg << method << ',' << r.replicate << ',' << fmt(r.cvg) << '\n';
        mspe << method << ',' << r.replicate << ',' << fmt(r.mspe) << '\n';
        alci << method << ',' << r.replicate << ',' << fmt(r.alci) << '\n';
    }

    const ScenarioSummary s = summarize(rows);
    json block;
    block["replicates"] = s.rows;
    block["failed"] = s.failed;
    block["mspe"] = {{"mean", s.mspe.mean}, {"sd", s.mspe.sd}};
    block["cvg"] = {{"mean", s.cvg.mean}, {"sd", s.cvg.sd}};
    block["alci"] = {{"mean", s.alci.mean}, {"sd", s.alci.sd}};
    std::ostringstream summary;
    summary << header_lines("simulate", cfg) << "truth: " << truth_name(sc.truth) << '\n'
            << "d: " << sc.d << '\n'
            << "n_total: " << sc.n_total << '\n'
            << "n_test: " << sc.n_test << '\n'
            << "omega: " << fmt(sc.omega) << '\n';
    for (const auto& r : rows)
        if (!r.ok) summary << "failed replicate " << r.replicate << ": " << r.error << '\n';
    summary << block.dump(2) << '\n';

    return {{"metrics.csv", metrics.str()},
            {"summary.txt", summary.str()},
            {"cvg.csv", cvg.str()},
            {"mspe.csv", mspe.str()},
            {"alci.csv", alci.str()}};
}

OutputFiles cmd_fit(const RunConfig& cfg) {
    const auto kind = cfg.method.kind;
    if (kind != MethodKind::Fixed && kind != MethodKind::MLE && kind != MethodKind::Rescaled)
        throw ConfigError("method", "fit supports fixed, mle and rescaled (use the hier command for hier)");
    const Prepared p = prepare(cfg, std::nullopt);
    const ScenarioConfig sc = method_scenario(cfg, p);
    ReplicateData rep = as_replicate(p);
    rep.test_x.resize(0, p.train.d());
    rep.test_y.resize(0);
    rep.test_truth.resize(0);
    const MethodOutput out = apply_method(sc, rep, replicate_seed(cfg.seed, 0));
    const GpPosterior post(p.train, out.model);

    std::ostringstream summary;
    summary << header_lines("fit", cfg) << "data: " << p.source << '\n'
            << "n: " << p.train.n() << '\n'
            << "d: " << p.train.d() << '\n'
            << "omega: " << fmt(p.train.omega) << '\n'
            << "model: " << model_json_text(out.model) << '\n'
            << "log_likelihood: " << fmt(post.log_marginal_likelihood()) << '\n'
            << "jitter: " << fmt(post.jitter_used()) << '\n';
    return {{"summary.txt", summary.str()}, {"model.json", model_json_text(out.model) + "\n"}};
}

OutputFiles cmd_predict(const RunConfig& cfg, const std::optional<std::filesystem::path>& test) {
    const Prepared p = prepare(cfg, test);
    if (cfg.method.kind == MethodKind::RescaledTuned && !p.test_y)
        throw ConfigError("method.rescaled-tuned", "needs held-out responses; only available for scenario data");
    if (cfg.method.kind == MethodKind::Oracle && !p.test_truth)
        throw ConfigError("method.oracle", "needs the truth at the prediction sites");

    std::vector<double> means;
    std::vector<Interval> iv;
    std::string model_text = "-";
    if (p.test_x.rows() > 0) {
        const ScenarioConfig sc = method_scenario(cfg, p);
        const MethodOutput out = apply_method(sc, as_replicate(p), replicate_seed(cfg.seed, 0));
        means = out.means;
        iv = out.intervals;
        model_text = model_json_text(out.model);
    }
    std::ostringstream summary;
    summary << header_lines("predict", cfg) << "data: " << p.source << '\n'
            << "n_train: " << p.train.n() << '\n'
            << "n_predict: " << p.test_x.rows() << '\n'
            << "model: " << model_text << '\n';
    if (p.test_y && !means.empty()) {
        std::vector<double> y(p.test_y->data(), p.test_y->data() + p.test_y->size());
        const MetricsRow m = metrics(means, iv, y);
        summary << "mspe: " << fmt(m.mspe) << "\ncvg: " << fmt(m.cvg) << "\nalci: " << fmt(m.alci) << '\n';
    }
    return {{"predictions.csv", predictions_csv(p, means, iv)}, {"summary.txt", summary.str()}};
}

OutputFiles cmd_hier(const RunConfig& cfg, const std::optional<std::filesystem::path>& test) {
    if (cfg.method.kind != MethodKind::Hierarchical)
        throw ConfigError("method", "the hier command requires method.hier");
    const Prepared p = prepare(cfg, test);
    const ScenarioConfig sc = method_scenario(cfg, p);
    const HierSetup hs = hier_setup(p.train, sc.model, sc.method.prior, sc.method.hier_template, sc.method.mle);
    const CovarianceModel& tmpl = hs.tmpl;
    MhOptions mh = sc.method.mh;
    mh.seed = derive_seed(replicate_seed(cfg.seed, 0), 5);
    const HierChain chain = mh_sample(hs.data, tmpl, sc.method.prior, mh);

    std::vector<double> means;
    std::vector<Interval> iv;
    if (p.test_x.rows() > 0) {
        const Eigen::MatrixXd xs = p.test_x / hs.coord_scale;
        for (const auto& h : hier_predict(chain, hs.data, xs, sc.method.thin, 0.95)) {
            means.push_back(h.mean);
            iv.push_back(h.interval);
        }
    }
    std::ostringstream chain_csv;
    write_chain_csv(chain_csv, chain);

    std::vector<double> sorted = chain.samples;
    std::sort(sorted.begin(), sorted.end());
    const double mean_a =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    const HierCheck check =
        check_hier_conditions(HierConfig{model_config_of(tmpl).v, cfg.method.k, static_cast<int>(p.train.d())},
                              cfg.method.eta);
    std::ostringstream summary;
    summary << header_lines("hier", cfg) << "data: " << p.source << '\n'
            << "n_train: " << p.train.n() << '\n'
            << "template_mode: " << hier_template_name(cfg.method.hier_template) << '\n'
            << "template: " << model_json_text(tmpl) << '\n'
            << "coord_scale: " << fmt(hs.coord_scale) << '\n'
            << "k: " << fmt(cfg.method.k) << '\n'
            << "burn_in: " << chain.burn_in << '\n'
            << "draws: " << chain.samples.size() << '\n'
            << "proposal_sd: " << fmt(chain.proposal_sd) << '\n'
            << "acceptance_rate: " << fmt(chain.acceptance_rate) << '\n'
            << "failed_evaluations: " << chain.failed_evaluations << '\n'
            << "A_mean: " << fmt(mean_a) << '\n'
            << "A_median: " << fmt(sorted[sorted.size() / 2]) << '\n'
            << "conditions (eta = " << fmt(cfg.method.eta) << "): " << (check.ok ? "satisfied" : "violated")
            << '\n';
    for (const auto& v : check.violations)
        summary << "  violated: " << v.condition << " (" << fmt(v.lhs) << " vs " << fmt(v.rhs) << ")\n";
    if (p.test_y && !means.empty()) {
        std::vector<double> y(p.test_y->data(), p.test_y->data() + p.test_y->size());
        const MetricsRow m = metrics(means, iv, y);
        summary << "mspe: " << fmt(m.mspe) << "\ncvg: " << fmt(m.cvg) << "\nalci: " << fmt(m.alci) << '\n';
    }
    return {{"chain.csv", chain_csv.str()},
            {"predictions.csv", predictions_csv(p, means, iv)},
            {"summary.txt", summary.str()}};
}

OutputFiles cmd_rate(const RunConfig& cfg) {
    if (!cfg.rate) throw ConfigError("rate", "required for the rate command");
    if (cfg.method.kind != MethodKind::Rescaled)
        throw ConfigError("method", "the rate command requires method.rescaled");
    const ScenarioConfig sc = build_scenario(cfg);
    const RescalingSchedule base = sc.method.schedule;

    auto rate_csv = [](const RateReport& r) {
        std::ostringstream os;
        os << "n,rmse\n";
        for (std::size_t i = 0; i < r.n_grid.size(); ++i) os << r.n_grid[i] << ',' << fmt(r.rmse[i]) << '\n';
        return os.str();
    };
    auto describe = [](const std::string& name, const RescalingSchedule& s, const RateReport& r) {
        std::ostringstream os;
        os << "schedule " << name << ": exponent " << fmt(s.exponent()) << ", slope " << fmt(r.slope)
           << ", slope_se " << fmt(r.slope_se) << ", intercept " << fmt(r.intercept) << ", target "
           << fmt(r.target_slope) << (r.parametric_regime ? ", parametric regime" : "") << '\n';
        return os.str();
    };

    OutputFiles files;
    std::ostringstream summary;
    summary << header_lines("rate", cfg) << "truth: " << truth_name(sc.truth) << '\n'
            << "reps_per_n: " << cfg.rate->reps_per_n << '\n'
            << "n_test: " << sc.n_test << '\n';
    const RateReport primary = empirical_rate(sc, cfg.rate->n_grid, base, cfg.rate->reps_per_n);
    files["rate.csv"] = rate_csv(primary);
    summary << describe("optimal", base, primary);
    for (const auto& c : cfg.rate->compare) {
        RescalingSchedule s = base;
        s.exponent_override = c.exponent ? *c.exponent : c.exponent_factor * base.exponent();
        const RateReport r = empirical_rate(sc, cfg.rate->n_grid, s, cfg.rate->reps_per_n);
        files["rate_" + c.name + ".csv"] = rate_csv(r);
        summary << describe(c.name, s, r) << "  slope minus optimal slope: " << fmt(r.slope - primary.slope)
                << '\n';
    }
    files["summary.txt"] = summary.str();
    return files;
}

void write_outputs(const std::filesystem::path& dir, const OutputFiles& files) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files) write_file_atomic(dir / name, content);
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        RunConfig cfg = load_run_config(opts.config);
        if (opts.seed) cfg.seed = *opts.seed;
        if (opts.threads) {
            if (*opts.threads < 1) throw ConfigError("--threads", "must be >= 1");
            cfg.threads = *opts.threads;
        }
        const std::filesystem::path dir = opts.output ? *opts.output : std::filesystem::path(cfg.output);
        if (opts.test && !std::filesystem::exists(*opts.test))
            throw ConfigError("--test", "file not found: " + opts.test->string());

        OutputFiles files;
        if (command == "simulate") files = cmd_simulate(cfg);
        else if (command == "fit") files = cmd_fit(cfg);
        else if (command == "predict") files = cmd_predict(cfg, opts.test);
        else if (command == "hier") files = cmd_hier(cfg, opts.test);
        else if (command == "rate") files = cmd_rate(cfg);
        else throw ConfigError("<command>", "unknown command '" + command + "'");
        write_outputs(dir, files);
        for (const auto& [name, content] : files) out << (dir / name).string() << '\n';
        return kExitOk;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "file error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace gprate
