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

#include "gprate/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace gprate {

using json = nlohmann::ordered_json;

namespace {

/// Typed access to one JSON object that remembers which keys were read so
/// that leftovers can be reported.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const { return j_.contains(k); }

    const json& raw(const std::string& k) {
        used_.insert(k);
        return j_.at(k);
    }

    double number(const std::string& k, double def) {
        if (!has(k)) return def;
        const json& v = raw(k);
        if (!v.is_number()) throw ConfigError(key(k), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError(key(k), "must be finite");
        return x;
    }
    std::optional<double> optional_number(const std::string& k) {
        if (!has(k)) return std::nullopt;
        return number(k, 0.0);
    }
    long long integer(const std::string& k, long long def) {
        if (!has(k)) return def;
        const json& v = raw(k);
        if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
        return v.get<long long>();
    }
    bool boolean(const std::string& k, bool def) {
        if (!has(k)) return def;
        const json& v = raw(k);
        if (!v.is_boolean()) throw ConfigError(key(k), "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& k, const std::string& def) {
        if (!has(k)) return def;
        const json& v = raw(k);
        if (!v.is_string()) throw ConfigError(key(k), "expected a string");
        return v.get<std::string>();
    }
    Reader object(const std::string& k) { return Reader(raw(k), key(k)); }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError(key(k), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
    if (!ok) throw ConfigError(key, msg);
}

int checked_int(Reader& r, const std::string& k, long long def, long long lo, const std::string& what) {
    const long long v = r.integer(k, def);
    require(v >= lo && v <= 100000000, r.key(k), what);
    return static_cast<int>(v);
}

ModelConfig parse_model(Reader r) {
    ModelConfig m;
    const std::string fam = r.string("family", "matern");
    try {
        m.family = parse_family(fam);
    } catch (const DomainError& e) {
        throw ConfigError(r.key("family"), e.what());
    }
    m.sigma2 = r.number("sigma2", 1.0);
    require(m.sigma2 > 0.0, r.key("sigma2"), "must be > 0");
    switch (m.family) {
        case Family::Matern:
            m.v = r.number("v", m.v);
            m.phi = r.number("phi", m.phi);
            require(m.v > 0.0, r.key("v"), "must be > 0");
            require(m.phi > 0.0, r.key("phi"), "must be > 0");
            break;
        case Family::CH:
            m.v = r.number("v", m.v);
            m.alpha = r.number("alpha", m.alpha);
            m.beta = r.number("beta", m.beta);
            require(m.v > 0.0, r.key("v"), "must be > 0");
            require(m.alpha > 0.0, r.key("alpha"), "must be > 0");
            require(m.beta > 0.0, r.key("beta"), "must be > 0");
            break;
        case Family::SqExp:
            m.c = r.number("c", m.c);
            require(m.c > 0.0, r.key("c"), "must be > 0");
            break;
    }
    if (r.has("anisotropy")) {
        const json& a = r.raw("anisotropy");
        const std::string key = r.key("anisotropy");
        require(a.is_array() && !a.empty(), key, "expected a non-empty square matrix (array of rows)");
        for (const auto& row : a) {
            require(row.is_array() && row.size() == a.size(), key, "expected a square matrix");
            std::vector<double> out;
            for (const auto& x : row) {
                require(x.is_number(), key, "entries must be numbers");
                out.push_back(x.get<double>());
            }
            m.anisotropy.push_back(std::move(out));
        }
        try {
            (void)build_model(m);
        } catch (const DomainError& e) {
            throw ConfigError(key, e.what());
        }
    }
    r.finish();
    return m;
}

ScenarioSection parse_scenario(Reader r) {
    ScenarioSection s;
    s.d = checked_int(r, "d", s.d, 1, "must be >= 1");
    s.n_total = checked_int(r, "n_total", s.n_total, 3, "must be >= 3");
    s.n_test = checked_int(r, "n_test", s.n_test, 1, "must be >= 1");
    require(s.n_test < s.n_total - 1, r.key("n_test"), "must leave at least 2 training points (n_test < n_total - 1)");
    s.replicates = checked_int(r, "replicates", s.replicates, 1, "must be >= 1");
    s.omega = r.number("omega", s.omega);
    require(s.omega > 0.0, r.key("omega"), "must be > 0");
    s.level = r.number("level", s.level);
    require(s.level > 0.0 && s.level < 1.0, r.key("level"), "must lie in (0, 1)");
    if (r.has("truth")) {
        Reader t = r.object("truth");
        s.truth.type = t.string("type", "brownian");
        if (s.truth.type == "brownian") {
            s.truth.scale = t.number("scale", 100.0);
            require(s.truth.scale > 0.0, t.key("scale"), "must be > 0");
            require(s.d == 1, t.key("type"), "brownian truth requires d = 1");
        } else if (s.truth.type == "gp") {
            require(t.has("model"), t.key("model"), "required for gp truth");
            s.truth.model = parse_model(t.object("model"));
            require(s.truth.model->anisotropy.empty() ||
                        static_cast<int>(s.truth.model->anisotropy.size()) == s.d,
                    t.key("model.anisotropy"), "dimension differs from d");
            require(s.n_total <= 4000, r.key("n_total"), "gp truth supports at most 4000 sites");
        } else if (s.truth.type != "zero") {
            throw ConfigError(t.key("type"), "expected brownian, gp or zero");
        }
        t.finish();
    } else {
        require(s.d == 1, r.key("truth"), "the default brownian truth requires d = 1");
    }
    r.finish();
    return s;
}

FileSection parse_file(Reader r, const std::filesystem::path& base, bool check_files) {
    FileSection f;
    require(r.has("path"), r.key("path"), "required");
    f.path = r.string("path", "");
    require(!f.path.empty(), r.key("path"), "must not be empty");
    f.test_path = r.string("test_path", "");
    f.omega = r.optional_number("omega");
    if (f.omega) require(*f.omega > 0.0, r.key("omega"), "must be > 0");
    f.center_scale_coords = r.optional_number("center_scale_coords");
    if (f.center_scale_coords)
        require(*f.center_scale_coords > 0.0, r.key("center_scale_coords"), "must be > 0");
    f.scale_response_by_max = r.boolean("scale_response_by_max", false);
    if (check_files) {
        auto exists = [&](const std::string& p) {
            const std::filesystem::path q(p);
            return std::filesystem::exists(q.is_absolute() ? q : base / q);
        };
        require(exists(f.path), r.key("path"), "file not found: " + f.path);
        if (!f.test_path.empty())
            require(exists(f.test_path), r.key("test_path"), "file not found: " + f.test_path);
    }
    r.finish();
    return f;
}

const std::vector<std::pair<std::string, MethodKind>>& method_keys() {
    static const std::vector<std::pair<std::string, MethodKind>> keys = {
        {"fixed", MethodKind::Fixed},
        {"mle", MethodKind::MLE},
        {"rescaled", MethodKind::Rescaled},
        {"rescaled-tuned", MethodKind::RescaledTuned},
        {"hier", MethodKind::Hierarchical},
        {"oracle", MethodKind::Oracle},
    };
    return keys;
}

MethodSection parse_method(const json& j, const std::string& path, const ModelConfig& model) {
    require(j.is_object(), path, "expected an object with exactly one method key");
    require(j.size() == 1, path,
            "expected exactly one of fixed, mle, rescaled, rescaled-tuned, hier, oracle");
    const std::string name = j.begin().key();
    MethodSection m;
    bool found = false;
    for (const auto& [k, kind] : method_keys())
        if (k == name) {
            m.kind = kind;
            found = true;
        }
    if (!found) throw ConfigError(path + "." + name, "unknown method");
    Reader r(j.begin().value(), path + "." + name);

    auto mle_keys = [&] {
        m.budget = checked_int(r, "budget", m.budget, 0, "must be >= 0");
        m.restarts = checked_int(r, "restarts", m.restarts, 0, "must be >= 0");
        m.fit_alpha = r.boolean("fit_alpha", m.fit_alpha);
    };
    switch (m.kind) {
        case MethodKind::Fixed:
        case MethodKind::Oracle:
            break;
        case MethodKind::MLE:
        case MethodKind::RescaledTuned:
            mle_keys();
            break;
        case MethodKind::Rescaled: {
            mle_keys();
            if (r.has("v")) require(r.number("v", 0.0) == model.v, r.key("v"), "differs from model.v");
            m.eta = r.number("eta", m.eta);
            require(m.eta > 0.0, r.key("eta"), "must be > 0");
            m.multiplier = r.number("multiplier", m.multiplier);
            require(m.multiplier > 0.0, r.key("multiplier"), "must be > 0");
            m.exponent = r.optional_number("exponent");
            m.fit_variance = r.boolean("fit_variance", m.fit_variance);
            break;
        }
        case MethodKind::Hierarchical:
            mle_keys();
            m.k = r.number("k", m.k);
            require(m.k >= 1.0, r.key("k"), "must be >= 1");
            m.burn_in = checked_int(r, "burn_in", m.burn_in, 0, "must be >= 0");
            m.draws = checked_int(r, "draws", m.draws, 1, "must be >= 1");
            m.proposal_sd = r.number("proposal_sd", m.proposal_sd);
            require(m.proposal_sd > 0.0, r.key("proposal_sd"), "must be > 0");
            m.thin = checked_int(r, "thin", m.thin, 1, "must be >= 1");
            require(m.thin < m.draws, r.key("thin"), "must be smaller than draws");
            m.eta = r.number("eta", m.eta);
            require(m.eta > 0.0, r.key("eta"), "must be > 0");
            if (r.has("template")) {
                const std::string t = r.string("template", "");
                try {
                    m.hier_template = parse_hier_template(t);
                } catch (const DomainError& e) {
                    throw ConfigError(r.key("template"), e.what());
                }
            }
            break;
    }
    r.finish();
    return m;
}

RateSection parse_rate(Reader r) {
    RateSection s;
    require(r.has("n_grid"), r.key("n_grid"), "required");
    const json& g = r.raw("n_grid");
    require(g.is_array() && g.size() >= 4, r.key("n_grid"), "expected at least 4 sample sizes");
    for (const auto& x : g) {
        require(x.is_number_integer() && x.get<long long>() >= 2 && x.get<long long>() <= 100000,
                r.key("n_grid"), "sample sizes must be integers in [2, 100000]");
        const int n = x.get<int>();
        require(s.n_grid.empty() || n > s.n_grid.back(), r.key("n_grid"), "must be strictly increasing");
        s.n_grid.push_back(n);
    }
    s.reps_per_n = checked_int(r, "reps_per_n", s.reps_per_n, 1, "must be >= 1");
    if (r.has("compare")) {
        const json& c = r.raw("compare");
        require(c.is_array(), r.key("compare"), "expected an array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < c.size(); ++i) {
            Reader e(c[i], r.key("compare") + "[" + std::to_string(i) + "]");
            RateSchedule sch;
            sch.name = e.string("name", "");
            const bool ok_name =
                !sch.name.empty() && std::all_of(sch.name.begin(), sch.name.end(), [](char ch) {
                    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_';
                });
            require(ok_name, e.key("name"), "required; letters, digits, '-' and '_' only");
            require(names.insert(sch.name).second, e.key("name"), "duplicate schedule name");
            sch.exponent = e.optional_number("exponent");
            if (sch.exponent) require(*sch.exponent > 0.0, e.key("exponent"), "must be > 0");
            sch.exponent_factor = e.number("exponent_factor", 1.0);
            require(sch.exponent_factor > 0.0, e.key("exponent_factor"), "must be > 0");
            e.finish();
            s.compare.push_back(sch);
        }
    }
    r.finish();
    return s;
}

json model_json(const ModelConfig& m) {
    json j;
    j["family"] = family_name(m.family);
    switch (m.family) {
        case Family::Matern:
            j["v"] = m.v;
            j["phi"] = m.phi;
            break;
        case Family::CH:
            j["v"] = m.v;
            j["alpha"] = m.alpha;
            j["beta"] = m.beta;
            break;
        case Family::SqExp:
            j["c"] = m.c;
            break;
    }
    j["sigma2"] = m.sigma2;
    if (!m.anisotropy.empty()) j["anisotropy"] = m.anisotropy;
    return j;
}

}  // namespace

CovarianceModel build_model(const ModelConfig& m) {
    KernelParams k;
    switch (m.family) {
        case Family::Matern: k = MaternParams{m.v, m.phi, m.sigma2}; break;
        case Family::CH: k = ChParams{m.v, m.alpha, m.beta, m.sigma2}; break;
        case Family::SqExp: k = SqExpParams{m.c, m.sigma2}; break;
    }
    std::optional<AnisotropyMatrix> aniso;
    if (!m.anisotropy.empty()) {
        const auto d = static_cast<Eigen::Index>(m.anisotropy.size());
        Eigen::MatrixXd b(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                b(i, j) = m.anisotropy[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        aniso.emplace(b);
    }
    return CovarianceModel(k, aniso);
}

ModelConfig model_config_of(const CovarianceModel& model) {
    ModelConfig m;
    m.family = model.family();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MaternParams>) {
                m.v = p.v;
                m.phi = p.phi;
            } else if constexpr (std::is_same_v<T, ChParams>) {
                m.v = p.v;
                m.alpha = p.alpha;
                m.beta = p.beta;
            } else {
                m.c = p.c;
            }
            m.sigma2 = p.sigma2;
        },
        model.kernel());
    if (model.anisotropy()) {
        const auto& b = model.anisotropy()->matrix();
        for (Eigen::Index i = 0; i < b.rows(); ++i) {
            std::vector<double> row;
            for (Eigen::Index j = 0; j < b.cols(); ++j) row.push_back(b(i, j));
            m.anisotropy.push_back(std::move(row));
        }
    }
    return m;
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir, bool check_files) {
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    Reader r(root, "");
    RunConfig cfg;
    cfg.base_dir = base_dir;
    if (r.has("seed")) {
        const json& s = r.raw("seed");
        require(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0), "seed",
                "expected a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    cfg.threads = checked_int(r, "threads", cfg.threads, 1, "must be >= 1");

    require(r.has("model"), "model", "required");
    cfg.model = parse_model(r.object("model"));

    require(r.has("data"), "data", "required");
    {
        Reader d = r.object("data");
        const bool has_s = d.has("scenario"), has_f = d.has("file");
        require(has_s != has_f, "data", "expected exactly one of 'scenario' or 'file'");
        if (has_s) cfg.data.scenario = parse_scenario(d.object("scenario"));
        else cfg.data.file = parse_file(d.object("file"), base_dir, check_files);
        d.finish();
    }
    if (cfg.data.scenario && !cfg.model.anisotropy.empty())
        require(static_cast<int>(cfg.model.anisotropy.size()) == cfg.data.scenario->d, "model.anisotropy",
                "dimension differs from data.scenario.d");

    require(r.has("method"), "method", "required");
    cfg.method = parse_method(r.raw("method"), "method", cfg.model);
    if (cfg.method.kind == MethodKind::Oracle)
        require(cfg.data.scenario.has_value(), "method.oracle", "requires data.scenario (the truth must be known)");
    if (cfg.method.kind == MethodKind::Rescaled) {
        try {
            (void)build_schedule(cfg);
        } catch (const DomainError& e) {
            throw ConfigError("method.rescaled", e.what());
        }
    }

    if (r.has("rate")) {
        cfg.rate = parse_rate(r.object("rate"));
        require(cfg.data.scenario.has_value(), "rate", "requires data.scenario");
    }
    if (r.has("output")) {
        Reader o = r.object("output");
        cfg.output = o.string("directory", cfg.output);
        require(!cfg.output.empty(), "output.directory", "must not be empty");
        o.finish();
    }
    r.finish();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path.parent_path(), true);
}

std::string serialize_run_config(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    json data;
    if (cfg.data.scenario) {
        const auto& s = *cfg.data.scenario;
        json t;
        t["type"] = s.truth.type;
        if (s.truth.type == "brownian") t["scale"] = s.truth.scale;
        if (s.truth.type == "gp" && s.truth.model) t["model"] = model_json(*s.truth.model);
        data["scenario"] = {{"d", s.d},           {"n_total", s.n_total}, {"n_test", s.n_test},
                            {"replicates", s.replicates}, {"omega", s.omega},     {"level", s.level},
                            {"truth", t}};
    } else if (cfg.data.file) {
        const auto& f = *cfg.data.file;
        json fj;
        fj["path"] = f.path;
        if (!f.test_path.empty()) fj["test_path"] = f.test_path;
        if (f.omega) fj["omega"] = *f.omega;
        if (f.center_scale_coords) fj["center_scale_coords"] = *f.center_scale_coords;
        fj["scale_response_by_max"] = f.scale_response_by_max;
        data["file"] = fj;
    }
    j["data"] = data;
    j["model"] = model_json(cfg.model);

    const auto& m = cfg.method;
    json body = json::object();
    auto mle_keys = [&] {
        body["budget"] = m.budget;
        body["restarts"] = m.restarts;
        body["fit_alpha"] = m.fit_alpha;
    };
    switch (m.kind) {
        case MethodKind::Fixed:
        case MethodKind::Oracle:
            break;
        case MethodKind::MLE:
        case MethodKind::RescaledTuned:
            mle_keys();
            break;
        case MethodKind::Rescaled:
            mle_keys();
            body["eta"] = m.eta;
            body["multiplier"] = m.multiplier;
            if (m.exponent) body["exponent"] = *m.exponent;
            body["fit_variance"] = m.fit_variance;
            break;
        case MethodKind::Hierarchical:
            mle_keys();
            body["k"] = m.k;
            body["burn_in"] = m.burn_in;
            body["draws"] = m.draws;
            body["proposal_sd"] = m.proposal_sd;
            body["thin"] = m.thin;
            body["eta"] = m.eta;
            body["template"] = hier_template_name(m.hier_template);
            break;
    }
    j["method"] = {{method_name(m.kind), body}};

    if (cfg.rate) {
        json rj;
        rj["n_grid"] = cfg.rate->n_grid;
        rj["reps_per_n"] = cfg.rate->reps_per_n;
        json cmp = json::array();
        for (const auto& s : cfg.rate->compare) {
            json e;
            e["name"] = s.name;
            if (s.exponent) e["exponent"] = *s.exponent;
            e["exponent_factor"] = s.exponent_factor;
            cmp.push_back(e);
        }
        rj["compare"] = cmp;
        j["rate"] = rj;
    }
    j["output"] = {{"directory", cfg.output}};
    return j.dump(2) + "\n";
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return serialize_run_config(a) == serialize_run_config(b);
}

RescalingSchedule build_schedule(const RunConfig& cfg) {
    RescalingSchedule s;
    switch (cfg.model.family) {
        case Family::CH: s.family = ScheduleFamily::CH; break;
        default: s.family = ScheduleFamily::Matern; break;
    }
    if (!cfg.model.anisotropy.empty()) s.family = ScheduleFamily::Anisotropic;
    // The squared exponential has no smoothness index; the exponent degenerates
    // to 1/(2 eta + d), the rate-optimal lengthscale schedule for that prior.
    s.v = cfg.model.family == Family::SqExp ? std::numeric_limits<double>::infinity() : cfg.model.v;
    s.eta = cfg.method.eta;
    s.d = cfg.data.scenario ? cfg.data.scenario->d
                            : (cfg.model.anisotropy.empty() ? 1 : static_cast<int>(cfg.model.anisotropy.size()));
    s.alpha = cfg.model.alpha;
    s.multiplier = cfg.method.multiplier;
    s.exponent_override = cfg.method.exponent;
    if (cfg.model.family == Family::SqExp && !s.exponent_override)
        s.exponent_override = 1.0 / (2.0 * s.eta + s.d);
    s.validate();
    return s;
}

MethodSpec build_method(const RunConfig& cfg, int d) {
    const auto& m = cfg.method;
    MethodSpec spec;
    spec.kind = m.kind;
    spec.mle.budget = m.budget;
    spec.mle.restarts = m.restarts;
    spec.mle.fit_alpha = m.fit_alpha;
    spec.fit_variance = m.fit_variance;
    spec.hier_template = m.hier_template;
    if (m.kind == MethodKind::Rescaled) {
        RunConfig local = cfg;
        if (!local.data.scenario) {
            local.data.scenario = ScenarioSection{};
            local.data.scenario->d = d;
        }
        spec.schedule = build_schedule(local);
    }
    spec.prior = HierPrior{m.k, d};
    spec.mh.burn_in = m.burn_in;
    spec.mh.draws = m.draws;
    spec.mh.proposal_sd = m.proposal_sd;
    spec.thin = m.thin;
    return spec;
}

ScenarioConfig build_scenario(const RunConfig& cfg) {
    if (!cfg.data.scenario) throw ConfigError("data.scenario", "required for this command");
    const auto& s = *cfg.data.scenario;
    ScenarioConfig sc;
    sc.d = s.d;
    sc.n_total = s.n_total;
    sc.n_test = s.n_test;
    sc.replicates = s.replicates;
    sc.omega = s.omega;
    sc.level = s.level;
    sc.seed = cfg.seed;
    sc.threads = cfg.threads;
    if (s.truth.type == "brownian") sc.truth = BrownianTruth{s.truth.scale};
    else if (s.truth.type == "gp") sc.truth = GpTruth{build_model(*s.truth.model)};
    else sc.truth = ZeroTruth{};
    sc.model = build_model(cfg.model);

    sc.method = build_method(cfg, s.d);
    return sc;
}

std::filesystem::path resolve_path(const RunConfig& cfg, const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : cfg.base_dir / q;
}

}  // namespace gprate
