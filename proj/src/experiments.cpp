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

#include "gprate/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "gprate/random.hpp"

namespace gprate {

// ---------------------------------------------------------------------------
// Truths

std::vector<double> gen_brownian_truth(std::span<const double> grid, double scale, std::uint64_t seed) {
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw DomainError("gen_brownian_truth: grid must be sorted");
    if (!grid.empty() && (grid.front() < 0.0 || grid.back() > 1.0))
        throw DomainError("gen_brownian_truth: grid must lie in [0, 1]");
    if (!(scale > 0.0)) throw DomainError("gen_brownian_truth: scale must be > 0");
    Rng rng(seed);
    std::vector<double> w(grid.size());
    double prev_t = 0.0, prev_w = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double z = standard_normal(rng);
        prev_w += std::sqrt(grid[i] - prev_t) * z;
        prev_t = grid[i];
        w[i] = scale * prev_w;
    }
    return w;
}

double interpolate_linear(std::span<const double> grid, std::span<const double> values, double x) {
    if (grid.empty() || grid.size() != values.size())
        throw DomainError("interpolate_linear: grid and values must be non-empty and of equal length");
    if (x <= grid.front()) return values.front();
    if (x >= grid.back()) return values.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const auto j = static_cast<std::size_t>(it - grid.begin());
    const double t = (x - grid[j - 1]) / (grid[j] - grid[j - 1]);
    return (1.0 - t) * values[j - 1] + t * values[j];
}

Eigen::VectorXd gen_gp_truth(const Eigen::MatrixXd& points, const CovarianceModel& model,
                             std::uint64_t seed) {
    if (points.rows() > 4000) throw DomainError("gen_gp_truth: at most 4000 sites");
    const CholeskyResult c = jittered_cholesky(cov_matrix(points, model, 0.0));
    Rng rng(seed);
    Eigen::VectorXd z(points.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
    return c.lower.triangularView<Eigen::Lower>() * z;
}

std::string truth_name(const TruthSpec& t) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, BrownianTruth>) return "brownian";
            else if constexpr (std::is_same_v<T, GpTruth>) return "gp";
            else if constexpr (std::is_same_v<T, ZeroTruth>) return "zero";
            else return v.name.empty() ? std::string("user") : v.name;
        },
        t);
}

Eigen::VectorXd draw_truth(const TruthSpec& truth, const Eigen::MatrixXd& points, std::uint64_t seed) {
    const Eigen::Index n = points.rows();
    return std::visit(
        [&](const auto& t) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, BrownianTruth>) {
                if (points.cols() != 1) throw DomainError("Brownian truth requires d = 1");
                std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
                std::iota(order.begin(), order.end(), Eigen::Index{0});
                std::stable_sort(order.begin(), order.end(),
                                 [&](auto a, auto b) { return points(a, 0) < points(b, 0); });
                std::vector<double> grid(order.size());
                for (std::size_t i = 0; i < order.size(); ++i) grid[i] = points(order[i], 0);
                const auto w = gen_brownian_truth(grid, t.scale, seed);
                Eigen::VectorXd out(n);
                for (std::size_t i = 0; i < order.size(); ++i) out(order[i]) = w[i];
                return out;
            } else if constexpr (std::is_same_v<T, GpTruth>) {
                return gen_gp_truth(points, t.model, seed);
            } else if constexpr (std::is_same_v<T, ZeroTruth>) {
                return Eigen::VectorXd::Zero(n);
            } else {
                if (!t.f) throw DomainError("user truth has no function");
                Eigen::VectorXd out(n);
                for (Eigen::Index i = 0; i < n; ++i) out(i) = t.f(points.row(i).transpose());
                return out;
            }
        },
        truth);
}

// ---------------------------------------------------------------------------
// Methods

std::string method_name(MethodKind k) {
    switch (k) {
        case MethodKind::Fixed: return "fixed";
        case MethodKind::MLE: return "mle";
        case MethodKind::Rescaled: return "rescaled";
        case MethodKind::RescaledTuned: return "rescaled-tuned";
        case MethodKind::Hierarchical: return "hier";
        case MethodKind::Oracle: return "oracle";
    }
    return "unknown";
}

MethodKind parse_method(const std::string& name) {
    for (auto k : {MethodKind::Fixed, MethodKind::MLE, MethodKind::Rescaled, MethodKind::RescaledTuned,
                   MethodKind::Hierarchical, MethodKind::Oracle})
        if (method_name(k) == name) return k;
    throw DomainError("unknown method '" + name +
                      "' (expected fixed, mle, rescaled, rescaled-tuned, hier or oracle)");
}

void ScenarioConfig::validate() const {
    if (d < 1) throw DomainError("scenario: d must be >= 1");
    if (n_test < 1) throw DomainError("scenario: n_test must be >= 1");
    if (!(n_test < n_total)) throw DomainError("scenario: n_test must be < n_total");
    if (n_total - n_test < 2) throw DomainError("scenario: need at least 2 training points");
    if (replicates < 1) throw DomainError("scenario: replicates must be >= 1");
    if (!(omega > 0.0)) throw DomainError("scenario: omega must be > 0");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("scenario: level must be in (0, 1)");
    if (threads < 1) throw DomainError("scenario: threads must be >= 1");
    if (std::holds_alternative<BrownianTruth>(truth) && d != 1)
        throw DomainError("scenario: Brownian truth requires d = 1");
    if (model.anisotropy() && model.anisotropy()->dim() != d)
        throw DomainError("scenario: anisotropy matrix dimension differs from d");
    if (method.kind == MethodKind::Rescaled) method.schedule.validate();
    if (method.kind == MethodKind::Hierarchical) {
        method.prior.validate();
        if (method.prior.d != d) throw DomainError("scenario: hierarchical prior d differs from d");
    }
}

MetricsRow metrics(std::span<const double> means, std::span<const Interval> intervals,
                   std::span<const double> actual) {
    if (means.size() != actual.size() || intervals.size() != actual.size())
        throw DomainError("metrics: predictions and held-out values differ in length");
    if (actual.empty()) throw DomainError("metrics: no held-out values");
    MetricsRow row;
    double se = 0.0, width = 0.0;
    std::size_t inside = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = means[i] - actual[i];
        se += e * e;
        width += intervals[i].width();
        if (intervals[i].lo <= actual[i] && actual[i] <= intervals[i].hi) ++inside;
    }
    const auto m = static_cast<double>(actual.size());
    row.mspe = se / m;
    row.cvg = static_cast<double>(inside) / m;
    row.alci = width / m;
    return row;
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
    return derive_seed(seed, static_cast<std::uint64_t>(replicate));
}

namespace {

// Streams within one replicate.
constexpr std::uint64_t kDesignStream = 1;
constexpr std::uint64_t kTruthStream = 2;
constexpr std::uint64_t kNoiseStream = 3;
constexpr std::uint64_t kSplitStream = 4;
constexpr std::uint64_t kMethodStream = 5;

ReplicateData make_data(const ScenarioConfig& cfg, int n_total, int n_test, std::uint64_t rseed) {
    const int d = cfg.d;
    Eigen::MatrixXd x(n_total, d);
    Rng design(derive_seed(rseed, kDesignStream));
    for (int i = 0; i < n_total; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = uniform01(design);

    const Eigen::VectorXd w = draw_truth(cfg.truth, x, derive_seed(rseed, kTruthStream));
    Rng noise(derive_seed(rseed, kNoiseStream));
    const double sd = std::sqrt(cfg.omega);
    Eigen::VectorXd y(n_total);
    for (int i = 0; i < n_total; ++i) y(i) = w(i) + sd * standard_normal(noise);

    // Test sites: a uniformly random subset (partial Fisher-Yates).
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n_total));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    Rng split(derive_seed(rseed, kSplitStream));
    for (int i = 0; i < n_test; ++i) {
        const auto span = static_cast<std::uint64_t>(n_total - i);
        const auto j = i + static_cast<int>(split() % span);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::sort(idx.begin(), idx.begin() + n_test);
    std::sort(idx.begin() + n_test, idx.end());

    ReplicateData rep;
    rep.test_x.resize(n_test, d);
    rep.test_y.resize(n_test);
    rep.test_truth.resize(n_test);
    for (int i = 0; i < n_test; ++i) {
        const auto k = idx[static_cast<std::size_t>(i)];
        rep.test_x.row(i) = x.row(k);
        rep.test_y(i) = y(k);
        rep.test_truth(i) = w(k);
    }
    const int n_train = n_total - n_test;
    rep.train.x.resize(n_train, d);
    rep.train.y.resize(n_train);
    rep.train.omega = cfg.omega;
    for (int i = 0; i < n_train; ++i) {
        const auto k = idx[static_cast<std::size_t>(n_test + i)];
        rep.train.x.row(i) = x.row(k);
        rep.train.y(i) = y(k);
    }
    return rep;
}

CovarianceModel scale_lengthscale(const CovarianceModel& m, double factor) {
    return model_for_A(m, A_of_model(m) / factor);
}

CovarianceModel rescaled_model(const CovarianceModel& base, const RescalingSchedule& s, double n) {
    if (s.family == ScheduleFamily::Anisotropic) {
        if (!base.anisotropy()) throw DomainError("anisotropic schedule needs a model anisotropy matrix");
        const auto& b = *base.anisotropy();
        return CovarianceModel(base.kernel(), rescale_aniso_matrix(n, s, b, b.eigen_ratio()),
                               base.quadrature());
    }
    const double len = base.family() == Family::CH ? rescale_ch(n, s) : rescale_matern(n, s);
    return model_for_A(base, 1.0 / len);
}

std::vector<Interval> gaussian_intervals(const std::vector<Prediction>& p, double level, double omega,
                                         std::vector<double>& means) {
    std::vector<Interval> out;
    out.reserve(p.size());
    means.clear();
    for (const auto& q : p) {
        means.push_back(q.mean);
        out.push_back(credible_interval(q.mean, q.var, level, omega));
    }
    return out;
}

double coverage_of(const std::vector<Interval>& iv, const Eigen::VectorXd& y) {
    std::size_t in = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (iv[static_cast<std::size_t>(i)].lo <= y(i) && y(i) <= iv[static_cast<std::size_t>(i)].hi) ++in;
    return static_cast<double>(in) / static_cast<double>(y.size());
}

MleOptions prefit_options(const MethodSpec& m) {
    MleOptions o = m.mle;
    o.fit_lengthscale = true;
    o.fit_variance = true;
    return o;
}

}  // namespace

ReplicateData make_replicate(const ScenarioConfig& cfg, int replicate) {
    return make_data(cfg, cfg.n_total, cfg.n_test, replicate_seed(cfg.seed, replicate));
}

MethodOutput apply_method(const ScenarioConfig& cfg, const ReplicateData& rep, std::uint64_t seed) {
    const MethodSpec& m = cfg.method;
    const double n = static_cast<double>(rep.train.n());
    MethodOutput out;
    out.model = cfg.model;

    auto predict_with = [&](const CovarianceModel& model) {
        const GpPosterior post(rep.train, model);
        out.intervals = gaussian_intervals(post.predict_many(rep.test_x), cfg.level, rep.train.omega, out.means);
    };

    switch (m.kind) {
        case MethodKind::Oracle: {
            for (Eigen::Index i = 0; i < rep.test_truth.size(); ++i) {
                out.means.push_back(rep.test_truth(i));
                out.intervals.push_back(credible_interval(rep.test_truth(i), 0.0, cfg.level, rep.train.omega));
            }
            return out;
        }
        case MethodKind::Fixed:
            break;
        case MethodKind::MLE:
            out.model = mle_fit(rep.train, cfg.model, m.mle).model;
            break;
        case MethodKind::Rescaled: {
            CovarianceModel base = cfg.model;
            if (m.fit_variance) base = mle_fit(rep.train, cfg.model, prefit_options(m)).model;
            out.model = rescaled_model(base, m.schedule, n);
            break;
        }
        case MethodKind::RescaledTuned: {
            const CovarianceModel fitted = mle_fit(rep.train, cfg.model, prefit_options(m)).model;
            auto coverage = [&](double mult) {
                try {
                    const GpPosterior post(rep.train, scale_lengthscale(fitted, mult));
                    std::vector<double> means;
                    return coverage_of(gaussian_intervals(post.predict_many(rep.test_x), cfg.level,
                                                          rep.train.omega, means),
                                       rep.test_y);
                } catch (const NumericalError&) {
                    return -1.0;
                }
            };
            out.model = scale_lengthscale(fitted, tune_multiplier(coverage, cfg.level));
            break;
        }
        case MethodKind::Hierarchical: {
            const HierSetup hs = hier_setup(rep.train, cfg.model, m.prior, m.hier_template, m.mle);
            MhOptions mh = m.mh;
            mh.seed = derive_seed(seed, kMethodStream);
            const HierChain chain = mh_sample(hs.data, hs.tmpl, m.prior, mh);
            const Eigen::MatrixXd xs = rep.test_x / hs.coord_scale;
            const auto pred = hier_predict(chain, hs.data, xs, m.thin, cfg.level);
            for (const auto& p : pred) {
                out.means.push_back(p.mean);
                out.intervals.push_back(p.interval);
            }
            out.model = hs.tmpl;
            out.acceptance_rate = chain.acceptance_rate;
            return out;
        }
    }
    predict_with(out.model);
    return out;
}

namespace {

template <class F>
void parallel_for(int count, int threads, F&& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) body(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

std::vector<MetricsRow> run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<MetricsRow> rows(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, cfg.threads, [&](int r) {
        MetricsRow& row = rows[static_cast<std::size_t>(r)];
        try {
            const std::uint64_t rseed = replicate_seed(cfg.seed, r);
            const ReplicateData rep = make_data(cfg, cfg.n_total, cfg.n_test, rseed);
            const MethodOutput out = apply_method(cfg, rep, rseed);
            std::vector<double> y(rep.test_y.data(), rep.test_y.data() + rep.test_y.size());
            row = metrics(out.means, out.intervals, y);
            std::vector<double> err(out.means.size());
            for (std::size_t i = 0; i < err.size(); ++i)
                err[i] = out.means[i] - rep.test_truth(static_cast<Eigen::Index>(i));
            row.rmse_truth = empirical_norm(err);
            if (!std::isfinite(row.mspe) || !std::isfinite(row.alci))
                throw NumericalError("non-finite metrics");
        } catch (const std::exception& e) {
            row = MetricsRow{};
            row.ok = false;
            row.error = e.what();
            row.mspe = row.cvg = row.alci = row.rmse_truth = std::numeric_limits<double>::quiet_NaN();
        }
        row.replicate = r;
    });
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; });
    if (5 * failed > cfg.replicates) {
        std::ostringstream os;
        os << "scenario failed: " << failed << " of " << cfg.replicates << " replicates failed";
        for (const auto& r : rows)
            if (!r.ok) {
                os << "; first failure (replicate " << r.replicate << "): " << r.error;
                break;
            }
        throw NumericalError(os.str());
    }
    return rows;
}

ScenarioSummary summarize(const std::vector<MetricsRow>& rows) {
    ScenarioSummary s;
    s.rows = static_cast<int>(rows.size());
    std::vector<double> mspe, cvg, alci;
    for (const auto& r : rows) {
        if (!r.ok) {
            ++s.failed;
            continue;
        }
        mspe.push_back(r.mspe);
        cvg.push_back(r.cvg);
        alci.push_back(r.alci);
    }
    auto stats = [](const std::vector<double>& v) {
        MetricSummary m;
        if (v.empty()) return m;
        m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - m.mean) * (x - m.mean);
            m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        return m;
    };
    s.mspe = stats(mspe);
    s.cvg = stats(cvg);
    s.alci = stats(alci);
    return s;
}

double tune_multiplier(const std::function<double(double)>& coverage, double target, int iterations) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(1e-2), b = std::log(1e2);
    double best_t = 0.0;
    double best_f = std::numeric_limits<double>::infinity();
    auto f = [&](double t) {
        const double c = coverage(std::exp(t));
        const double v = c < 0.0 ? std::numeric_limits<double>::infinity() : std::abs(c - target);
        // Ties go to the multiplier closest to 1.
        if (v < best_f || (v == best_f && std::abs(t) < std::abs(best_t))) {
            best_f = v;
            best_t = t;
        }
        return v;
    };
    f(0.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iterations; ++i) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return std::exp(best_t);
}

// ---------------------------------------------------------------------------
// Rates

LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) throw DomainError("fit_log_log: need >= 3 paired points");
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("fit_log_log: values must be > 0");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    LogLogFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::log(y[i]) - fit.intercept - fit.slope * std::log(x[i]);
        sse += r * r;
    }
    fit.slope_se = std::sqrt(sse / (k - 2.0) / sxx);
    return fit;
}

RateReport empirical_rate(const ScenarioConfig& base, const std::vector<int>& n_grid,
                          const RescalingSchedule& schedule, int reps_per_n) {
    if (n_grid.size() < 4) throw DomainError("empirical_rate: n_grid needs at least 4 sizes");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 2) throw DomainError("empirical_rate: sample sizes must be >= 2");
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw DomainError("empirical_rate: n_grid must be strictly increasing");
    }
    if (reps_per_n < 1) throw DomainError("empirical_rate: reps_per_n must be >= 1");
    schedule.validate();

    ScenarioConfig cfg = base;
    cfg.method.kind = MethodKind::Rescaled;
    cfg.method.schedule = schedule;
    cfg.replicates = reps_per_n;

    RateReport report;
    report.n_grid = n_grid;
    report.target_slope = -schedule.eta / (2.0 * schedule.eta + base.d);
    const int cells = static_cast<int>(n_grid.size()) * reps_per_n;
    std::vector<double> rmse(static_cast<std::size_t>(cells));
    std::vector<std::string> errors(static_cast<std::size_t>(cells));
    parallel_for(cells, base.threads, [&](int c) {
        const int gi = c / reps_per_n, r = c % reps_per_n;
        const int n = n_grid[static_cast<std::size_t>(gi)];
        try {
            ScenarioConfig local = cfg;
            local.n_total = n + base.n_test;
            local.validate();
            const std::uint64_t rseed =
                replicate_seed(derive_seed(base.seed, static_cast<std::uint64_t>(n)), r);
            const ReplicateData rep = make_data(local, local.n_total, local.n_test, rseed);
            const MethodOutput out = apply_method(local, rep, rseed);
            std::vector<double> err(out.means.size());
            for (std::size_t i = 0; i < err.size(); ++i)
                err[i] = out.means[i] - rep.test_truth(static_cast<Eigen::Index>(i));
            rmse[static_cast<std::size_t>(c)] = empirical_norm(err);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(c)] = e.what();
        }
    });
    for (int c = 0; c < cells; ++c)
        if (!errors[static_cast<std::size_t>(c)].empty()) {
            std::ostringstream os;
            os << "empirical_rate: n = " << n_grid[static_cast<std::size_t>(c / reps_per_n)]
               << ", replicate " << c % reps_per_n << ": " << errors[static_cast<std::size_t>(c)];
            throw NumericalError(os.str());
        }

    std::vector<double> ns;
    for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
        double s = 0.0;
        for (int r = 0; r < reps_per_n; ++r) s += rmse[gi * static_cast<std::size_t>(reps_per_n) + r];
        report.rmse.push_back(s / reps_per_n);
        ns.push_back(n_grid[gi]);
    }
    const LogLogFit fit = fit_log_log(ns, report.rmse);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.slope_se = fit.slope_se;
    report.parametric_regime = report.slope < report.target_slope - 0.15;
    return report;
}

}  // namespace gprate
