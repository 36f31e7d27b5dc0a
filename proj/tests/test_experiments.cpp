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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "gprate/experiments.hpp"

using namespace gprate;

namespace {

double corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

bool same_rows(const std::vector<MetricsRow>& a, const std::vector<MetricsRow>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].replicate != b[i].replicate || a[i].mspe != b[i].mspe || a[i].cvg != b[i].cvg ||
            a[i].alci != b[i].alci)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("Brownian truth moments") {
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(gen_brownian_truth(grid, 100.0, 3) == gen_brownian_truth(grid, 100.0, 3));
    CHECK(gen_brownian_truth(grid, 100.0, 3)[0] == 0.0);
    std::vector<double> inc1, inc2, end;
    for (int s = 0; s < 2000; ++s) {
        const auto w = gen_brownian_truth(grid, 100.0, static_cast<std::uint64_t>(s));
        inc1.push_back(w[2] - w[0]);
        inc2.push_back(w[4] - w[2]);
        end.push_back(w[4]);
    }
    CHECK(std::abs(corr(inc1, inc2)) < 0.05);
    double v = 0.0;
    for (double e : end) v += e * e;
    v /= 2000.0;
    CHECK(std::abs(v / 1e4 - 1.0) < 0.1);
    const std::vector<double> bad{0.5, 0.2};
    CHECK_THROWS_AS(gen_brownian_truth(bad, 1.0, 1), DomainError);
    const std::vector<double> out{0.2, 1.5};
    CHECK_THROWS_AS(gen_brownian_truth(out, 1.0, 1), DomainError);
    const std::vector<double> g2{0.0, 1.0}, v2{0.0, 2.0};
    CHECK(interpolate_linear(g2, v2, 0.25) == doctest::Approx(0.5));
}

TEST_CASE("GP truth moments") {
    const CovarianceModel m(MaternParams{2.5, 0.5, 3.0});
    Eigen::MatrixXd pts(3, 1);
    pts << 0.3, 0.31, 0.9;
    CHECK(gen_gp_truth(pts, m, 4) == gen_gp_truth(pts, m, 4));
    std::vector<double> a, b;
    for (int s = 0; s < 2000; ++s) {
        const Eigen::VectorXd w = gen_gp_truth(pts, m, static_cast<std::uint64_t>(s));
        a.push_back(w(0));
        b.push_back(w(1));
    }
    double v = 0.0;
    for (double x : a) v += x * x;
    CHECK(std::abs(v / 2000.0 / 3.0 - 1.0) < 0.1);
    CHECK(corr(a, b) > 0.9);
}

TEST_CASE("metrics examples") {
    const std::vector<double> y{1.0, -2.0, 0.5};
    const std::vector<Interval> wide(3, Interval{-1e300, 1e300});
    const MetricsRow perfect = metrics(y, wide, y);
    CHECK(perfect.mspe == 0.0);
    CHECK(perfect.cvg == 1.0);
    const std::vector<double> zeros(3, 0.0);
    const std::vector<Interval> fixed(3, Interval{-1.959964, 1.959964});
    const MetricsRow r = metrics(zeros, fixed, y);
    CHECK(r.alci == doctest::Approx(3.919928).epsilon(1e-12));
    CHECK(r.mspe == doctest::Approx((1.0 + 4.0 + 0.25) / 3.0));
    CHECK(r.cvg == doctest::Approx(2.0 / 3.0));
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS(metrics(two, fixed, y));
}

TEST_CASE("zero truth gives small MSPE") {
    ScenarioConfig cfg;
    cfg.n_total = 60;
    cfg.n_test = 20;
    cfg.truth = ZeroTruth{};
    cfg.omega = 0.01;
    cfg.replicates = 3;
    cfg.seed = 1;
    cfg.model = CovarianceModel(MaternParams{1.5, 0.3, 1.0});
    cfg.method.kind = MethodKind::MLE;
    for (const auto& row : run_scenario(cfg)) {
        CHECK(row.ok);
        CHECK(row.mspe <= 2.0 * cfg.omega);
    }
}

TEST_CASE("oracle method coverage, determinism and thread independence") {
    ScenarioConfig cfg;
    cfg.n_total = 200;
    cfg.n_test = 100;
    cfg.truth = BrownianTruth{};
    cfg.replicates = 30;
    cfg.seed = 12;
    cfg.method.kind = MethodKind::Oracle;
    const auto rows = run_scenario(cfg);
    REQUIRE(rows.size() == 30);
    const ScenarioSummary s = summarize(rows);
    // 3000 Bernoulli(0.95) trials: sd 0.004
    CHECK(std::abs(s.cvg.mean - 0.95) < 0.013);
    CHECK(same_rows(rows, run_scenario(cfg)));
    ScenarioConfig par = cfg;
    par.threads = 3;
    CHECK(same_rows(rows, run_scenario(par)));
    ScenarioConfig other = cfg;
    other.seed = 13;
    CHECK_FALSE(same_rows(rows, run_scenario(other)));
}

TEST_CASE("correctly specified model covers at the nominal level") {
    ScenarioConfig cfg;
    cfg.n_total = 120;
    cfg.n_test = 60;
    const CovarianceModel m(MaternParams{1.5, 0.2, 1.0});
    cfg.truth = GpTruth{m};
    cfg.model = m;
    cfg.omega = 0.1;
    cfg.replicates = 20;
    cfg.seed = 5;
    cfg.method.kind = MethodKind::Fixed;
    const ScenarioSummary s = summarize(run_scenario(cfg));
    // binomial 99% band for 1200 trials
    CHECK(std::abs(s.cvg.mean - 0.95) < 2.576 * std::sqrt(0.95 * 0.05 / 1200.0));
}

TEST_CASE("Brownian scenario shape runs to completion") {
    ScenarioConfig cfg;
    cfg.model = CovarianceModel(MaternParams{2.0, 0.2, 100.0});
    cfg.method.kind = MethodKind::Fixed;
    cfg.seed = 3;
    const auto rows = run_scenario(cfg);
    CHECK(rows.size() == 30);
    for (const auto& r : rows) {
        CHECK(r.ok);
        CHECK(std::isfinite(r.mspe));
        CHECK(r.cvg >= 0.0);
        CHECK(r.cvg <= 1.0);
        CHECK(r.alci > 0.0);
    }
}

TEST_CASE("scenario validation") {
    ScenarioConfig cfg;
    cfg.n_test = 300;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.n_test = 100;
    cfg.d = 2;
    CHECK_THROWS_AS(cfg.validate(), DomainError);  // Brownian truth is 1-d
    CHECK(parse_method("rescaled-tuned") == MethodKind::RescaledTuned);
    CHECK_THROWS_AS(parse_method("bogus"), DomainError);
}

TEST_CASE("tune_multiplier") {
    auto cov = [](double m) { return 1.0 - std::exp(-m); };
    CHECK(tune_multiplier(cov, 0.95) == doctest::Approx(std::log(20.0)).epsilon(1e-3));
    // flat coverage: stays at 1
    CHECK(tune_multiplier([](double) { return 0.95; }, 0.95) == 1.0);
}

TEST_CASE("fit_log_log") {
    const std::vector<double> x{10.0, 20.0, 40.0, 80.0};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -0.25));
    const LogLogFit f = fit_log_log(x, y);
    CHECK(f.slope == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(f.slope_se == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("empirical_rate input checks and pairing") {
    ScenarioConfig base;
    base.n_test = 30;
    base.truth = BrownianTruth{1.0};
    base.omega = 1.0;
    base.model = CovarianceModel(MaternParams{2.0, 1.0, 1.0});
    base.seed = 4;
    const RescalingSchedule s{ScheduleFamily::Matern, 2.0, 0.5, 1};
    CHECK_THROWS_AS(empirical_rate(base, {20, 40, 80}, s, 2), DomainError);
    CHECK_THROWS_AS(empirical_rate(base, {20, 40, 40, 80}, s, 2), DomainError);
    const RateReport r = empirical_rate(base, {20, 40, 80, 160}, s, 2);
    CHECK(r.rmse.size() == 4);
    CHECK(r.target_slope == doctest::Approx(-0.25));
    CHECK(r.parametric_regime == (r.slope < r.target_slope - 0.15));
    const RateReport again = empirical_rate(base, {20, 40, 80, 160}, s, 2);
    CHECK(again.rmse == r.rmse);
}
