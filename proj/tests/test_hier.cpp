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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "gprate/experiments.hpp"
#include "gprate/hier.hpp"

using namespace gprate;

namespace {

Dataset line_data(int n, double omega, std::uint64_t seed, const CovarianceModel& truth) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    Dataset d;
    d.x = Eigen::MatrixXd(n, 1);
    for (int i = 0; i < n; ++i) d.x(i, 0) = u(rng);
    d.y = gen_gp_truth(d.x, truth, seed + 1);
    for (int i = 0; i < n; ++i) d.y(i) += std::sqrt(omega) * z(rng);
    d.omega = omega;
    return d;
}

}  // namespace

TEST_CASE("log_prior_A identities") {
    for (double a : {0.1, 1.0, 3.7}) CHECK(log_prior_A(a, {1.0, 1}) == doctest::Approx(-a).epsilon(1e-14));
    CHECK(log_prior_A(1.0, {3.0, 1}) == doctest::Approx(std::log(3.0) - 1.0).epsilon(1e-14));
    for (const HierPrior p : {HierPrior{1.0, 1}, HierPrior{3.0, 1}, HierPrior{7.0, 2}}) {
        const double mass =
            integrate_to_infinity([&](double a) { return a > 0.0 ? std::exp(log_prior_A(a, p)) : 0.0; }, 0.0).value;
        CHECK(std::abs(mass - 1.0) < 1e-6);
    }
    CHECK_THROWS_AS(log_prior_A(0.0, {1.0, 1}), DomainError);
    CHECK_THROWS_AS(log_prior_A(1.0, {0.5, 1}), DomainError);
}

TEST_CASE("log_prior_A lies in the polynomial-exponential envelope") {
    const HierPrior p{3.0, 1};
    const double kd = p.power();
    auto envelope = [&](double a) { return (kd - 1.0) * std::log(a) - std::pow(a, kd); };
    const double c = log_prior_A(1.0, p) - envelope(1.0);
    for (double a = 1.0; a <= 50.0; a += 0.5) CHECK(std::abs(log_prior_A(a, p) - envelope(a) - c) < 1e-9);
}

TEST_CASE("model_for_A and A_of_model") {
    const CovarianceModel m(MaternParams{2.5, 0.3, 2.0});
    CHECK(std::get<MaternParams>(model_for_A(m, 4.0).kernel()).phi == 0.25);
    CHECK(A_of_model(m) == doctest::Approx(1.0 / 0.3));
    const CovarianceModel c(ChParams{1.5, 2.0, 0.5, 1.0});
    CHECK(std::get<ChParams>(model_for_A(c, 2.0).kernel()).beta == 0.5);
    const CovarianceModel s(SqExpParams{0.04, 1.0});
    CHECK(std::get<SqExpParams>(model_for_A(s, 2.0).kernel()).c == 0.25);
    CHECK(A_of_model(s) == doctest::Approx(5.0));
    CHECK(parse_hier_template("mle-scaled") == HierTemplate::MleScaled);
    CHECK(hier_template_name(HierTemplate::Map) == "map");
    CHECK_THROWS_AS(parse_hier_template("other"), DomainError);
}

TEST_CASE("chain length, burn-in and determinism") {
    const Dataset d = line_data(20, 0.1, 3, CovarianceModel(MaternParams{1.5, 0.3, 1.0}));
    const CovarianceModel tmpl(MaternParams{1.5, 1.0, 1.0});
    MhOptions o;
    o.burn_in = 37;
    o.draws = 211;
    o.seed = 5;
    const HierChain a = mh_sample(d, tmpl, {1.0, 1}, o);
    const HierChain b = mh_sample(d, tmpl, {1.0, 1}, o);
    CHECK(a.samples.size() == 211);
    CHECK(a.log_posteriors.size() == 211);
    CHECK(a.burn_in == 37);
    CHECK(a.samples == b.samples);
    CHECK(a.acceptance_rate > 0.0);
    CHECK(a.acceptance_rate < 1.0);
    int acc = 0;
    for (char c : a.accepted) acc += c;
    CHECK(a.acceptance_rate == doctest::Approx(acc / 211.0));
    std::ostringstream os;
    write_chain_csv(os, a);
    const std::string s = os.str();
    CHECK(s.rfind("iteration,A,log_posterior,accepted\n37,", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 212);
    o.seed = 6;
    CHECK(mh_sample(d, tmpl, {1.0, 1}, o).samples != a.samples);
}

TEST_CASE("degenerate mixtures") {
    Dataset d;
    d.x = Eigen::MatrixXd(4, 1);
    d.x << 0.1, 0.3, 0.6, 0.8;
    d.y = Eigen::Vector4d(0.5, -1.0, 0.2, 1.3);
    d.omega = 0.2;
    const CovarianceModel tmpl(MaternParams{1.5, 1.0, 1.0});
    Eigen::MatrixXd xs(2, 1);
    xs << 0.45, 0.95;

    HierChain same;
    same.tmpl = tmpl;
    same.samples.assign(40, 3.0);
    const GpPosterior post(d, model_for_A(tmpl, 3.0));
    const auto hp = hier_predict(same, d, xs, 10, 0.95);
    for (int j = 0; j < 2; ++j) {
        const Prediction p = post.predict(xs.row(j).transpose());
        const Interval iv = credible_interval(p.mean, p.var, 0.95, d.omega);
        CHECK(hp[j].mean == doctest::Approx(p.mean).epsilon(1e-12));
        CHECK(hp[j].var == doctest::Approx(p.var).epsilon(1e-12));
        CHECK(std::abs(hp[j].interval.lo - iv.lo) < 2e-6);
        CHECK(std::abs(hp[j].interval.hi - iv.hi) < 2e-6);
    }

    // zero responses: every component has mean 0, so the variance is the average
    Dataset zero = d;
    zero.y.setZero();
    HierChain two;
    two.tmpl = tmpl;
    two.samples = {1.0, 8.0};
    const auto z2 = hier_predict(two, zero, xs, 1, 0.95);
    const double v1 = GpPosterior(zero, model_for_A(tmpl, 1.0)).predict(xs.row(0).transpose()).var;
    const double v8 = GpPosterior(zero, model_for_A(tmpl, 8.0)).predict(xs.row(0).transpose()).var;
    CHECK(z2[0].mean == doctest::Approx(0.0));
    CHECK(z2[0].var == doctest::Approx(0.5 * (v1 + v8)).epsilon(1e-12));

    CHECK_THROWS_AS(hier_predict(two, zero, xs, 2, 0.95), DomainError);
    CHECK_THROWS_AS(hier_predict(HierChain{}, zero, xs, 1, 0.95), DomainError);
}

TEST_CASE("mixture quantile against sampling oracle") {
    const std::vector<double> means{-1.0, 0.5, 2.0, 2.2}, sds{0.3, 1.0, 0.5, 2.0};
    std::mt19937_64 rng(12);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> pick(0, 3);
    std::vector<double> draws(100000);
    for (auto& x : draws) {
        const int i = pick(rng);
        x = means[i] + sds[i] * z(rng);
    }
    std::sort(draws.begin(), draws.end());
    for (double p : {0.025, 0.5, 0.975}) {
        const double q = mixture_quantile(means, sds, p);
        // fraction of sampled draws below the computed quantile
        const double emp = static_cast<double>(std::lower_bound(draws.begin(), draws.end(), q) - draws.begin()) /
                           static_cast<double>(draws.size());
        CAPTURE(p);
        CHECK(std::abs(emp - p) < 0.01);
        double cdf = 0.0;
        for (int i = 0; i < 4; ++i) cdf += normal_cdf((q - means[i]) / sds[i]) / 4.0;
        CHECK(std::abs(cdf - p) < 1e-6);
    }
}

TEST_CASE("prior recovery under a flat likelihood") {
    Dataset d;
    d.x = Eigen::MatrixXd(2, 1);
    d.x << 0.2, 0.7;
    d.y = Eigen::Vector2d(0.3, -0.1);
    d.omega = 1e6;
    MhOptions o;
    o.burn_in = 500;
    o.draws = 100000;
    o.proposal_sd = 1.0;
    o.seed = 41;
    const HierPrior prior{3.0, 1};
    const HierChain c = mh_sample(d, CovarianceModel(MaternParams{1.5, 1.0, 1.0}), prior, o);
    double m = 0.0;
    for (double a : c.samples) m += std::pow(a, prior.power());
    m /= static_cast<double>(c.samples.size());
    CHECK(std::abs(m - 1.0) < 0.1);
}

TEST_CASE("stationary distribution matches a grid posterior") {
    Dataset d;
    d.x = Eigen::MatrixXd(2, 1);
    d.x << 0.1, 0.4;
    d.y = Eigen::Vector2d(1.5, -1.2);
    d.omega = 0.05;
    const CovarianceModel tmpl(MaternParams{1.5, 1.0, 2.0});
    const HierPrior prior{1.0, 1};
    MhOptions o;
    o.burn_in = 1000;
    o.draws = 100000;
    o.proposal_sd = 1.0;
    o.seed = 8;
    const HierChain c = mh_sample(d, tmpl, prior, o);

    // density of log A: L(A) g(A) A
    const double lo = -6.0, hi = 6.0;
    const int bins = 40;
    const double w = (hi - lo) / bins;
    std::vector<double> grid(bins, 0.0), hist(bins, 0.0);
    const int sub = 50;
    double z = 0.0;
    for (int b = 0; b < bins; ++b) {
        for (int s = 0; s < sub; ++s) {
            const double la = lo + (b + (s + 0.5) / sub) * w;
            const double a = std::exp(la);
            grid[b] += std::exp(log_marginal_likelihood(d, model_for_A(tmpl, a)) + log_prior_A(a, prior) + la);
        }
        z += grid[b];
    }
    double outside = 0.0;
    for (double a : c.samples) {
        const int b = static_cast<int>(std::floor((std::log(a) - lo) / w));
        if (b < 0 || b >= bins) outside += 1.0;
        else hist[b] += 1.0;
    }
    const double n = static_cast<double>(c.samples.size());
    double tv = 0.5 * outside / n;
    for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] / n - grid[b] / z);
    CHECK(tv < 0.05);
}

TEST_CASE("posterior interquartile range is predictively close to the truth") {
    const double a0 = 5.0;
    const CovarianceModel truth(MaternParams{2.5, 1.0 / a0, 1.0});
    const Dataset all = line_data(200, 0.01, 77, truth);
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < 200; ++i) (i < 150 ? tr : te).push_back(i);
    const Dataset train = all.subset(tr), test = all.subset(te);
    MhOptions o;
    o.burn_in = 300;
    o.draws = 1500;
    o.seed = 2;
    const HierChain c = mh_sample(train, truth, {1.0, 1}, o);
    std::vector<double> s = c.samples;
    std::sort(s.begin(), s.end());
    const double q1 = s[s.size() / 4], q3 = s[3 * s.size() / 4];
    auto mspe = [&](double a) {
        const auto p = GpPosterior(train, model_for_A(truth, a)).predict_many(test.x);
        double e = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) e += std::pow(p[i].mean - test.y(static_cast<Eigen::Index>(i)), 2);
        return e / static_cast<double>(p.size());
    };
    const double ref = mspe(a0);
    double best = INFINITY;
    for (int i = 0; i <= 10; ++i) best = std::min(best, mspe(q1 + (q3 - q1) * i / 10.0));
    CHECK(best <= 1.1 * ref);
}

TEST_CASE("mle-scaled setup reproduces the fit at A = 1") {
    const Dataset d = line_data(40, 0.05, 19, CovarianceModel(MaternParams{2.5, 0.2, 1.0}));
    const CovarianceModel start(MaternParams{2.5, 1.0, 1.0});
    const HierSetup hs = hier_setup(d, start, {3.0, 1}, HierTemplate::MleScaled);
    const CovarianceModel fit = mle_fit(d, start).model;
    CHECK(A_of_model(hs.tmpl) == doctest::Approx(1.0));
    CHECK(hs.coord_scale == doctest::Approx(1.0 / A_of_model(fit)));
    Eigen::VectorXd x(1);
    x << 0.37;
    const Prediction a = GpPosterior(hs.data, hs.tmpl).predict(x / hs.coord_scale);
    const Prediction b = GpPosterior(d, fit).predict(x);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-9));
    CHECK(a.var == doctest::Approx(b.var).epsilon(1e-9));
    const HierSetup fixed = hier_setup(d, start, {3.0, 1}, HierTemplate::Fixed);
    CHECK(fixed.coord_scale == 1.0);
    CHECK(A_of_model(fixed.tmpl) == 1.0);
}
