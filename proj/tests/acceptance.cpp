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

// Acceptance checks 1-10. With no arguments every check runs; otherwise only
// the listed numbers. One line per check: "criterion N: PASS|FAIL ...".
// Exit status is non-zero when any selected check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "gprate/commands.hpp"
#include "gprate/covariance.hpp"
#include "gprate/experiments.hpp"
#include "gprate/gp.hpp"
#include "gprate/hier.hpp"
#include "gprate/schedules.hpp"
#include "gprate/specfun.hpp"

using namespace gprate;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "failed: " << what << "; ";
        }
    }
};

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// ---------------------------------------------------------------------------

void special_functions(Outcome& o) {
    double worst = 0.0;
    for (double x : {0.01, 0.5, 1.0, 7.0, 100.0}) {
        const double e = rel_err(bessel_k(0.5, x), std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x));
        worst = std::max(worst, e);
    }
    for (double a : {0.5, 2.0, 4.5}) {
        for (double c : {0.1, 1.0, 9.0}) worst = std::max(worst, rel_err(hyper_u(a, a + 1.0, c), std::pow(c, -a)));
    }
    worst = std::max(worst, rel_err(std::exp(ln_gamma(0.5)), std::sqrt(std::numbers::pi)));
    for (double x : {1e-3, 0.5, 1.0, 5.0, 30.0})
        worst = std::max(worst, rel_err(reg_lower_gamma(1.0, x), -std::expm1(-x)));
    o.detail << "worst relative error " << worst << "; ";
    o.require(worst <= 1e-10, "relative error <= 1e-10");
}

void incomplete_gamma(Outcome& o) {
    const double p = reg_lower_gamma(10001.0, 10000.0);
    o.detail << "P(10001, 10000) = " << p << "; ";
    o.require(p >= 0.49 && p <= 0.51, "P(10001, 10000) in [0.49, 0.51]");
    int points = 0, bad = 0;
    for (double a : {0.3, 2.0, 7.0}) {
        const double g = std::exp(-ln_gamma(1.0 + a) / a);
        const double r = a < 1.0 ? g : 1.0, s = a < 1.0 ? 1.0 : g;
        for (double lx = -3.0; lx <= 1.5; lx += 0.05) {
            const double x = std::pow(10.0, lx);
            const double lower = std::pow(-std::expm1(-s * x), a), upper = std::pow(-std::expm1(-r * x), a);
            if (!(upper < 1.0)) continue;  // both sides round to 1
            const double v = reg_lower_gamma(a, x);
            ++points;
            if (!(lower < v && v < upper)) ++bad;
        }
    }
    o.detail << "sandwich holds at " << points - bad << "/" << points << " grid points; ";
    o.require(bad == 0, "sandwich on the full grid");
}

void ch_mixture(Outcome& o) {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double zero_err = 0.0, mix_err = 0.0;
    for (int i = 0; i < 20; ++i) {
        const ChParams p{0.2 + 5.0 * u(rng), 0.3 + 6.0 * u(rng), 0.05 + 3.0 * u(rng), 0.1 + 10.0 * u(rng)};
        zero_err = std::max(zero_err, std::abs(ch_cov(0.0, p) - p.sigma2));
    }
    for (int i = 0; i < 20; ++i) {
        const ChParams p{0.2 + 5.0 * u(rng), 0.3 + 6.0 * u(rng), 0.05 + 3.0 * u(rng), 0.1 + 10.0 * u(rng)};
        const double h = 4.0 * u(rng);
        mix_err = std::max(mix_err, std::abs(ch_cov(h, p) - ch_mixture_oracle(h, p)) / p.sigma2);
    }
    o.detail << "max |C(0) - sigma2| = " << zero_err << ", max |ch - oracle| / sigma2 = " << mix_err << "; ";
    o.require(zero_err <= 1e-8, "zero lag within 1e-8");
    o.require(mix_err <= 1e-6, "mixture agreement within 1e-6 sigma2");
}

template <class M>
double inverse_fourier(M m, double h) {
    if (h == 0.0) return 2.0 * integrate_to_infinity(m, 0.0, QuadratureConfig{1e-10, 0.0, 4096}).value;
    boost::math::quadrature::ooura_fourier_cos<double> oc(1e-10, 12);
    return 2.0 * oc.integrate(m, h).first;
}

void spectral(Outcome& o) {
    const MaternParams mp{1.5, 0.7, 2.0};
    const ChParams cp{1.0, 2.5, 0.8, 1.5};
    auto mm = [&](double l) { return matern_spectral(l, mp, 1); };
    auto cm = [&](double l) { return ch_spectral(l, cp, 1); };
    double worst = 0.0;
    for (double h : {0.0, 0.5, 1.0}) {
        worst = std::max(worst, std::abs(inverse_fourier(mm, h) - matern_cov(h, mp)));
        worst = std::max(worst, std::abs(inverse_fourier(cm, h) - ch_cov(h, cp)));
    }
    const double mass_m = std::abs(inverse_fourier(mm, 0.0) - mp.sigma2);
    const double mass_c = std::abs(inverse_fourier(cm, 0.0) - cp.sigma2);
    o.detail << "max inversion error " << worst << ", mass errors " << mass_m << ", " << mass_c << "; ";
    o.require(worst <= 1e-4, "inversion within 1e-4");
    o.require(std::max(mass_m, mass_c) <= 1e-4, "mass within 1e-4");
}

void gp_oracle(Outcome& o) {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int n = 2 + t % 11, d = 1 + t % 2;
        Dataset data;
        data.x = Eigen::MatrixXd(n, d);
        for (int i = 0; i < data.x.size(); ++i) data.x.data()[i] = u(rng);
        data.y = Eigen::VectorXd(n);
        for (int i = 0; i < n; ++i) data.y(i) = 4.0 * u(rng) - 2.0;
        data.omega = 0.05 + u(rng);
        const MaternParams p{0.5 + 3.0 * u(rng), 0.1 + u(rng), 0.5 + 2.0 * u(rng)};
        Eigen::VectorXd xs(d);
        for (int j = 0; j < d; ++j) xs(j) = u(rng);

        Eigen::MatrixXd k(n, n);
        Eigen::VectorXd ks(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                k(i, j) = matern_cov((data.x.row(i) - data.x.row(j)).norm(), p) + (i == j ? data.omega : 0.0);
            ks(i) = matern_cov((data.x.row(i).transpose() - xs).norm(), p);
        }
        const Eigen::MatrixXd inv = k.fullPivLu().inverse();
        const double mean = ks.dot(inv * data.y), var = p.sigma2 - ks.dot(inv * ks);
        const double ll = -0.5 * data.y.dot(inv * data.y) - 0.5 * std::log(k.determinant()) -
                          0.5 * n * std::log(2.0 * std::numbers::pi);

        const GpPosterior post(data, CovarianceModel(p));
        const Prediction pr = post.predict(xs);
        worst = std::max({worst, std::abs(pr.mean - mean) / std::max(1.0, std::abs(mean)),
                          std::abs(pr.var - var) / std::max(1.0, var),
                          rel_err(post.log_marginal_likelihood(), ll)});
    }
    o.detail << "worst relative deviation " << worst << " over 50 instances; ";
    o.require(worst <= 1e-8, "agreement within 1e-8");
}

RescalingSchedule optimal_schedule() {
    RescalingSchedule s;
    s.v = 2.0;
    s.eta = 0.5;
    s.d = 1;
    return s;
}

void schedule_arithmetic(Outcome& o) {
    const double phi = rescale_matern(1024, optimal_schedule());
    o.require(phi == std::pow(2.0, -3.75), "rescale_matern(1024) == 2^-3.75");
    o.require(std::abs(minimax_rate(1e4, 0.5, 1) - 0.1) <= 1e-15, "minimax_rate(1e4, 0.5, 1) == 0.1");
    const HierCheck a = check_hier_conditions({5.0, 3.0, 1}, 0.5);
    const HierCheck b = check_hier_conditions({6.0, 7.0, 2}, 1.0);
    o.require(a.ok, "(v=5, k=3, d=1) accepted");
    o.require(b.ok, "(v=6, k=7, d=2) accepted");
    o.detail << "phi = " << phi << ", k floors " << a.k_floor << " and " << b.k_floor << "; ";
}

// ---------------------------------------------------------------------------
// Rates

ScenarioConfig rate_base() {
    ScenarioConfig cfg;
    cfg.d = 1;
    cfg.n_test = 100;
    cfg.truth = BrownianTruth{1.0};
    cfg.omega = 1.0;
    cfg.model = CovarianceModel(MaternParams{2.0, 1.0, 1.0});
    cfg.seed = 7;
    return cfg;
}

const std::vector<int> kRateGrid{100, 200, 400, 800, 1600, 3200};


std::optional<RateReport> g_optimal;

const RateReport& optimal_rate() {
    if (!g_optimal) g_optimal = empirical_rate(rate_base(), kRateGrid, optimal_schedule(), 20);
    return *g_optimal;
}

void rate_optimal(Outcome& o) {
    const RateReport& r = optimal_rate();
    o.detail << "slope " << r.slope << " (se " << r.slope_se << "), target " << r.target_slope << "; ";
    o.require(std::abs(r.slope - (-0.25)) <= 0.15, "slope within 0.15 of -0.25");
}

void rate_degradation(Outcome& o) {
    const RateReport& opt = optimal_rate();
    RescalingSchedule fast = optimal_schedule();
    fast.exponent_override = 2.0 * fast.exponent();
    const RateReport f = empirical_rate(rate_base(), kRateGrid, fast, 20);
    RescalingSchedule none = optimal_schedule();
    none.exponent_override = 1.1;
    const RateReport z = empirical_rate(rate_base(), kRateGrid, none, 20);
    o.detail << "optimal " << opt.slope << ", doubled exponent " << f.slope << ", n^-1.1 " << z.slope << "; ";
    o.require(f.slope >= opt.slope + 0.05, "doubled exponent at least 0.05 flatter");
    o.require(z.slope >= -0.05, "n^-1.1 slope >= -0.05");
}

// ---------------------------------------------------------------------------
// Hierarchical

void hierarchical(Outcome& o) {
    {
        Dataset d;
        d.x = Eigen::MatrixXd(2, 1);
        d.x << 0.2, 0.7;
        d.y = Eigen::Vector2d(0.3, -0.1);
        d.omega = 1e6;
        MhOptions mh;
        mh.draws = 100000;
        mh.proposal_sd = 1.0;
        mh.seed = 41;
        const HierPrior prior{3.0, 1};
        const HierChain c = mh_sample(d, CovarianceModel(MaternParams{1.5, 1.0, 1.0}), prior, mh);
        double m = 0.0;
        for (double a : c.samples) m += std::pow(a, prior.power());
        m /= static_cast<double>(c.samples.size());
        o.detail << "prior recovery E[A^3] = " << m << "; ";
        o.require(std::abs(m - 1.0) <= 0.1, "prior recovery within 0.1");
    }
    {
        Dataset d;
        d.x = Eigen::MatrixXd(2, 1);
        d.x << 0.1, 0.4;
        d.y = Eigen::Vector2d(1.5, -1.2);
        d.omega = 0.05;
        const CovarianceModel tmpl(MaternParams{1.5, 1.0, 2.0});
        const HierPrior prior{1.0, 1};
        MhOptions mh;
        mh.burn_in = 1000;
        mh.draws = 100000;
        mh.proposal_sd = 1.0;
        mh.seed = 8;
        const HierChain c = mh_sample(d, tmpl, prior, mh);
        const double lo = -6.0, hi = 6.0;
        const int bins = 40, sub = 50;
        const double w = (hi - lo) / bins;
        std::vector<double> grid(bins, 0.0), hist(bins, 0.0);
        double z = 0.0, outside = 0.0;
        for (int b = 0; b < bins; ++b) {
            for (int s = 0; s < sub; ++s) {
                const double la = lo + (b + (s + 0.5) / sub) * w;
                grid[b] += std::exp(log_marginal_likelihood(d, model_for_A(tmpl, std::exp(la))) +
                                    log_prior_A(std::exp(la), prior) + la);
            }
            z += grid[b];
        }
        for (double a : c.samples) {
            const int b = static_cast<int>(std::floor((std::log(a) - lo) / w));
            if (b < 0 || b >= bins) outside += 1.0;
            else hist[b] += 1.0;
        }
        const double n = static_cast<double>(c.samples.size());
        double tv = 0.5 * outside / n;
        for (int b = 0; b < bins; ++b) tv += 0.5 * std::abs(hist[b] / n - grid[b] / z);
        o.detail << "grid total variation " << tv << "; ";
        o.require(tv <= 0.05, "total variation within 0.05");
    }
    {
        // Brownian scenario: hierarchical CH, v = 5, k = 3, 500 + 5000 draws.
        ScenarioConfig cfg;
        cfg.n_total = 300;
        cfg.n_test = 100;
        cfg.truth = BrownianTruth{100.0};
        cfg.omega = 1.0;
        cfg.model = CovarianceModel(ChParams{5.0, 2.0, 0.1, 100.0});
        cfg.seed = 9;
        cfg.method.kind = MethodKind::Hierarchical;
        cfg.method.prior = HierPrior{3.0, 1};
        cfg.method.hier_template = HierTemplate::MleScaled;
        double cvg = 0.0, acc_lo = 1.0, acc_hi = 0.0;
        const int reps = 10;
        for (int r = 0; r < reps; ++r) {
            const ReplicateData rep = make_replicate(cfg, r);
            const MethodOutput out = apply_method(cfg, rep, replicate_seed(cfg.seed, r));
            const std::vector<double> y(rep.test_y.data(), rep.test_y.data() + rep.test_y.size());
            cvg += metrics(out.means, out.intervals, y).cvg / reps;
            acc_lo = std::min(acc_lo, out.acceptance_rate);
            acc_hi = std::max(acc_hi, out.acceptance_rate);
        }
        o.detail << "CH scenario mean CVG " << cvg << " (acceptance " << acc_lo << ".." << acc_hi << "); ";
        o.require(cvg >= 0.85 && cvg <= 1.0, "mean CVG in [0.85, 1]");
    }
}

// ---------------------------------------------------------------------------
// CLI determinism

std::string read_all(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void cli_determinism(Outcome& o) {
    const fs::path golden = GPRATE_GOLDEN_DIR;
    const fs::path work = fs::temp_directory_path() / "gprate_acceptance_cli";
    fs::remove_all(work);
    std::ostringstream out, err;
    for (const char* run : {"a", "b"}) {
        CommandOptions opts;
        opts.config = golden / "simulate.json";
        opts.output = work / run;
        const int code = run_command("simulate", opts, out, err);
        o.require(code == kExitOk, std::string("simulate run ") + run + " exit 0 (" + err.str() + ")");
    }
    int files = 0;
    for (const auto& e : fs::directory_iterator(golden / "simulate")) {
        const std::string name = e.path().filename().string();
        const std::string want = read_all(e.path());
        o.require(read_all(work / "a" / name) == read_all(work / "b" / name), name + " identical across runs");
        o.require(read_all(work / "a" / name) == want, name + " matches the golden file");
        ++files;
    }
    for (const auto& e : fs::directory_iterator(work / "a"))
        o.require(fs::exists(golden / "simulate" / e.path().filename()), e.path().filename().string() + " has a golden copy");
    o.detail << files << " golden files compared; ";
    o.require(files > 0, "golden files present");
}

struct Check {
    int id;
    const char* name;
    double limit_seconds;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Check> checks{
        {1, "special-function identities", 1.0, special_functions},
        {2, "incomplete gamma", 1.0, incomplete_gamma},
        {3, "CH zero lag and mixture", 30.0, ch_mixture},
        {4, "spectral consistency", 60.0, spectral},
        {5, "GP algebra oracle", 10.0, gp_oracle},
        {6, "schedule arithmetic", 1.0, schedule_arithmetic},
        {7, "contraction rate", 900.0, rate_optimal},
        {8, "rate degradation", 900.0, rate_degradation},
        {9, "hierarchical sanity", 1200.0, hierarchical},
        {10, "CLI determinism", 60.0, cli_determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    bool all_pass = true;
    for (const auto& c : checks) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what() << "; ";
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (sec > c.limit_seconds) {
            o.pass = false;
            o.detail << "failed: runtime over " << c.limit_seconds << " s; ";
        }
        all_pass = all_pass && o.pass;
        std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " [" << c.name << "] "
                  << o.detail.str() << "runtime " << sec << " s" << std::endl;
    }
    return all_pass ? 0 : 1;
}
