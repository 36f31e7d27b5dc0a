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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gprate/covariance.hpp"
#include "gprate/gp.hpp"
#include "gprate/hier.hpp"
#include "gprate/schedules.hpp"

namespace gprate {

// ---------------------------------------------------------------------------
// Truth generators

/// Brownian motion on a sorted grid in [0, 1]: W(0) = 0, independent
/// N(0, spacing) increments, multiplied by `scale`.
std::vector<double> gen_brownian_truth(std::span<const double> grid, double scale, std::uint64_t seed);

/// Piecewise-linear interpolation of (grid, values), constant beyond the ends.
double interpolate_linear(std::span<const double> grid, std::span<const double> values, double x);

/// One draw L z of a centered GP at the rows of `points` (at most 4000 sites).
Eigen::VectorXd gen_gp_truth(const Eigen::MatrixXd& points, const CovarianceModel& model,
                             std::uint64_t seed);

struct BrownianTruth {
    double scale = 100.0;
};
struct GpTruth {
    CovarianceModel model;
};
struct ZeroTruth {};
struct UserTruth {
    std::string name;
    std::function<double(const Eigen::VectorXd&)> f;
};
using TruthSpec = std::variant<BrownianTruth, GpTruth, ZeroTruth, UserTruth>;

std::string truth_name(const TruthSpec& t);

/// Truth values at the rows of `points`, sampled exactly there.
Eigen::VectorXd draw_truth(const TruthSpec& truth, const Eigen::MatrixXd& points, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Methods

enum class MethodKind {
    Fixed,          // template parameters as given
    MLE,            // maximum likelihood, v fixed
    Rescaled,       // lengthscale from the schedule
    RescaledTuned,  // MLE, then a multiplier on the lengthscale tuned toward nominal coverage
    Hierarchical,   // MH over A = inverse lengthscale, predictive mixture
    Oracle,         // truth as the mean, exact noise intervals
};

std::string method_name(MethodKind k);
MethodKind parse_method(const std::string& name);

struct MethodSpec {
    MethodKind kind = MethodKind::MLE;
    RescalingSchedule schedule;   // Rescaled
    bool fit_variance = false;    // Rescaled: MLE pre-fit of sigma2 (and CH alpha)
    HierTemplate hier_template = HierTemplate::Fixed;
    MleOptions mle;
    HierPrior prior;              // Hierarchical
    MhOptions mh;
    int thin = 10;
};

// ---------------------------------------------------------------------------
// Scenarios

struct ScenarioConfig {
    int d = 1;
    int n_total = 300;
    int n_test = 100;
    TruthSpec truth = BrownianTruth{};
    double omega = 1.0;
    MethodSpec method;
    CovarianceModel model;  // family, fixed v, starting parameters
    int replicates = 30;
    std::uint64_t seed = 0;
    double level = 0.95;
    int threads = 1;

    void validate() const;
};

struct MetricsRow {
    int replicate = 0;
    double mspe = 0.0;
    double cvg = 0.0;
    double alci = 0.0;
    double rmse_truth = 0.0;  // empirical-norm distance of the mean to the truth at test sites
    bool ok = true;
    std::string error;
};

/// MSPE, CVG and ALCI of point predictions and intervals against held-out Y.
MetricsRow metrics(std::span<const double> means, std::span<const Interval> intervals,
                   std::span<const double> actual);

/// Everything one replicate needs, regenerated from (config, replicate).
struct ReplicateData {
    Dataset train;
    Eigen::MatrixXd test_x;
    Eigen::VectorXd test_y;
    Eigen::VectorXd test_truth;
};
ReplicateData make_replicate(const ScenarioConfig& cfg, int replicate);

struct MethodOutput {
    std::vector<double> means;
    std::vector<Interval> intervals;
    CovarianceModel model;         // fitted / rescaled model (template for Hierarchical)
    double acceptance_rate = 0.0;  // Hierarchical only
};

/// Applies the configured method to one replicate's training data and
/// predicts at its test sites.
MethodOutput apply_method(const ScenarioConfig& cfg, const ReplicateData& rep, std::uint64_t seed);

/// Seed of replicate r: derive_seed(seed, r).
std::uint64_t replicate_seed(std::uint64_t seed, int replicate);

/// Runs every replicate. A failing replicate yields a row with ok = false;
/// more than 20% failures raise NumericalError.
std::vector<MetricsRow> run_scenario(const ScenarioConfig& cfg);

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0;
};
struct ScenarioSummary {
    int rows = 0;
    int failed = 0;
    MetricSummary mspe, cvg, alci;
};
ScenarioSummary summarize(const std::vector<MetricsRow>& rows);

/// Golden-section search on log multiplier in [1e-2, 1e2] minimizing
/// |coverage(m) - target|. Returns the multiplier.
double tune_multiplier(const std::function<double(double)>& coverage, double target, int iterations = 30);

// ---------------------------------------------------------------------------
// Rates

struct RateReport {
    std::vector<int> n_grid;
    std::vector<double> rmse;  // mean over replicates of the held-out truth RMSE
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double target_slope = 0.0;
    bool parametric_regime = false;  // slope < target - 0.15
};

/// Least-squares fit of log y on log x: (slope, intercept, slope standard error).
struct LogLogFit {
    double slope, intercept, slope_se;
};
LogLogFit fit_log_log(std::span<const double> x, std::span<const double> y);

/// For each n the training set has n points and base.n_test held-out points;
/// the method is the rescaled schedule. Replicate seeds depend only on
/// (base.seed, n, replicate), so different schedules see the same data.
RateReport empirical_rate(const ScenarioConfig& base, const std::vector<int>& n_grid,
                          const RescalingSchedule& schedule, int reps_per_n);

}  // namespace gprate
