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
#include <iosfwd>
#include <string>
#include <vector>

#include "gprate/covariance.hpp"
#include "gprate/gp.hpp"
#include "gprate/schedules.hpp"

namespace gprate {

/// Gamma(1, 1) prior on A^(k d), A the inverse lengthscale.
struct HierPrior {
    double k = 1.0;
    int d = 1;

    void validate() const;
    double power() const { return k * d; }
};

/// log g_A(a) = log(kd) + (kd - 1) log a - a^(kd).
double log_prior_A(double a, const HierPrior& prior);

/// Template model with its lengthscale replaced by the one A encodes:
/// Matern phi = 1/A, CH beta = 1/A, squared exponential c = 1/A^2.
CovarianceModel model_for_A(const CovarianceModel& tmpl, double a);

/// Inverse of model_for_A.
double A_of_model(const CovarianceModel& m);

/// Template for the chain with sigma2 (and CH alpha when opts.fit_alpha) set
/// by maximizing log p(y | A, sigma2) + log g_A(A) + log A jointly over A and
/// sigma2. The lengthscale of the result encodes the maximizing A.
CovarianceModel hier_prefit(const Dataset& data, const CovarianceModel& tmpl, const HierPrior& prior,
                            MleOptions opts = {});

/// How the chain template is obtained from the configured model.
///   Fixed: used as given.
///   Map: sigma2 (and CH alpha) from hier_prefit.
///   MleScaled: MLE fit of every parameter; coordinates divided by the fitted
///     lengthscale so that A = 1 reproduces the fit.
enum class HierTemplate { Fixed, Map, MleScaled };

std::string hier_template_name(HierTemplate t);
HierTemplate parse_hier_template(const std::string& name);

struct HierSetup {
    Dataset data;              // training data in chain coordinates
    CovarianceModel tmpl;
    double coord_scale = 1.0;  // chain coordinates = original / coord_scale
};

HierSetup hier_setup(const Dataset& data, const CovarianceModel& model, const HierPrior& prior,
                     HierTemplate how, const MleOptions& opts = {});

struct MhOptions {
    int burn_in = 500;
    int draws = 5000;
    double proposal_sd = 0.5;  // random walk on log A
    std::uint64_t seed = 0;
    double initial_a = 0.0;    // <= 0: start from the prior median
};

struct HierChain {
    std::vector<double> samples;         // post burn-in draws of A
    std::vector<double> log_posteriors;  // unnormalized, on the log A scale
    std::vector<char> accepted;
    double acceptance_rate = 0.0;        // over post burn-in proposals
    int burn_in = 0;
    double proposal_sd = 0.0;
    int failed_evaluations = 0;          // likelihoods that could not be factorized
    CovarianceModel tmpl;
};

/// Random-walk Metropolis-Hastings over log A targeting
///   log p(y | A) + log g_A(A) + log A.
/// Deterministic given the seed. Proposals whose likelihood fails are
/// rejected; if more than half of all proposals fail the run aborts.
HierChain mh_sample(const Dataset& data, const CovarianceModel& tmpl, const HierPrior& prior,
                    const MhOptions& opts);

struct HierPrediction {
    double mean = 0.0;
    double var = 0.0;  // latent variance, law of total variance over draws
    Interval interval;
};

/// Posterior predictive mixture over draws 0, thin, 2 thin, ... of the chain.
/// The interval is for a new noisy observation at the given level.
std::vector<HierPrediction> hier_predict(const HierChain& chain, const Dataset& data,
                                         const Eigen::MatrixXd& xstar, int thin = 10,
                                         double level = 0.95);
HierPrediction hier_predict(const HierChain& chain, const Dataset& data,
                            const Eigen::Ref<const Eigen::VectorXd>& xstar, int thin = 10,
                            double level = 0.95);

/// Equal-weight Gaussian mixture quantile by bisection to 1e-6 absolute.
double mixture_quantile(const std::vector<double>& means, const std::vector<double>& sds, double p);

/// CSV columns: iteration,A,log_posterior,accepted
void write_chain_csv(std::ostream& os, const HierChain& chain);

}  // namespace gprate
