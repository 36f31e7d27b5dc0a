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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gprate/covariance.hpp"
#include "gprate/gp.hpp"

namespace gprate {

/// Raised when a schedule or prior violates the conditions it needs.
class ConditionError : public DomainError {
public:
    using DomainError::DomainError;
};

enum class ScheduleFamily { Matern, CH, Anisotropic };

/// Power-law rescaling of the lengthscale with the sample size.
///
/// The default exponent (v - eta) / ((2 eta + d) v) gives the minimax rate
/// n^(-eta/(2 eta + d)) for eta-regular truths. `exponent_override` replaces
/// it, which is how the too-fast (suboptimal / non-contracting) regimes are
/// expressed. `multiplier` scales the returned value; the rates themselves
/// only depend on the exponent.
struct RescalingSchedule {
    ScheduleFamily family = ScheduleFamily::Matern;
    double v = 1.0;
    double eta = 0.5;
    int d = 1;
    double alpha = 0.0;  // CH only
    double multiplier = 1.0;
    std::optional<double> exponent_override;

    void validate() const;
    double exponent() const;
};

/// phi_n = multiplier * n^-exponent.
double rescale_matern(double n, const RescalingSchedule& s);

/// beta_n = multiplier * n^-exponent. Requires alpha > d/2 + 1. If alpha
/// exceeds c_alpha * sqrt(ln ln n) a warning is appended to `warnings`.
double rescale_ch(double n, const RescalingSchedule& s, double c_alpha = 10.0,
                  std::vector<std::string>* warnings = nullptr);

/// lambda_max = multiplier * n^exponent.
double rescale_aniso(double n, const RescalingSchedule& s);

/// `unit_b` rescaled so its largest eigenvalue equals rescale_aniso(n, s).
/// Throws ConditionError when lambda_min/lambda_max < ratio_floor.
AnisotropyMatrix rescale_aniso_matrix(double n, const RescalingSchedule& s,
                                      const AnisotropyMatrix& unit_b, double ratio_floor);

/// n^(-eta/(2 eta + d)).
double minimax_rate(double n, double eta, int d);

struct HierConfig {
    double v = 5.0;
    double k = 3.0;
    int d = 1;

    /// Polynomial exponent of the Gamma(1,1)-on-A^(kd) prior envelope.
    double p() const { return k * d - 1.0; }
};

struct ConditionViolation {
    std::string condition;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct HierCheck {
    bool ok = true;
    double v_threshold = 0.0;  // (1 + d/2)(eta + d/2)
    double k_floor = 0.0;      // (v + d/2) / (v - v_threshold), +inf when undefined
    std::vector<ConditionViolation> violations;
};

/// Checks v > (1 + d/2)(eta + d/2) and k >= (v + d/2) / (v - (1 + d/2)(eta + d/2)).
HierCheck check_hier_conditions(const HierConfig& cfg, double eta);

struct MleOptions {
    int budget = 500;  // objective evaluations across all starts
    int restarts = 3;
    bool fit_lengthscale = true;
    bool fit_variance = true;
    bool fit_alpha = true;  // CH only
    /// Optional log prior density added to the objective (maximum a posteriori).
    std::function<double(const CovarianceModel&)> log_prior;
};

struct MleResult {
    CovarianceModel model;
    double log_likelihood = 0.0;  // plus the log prior when one is set
    int evaluations = 0;
    int failed_evaluations = 0;
};

/// Maximizes the log marginal likelihood over the log of the free parameters
/// (lengthscale phi / beta / c, CH alpha, sigma2) with v and any anisotropy
/// matrix held fixed. `init` supplies the starting values.
MleResult mle_fit(const Dataset& data, const CovarianceModel& init, const MleOptions& opts = {});

}  // namespace gprate
