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

#include <atomic>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gprate/covariance.hpp"

namespace gprate {

/// Fixed-design regression data Y_j = w(x_j) + eps_j, eps_j ~ N(0, omega).
struct Dataset {
    Eigen::MatrixXd x;  // n x d, one site per row
    Eigen::VectorXd y;
    double omega = 1.0;

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index d() const { return x.cols(); }
    void validate() const;
    /// Rows selected by `idx`, same omega.
    Dataset subset(std::span<const Eigen::Index> idx) const;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct Prediction {
    double mean = 0.0;
    double var = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// Cholesky-factored GP posterior. Immutable after fit; prediction is safe
/// from multiple threads.
class GpPosterior {
public:
    GpPosterior(const Dataset& data, CovarianceModel model);

    Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& xstar) const;
    /// One prediction per row of `xstar`.
    std::vector<Prediction> predict_many(const Eigen::MatrixXd& xstar) const;
    double log_marginal_likelihood() const;

    const CovarianceModel& model() const { return model_; }
    const Eigen::MatrixXd& chol() const { return chol_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::MatrixXd& design() const { return x_; }
    double omega() const { return omega_; }
    double jitter_used() const { return jitter_; }
    /// Number of predictive variances in (-tol, 0) clamped to zero so far.
    int clamped_variances() const { return clamped_->load(); }

private:
    double finish_variance(double raw) const;

    CovarianceModel model_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    double omega_;
    Eigen::MatrixXd chol_;     // lower factor of K + (omega + jitter) I
    Eigen::VectorXd weights_;  // (K + omega I)^-1 y
    double jitter_ = 0.0;
    std::shared_ptr<std::atomic<int>> clamped_ = std::make_shared<std::atomic<int>>(0);
};

/// Cholesky factor of K + omega I with the fixed jitter ladder
/// 1e-10, 1e-9, ..., 1e-4 times mean(diag). Throws NotPositiveDefinite.
struct CholeskyResult {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};
CholeskyResult jittered_cholesky(const Eigen::MatrixXd& k);

GpPosterior fit(const Dataset& data, const CovarianceModel& model);
Prediction predict(const GpPosterior& post, const Eigen::Ref<const Eigen::VectorXd>& xstar);
double log_marginal_likelihood(const Dataset& data, const CovarianceModel& model);

/// mean +- z_{(1+level)/2} sqrt(var + omega): an interval for a new noisy observation.
Interval credible_interval(double mean, double var, double level, double omega);

/// sqrt(mean(w_i^2)).
double empirical_norm(std::span<const double> w);

}  // namespace gprate
