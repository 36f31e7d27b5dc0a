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

#include "gprate/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace gprate {

namespace {

// Flush-to-zero and denormals-are-zero for the current thread. With very
// short lengthscales the factorization otherwise spends most of its time on
// subnormal intermediates.
class SubnormalGuard {
public:
#if defined(__SSE2__)
    SubnormalGuard() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040u); }
    ~SubnormalGuard() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

}  // namespace

void Dataset::validate() const {
    if (x.rows() < 1) throw DomainError("Dataset: need at least one observation");
    if (x.cols() < 1) throw DomainError("Dataset: dimension must be >= 1");
    if (y.size() != x.rows()) throw DomainError("Dataset: x and y row counts differ");
    if (!x.allFinite() || !y.allFinite()) throw DomainError("Dataset: non-finite values");
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw DomainError("Dataset: noise variance omega must be > 0");
}

Dataset Dataset::subset(std::span<const Eigen::Index> idx) const {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
        out.y(static_cast<Eigen::Index>(i)) = y(idx[i]);
    }
    out.omega = omega;
    return out;
}

CholeskyResult jittered_cholesky(const Eigen::MatrixXd& k) {
    const SubnormalGuard guard;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

    const double mean_diag = k.diagonal().mean();
    for (double rel = 1e-10; rel <= 1e-4 * (1 + 1e-9); rel *= 10.0) {
        const double jitter = rel * mean_diag;
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "not positive definite after jitter up to 1e-4*mean(diag): n = " << k.rows()
       << ", min eigenvalue " << eig.eigenvalues().minCoeff() << ", max eigenvalue "
       << eig.eigenvalues().maxCoeff();
    throw NotPositiveDefinite(os.str());
}

GpPosterior::GpPosterior(const Dataset& data, CovarianceModel model)
    : model_(std::move(model)), x_(data.x), y_(data.y), omega_(data.omega) {
    data.validate();
    if (model_.anisotropy() && model_.anisotropy()->dim() != data.d())
        throw DomainError("fit: anisotropy matrix dimension does not match the design");
    const SubnormalGuard guard;
    auto [lower, jitter] = jittered_cholesky(cov_matrix(x_, model_, omega_));
    chol_ = std::move(lower);
    jitter_ = jitter;
    weights_ = chol_.triangularView<Eigen::Lower>().solve(y_);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(weights_);
}

double GpPosterior::finish_variance(double raw) const {
    if (raw >= 0.0) return raw;
    const double tol = 1e-8 * std::max(1.0, model_.variance());
    if (raw > -tol) {
        clamped_->fetch_add(1);
        return 0.0;
    }
    std::ostringstream os;
    os << "predict: negative predictive variance " << raw;
    throw NumericalError(os.str());
}

Prediction GpPosterior::predict(const Eigen::Ref<const Eigen::VectorXd>& xstar) const {
    if (xstar.size() != x_.cols()) throw DomainError("predict: dimension mismatch");
    const Eigen::MatrixXd xs = xstar.transpose();
    return predict_many(xs).front();
}

std::vector<Prediction> GpPosterior::predict_many(const Eigen::MatrixXd& xstar) const {
    if (xstar.cols() != x_.cols()) throw DomainError("predict: dimension mismatch");
    std::vector<Prediction> out(static_cast<std::size_t>(xstar.rows()));
    if (xstar.rows() == 0) return out;
    const SubnormalGuard guard;
    const Eigen::MatrixXd ks = cross_cov(x_, xstar, model_);  // n x m
    const Eigen::VectorXd mean = ks.transpose() * weights_;
    const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
    const double c0 = model_.variance();
    for (Eigen::Index j = 0; j < xstar.rows(); ++j) {
        out[static_cast<std::size_t>(j)] = {mean(j), finish_variance(c0 - v.col(j).squaredNorm())};
    }
    return out;
}

double GpPosterior::log_marginal_likelihood() const {
    const double n = static_cast<double>(y_.size());
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    return -0.5 * y_.dot(weights_) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpPosterior fit(const Dataset& data, const CovarianceModel& model) { return {data, model}; }

Prediction predict(const GpPosterior& post, const Eigen::Ref<const Eigen::VectorXd>& xstar) {
    return post.predict(xstar);
}

double log_marginal_likelihood(const Dataset& data, const CovarianceModel& model) {
    return GpPosterior(data, model).log_marginal_likelihood();
}

Interval credible_interval(double mean, double var, double level, double omega) {
    if (!(var >= 0.0)) throw DomainError("credible_interval: variance must be >= 0");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("credible_interval: level must be in (0, 1)");
    if (!(omega >= 0.0)) throw DomainError("credible_interval: omega must be >= 0");
    const double half = normal_quantile(0.5 * (1.0 + level)) * std::sqrt(var + omega);
    return {mean - half, mean + half};
}

double empirical_norm(std::span<const double> w) {
    if (w.empty()) throw DomainError("empirical_norm: need at least one value");
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s / static_cast<double>(w.size()));
}

}  // namespace gprate
