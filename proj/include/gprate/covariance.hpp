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
#include <variant>

#include <Eigen/Dense>

#include "gprate/specfun.hpp"

namespace gprate {

/// Matern kernel sigma2 * 2^(1-v)/Gamma(v) * (sqrt(2v) h/phi)^v K_v(sqrt(2v) h/phi).
struct MaternParams {
    double v = 0.5;
    double phi = 1.0;
    double sigma2 = 1.0;

    void validate() const;
};

/// Confluent hypergeometric kernel
/// sigma2 * Gamma(v+alpha)/Gamma(v) * U(alpha, 1-v, v (h/beta)^2).
struct ChParams {
    double v = 0.5;
    double alpha = 2.0;
    double beta = 1.0;
    double sigma2 = 1.0;

    void validate() const;
};

/// Squared exponential kernel sigma2 * exp(-h^2 / c).
struct SqExpParams {
    double c = 1.0;
    double sigma2 = 1.0;

    void validate() const;
};

/// Symmetric positive-definite matrix B defining the distance sqrt(h' B h).
class AnisotropyMatrix {
public:
    explicit AnisotropyMatrix(Eigen::MatrixXd b);

    const Eigen::MatrixXd& matrix() const { return b_; }
    int dim() const { return static_cast<int>(b_.rows()); }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }
    double eigen_ratio() const { return lambda_min_ / lambda_max_; }
    double determinant() const { return det_; }
    /// lambda' B^-1 lambda
    double inverse_quadratic_form(const Eigen::VectorXd& lam) const;
    /// Same shape, largest eigenvalue rescaled to `target`.
    AnisotropyMatrix with_lambda_max(double target) const;

private:
    Eigen::MatrixXd b_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
    double det_ = 0.0;
};

using KernelParams = std::variant<MaternParams, ChParams, SqExpParams>;

enum class Family { Matern, CH, SqExp };

std::string family_name(Family f);
Family parse_family(const std::string& name);

/// A stationary covariance: a kernel family applied to the Euclidean distance
/// or, when `anisotropy` is set, to sqrt(h' B h). In the anisotropic case the
/// kernel's own lengthscale still applies; use phi = 1 (beta = 1, c = 1) for
/// the plain anisotropic forms.
class CovarianceModel {
public:
    CovarianceModel() : CovarianceModel(MaternParams{}) {}
    explicit CovarianceModel(KernelParams kernel,
                             std::optional<AnisotropyMatrix> anisotropy = std::nullopt,
                             QuadratureConfig quad = {});

    const KernelParams& kernel() const { return kernel_; }
    const std::optional<AnisotropyMatrix>& anisotropy() const { return anisotropy_; }
    const QuadratureConfig& quadrature() const { return quad_; }
    Family family() const;

    /// Covariance at lag distance h >= 0.
    double operator()(double h) const;
    /// Value at zero lag, sigma2.
    double variance() const;
    /// Euclidean or Mahalanobis distance between two points.
    double distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                    const Eigen::Ref<const Eigen::VectorXd>& y) const;

    /// Callable for bulk evaluation. For CH it interpolates a shared table of
    /// U (relative error ~1e-9) instead of running one quadrature per entry.
    std::function<double(double)> bulk_evaluator() const;

    /// Copy with sigma2 replaced.
    CovarianceModel with_variance(double sigma2) const;

private:
    KernelParams kernel_;
    std::optional<AnisotropyMatrix> anisotropy_;
    QuadratureConfig quad_;
};

double matern_cov(double h, const MaternParams& p);
double ch_cov(double h, const ChParams& p, const QuadratureConfig& cfg = {});
double sqexp_cov(double h, const SqExpParams& p);

/// CH covariance computed as the inverse-gamma mixture of Matern kernels over
/// phi^2 ~ IG(alpha, beta^2/2). Independent of the U-function route.
double ch_mixture_oracle(double h, const ChParams& p, const QuadratureConfig& cfg = {});

double aniso_distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, const AnisotropyMatrix& b);

/// Matern spectral density in R^d, normalized so that it integrates to sigma2:
///   sigma2 Gamma(v+d/2) / (Gamma(v) pi^(d/2)) * kappa^(2v) / (kappa^2 + lam^2)^(v+d/2),
/// kappa = sqrt(2v)/phi.
double matern_spectral(double lam, const MaternParams& p, int d);

/// CH spectral density, the IG(alpha, beta^2/2) mixture of matern_spectral over phi^2.
double ch_spectral(double lam, const ChParams& p, int d, const QuadratureConfig& cfg = {});

/// Spectral densities of the anisotropic forms (kernel lengthscale taken as 1).
double aniso_matern_spectral(const Eigen::VectorXd& lam, const MaternParams& p,
                             const AnisotropyMatrix& b);
double aniso_ch_spectral(const Eigen::VectorXd& lam, const ChParams& p,
                         const AnisotropyMatrix& b, const QuadratureConfig& cfg = {});

/// K[i][j] = cov(dist(x_i, x_j)) + noise * 1{i = j}; rows of `points` are sites.
Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& points, const CovarianceModel& model,
                           double noise);

/// C[i][j] = cov(dist(a_i, b_j)).
Eigen::MatrixXd cross_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const CovarianceModel& model);

}  // namespace gprate
