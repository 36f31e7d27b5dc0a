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

#include "gprate/covariance.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace gprate {

namespace {

constexpr double kZeroLag = 1e-14;

void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream os;
        os << what << " must be finite and > 0 (got " << value << ")";
        throw DomainError(os.str());
    }
}

double clamp_lag(double h) {
    if (!(h >= 0.0)) throw DomainError("covariance: lag distance must be >= 0");
    return h < kZeroLag ? 0.0 : h;
}

// int_0^inf g(u) u^(alpha-1) e^(-u) / Gamma(alpha) du, i.e. E[g(U)] for U ~ Gamma(alpha, 1).
double gamma_expectation(double alpha, const std::function<double(double)>& g,
                         const QuadratureConfig& cfg) {
    const double lga = ln_gamma(alpha);
    if (alpha >= 1.0) {
        auto f = [&](double u) {
            if (u <= 0.0) return alpha == 1.0 ? g(0.0) * std::exp(-lga) : 0.0;
            const double w = std::exp((alpha - 1.0) * std::log(u) - u - lga);
            return w == 0.0 ? 0.0 : w * g(u);
        };
        return integrate_to_infinity(f, 0.0, cfg).value;
    }
    // u = s^(1/alpha): u^(alpha-1) du = ds / alpha
    auto f = [&](double s) {
        const double u = std::pow(s, 1.0 / alpha);
        const double w = std::exp(-u - lga) / alpha;
        return w == 0.0 ? 0.0 : w * g(u);
    };
    return integrate_to_infinity(f, 0.0, cfg).value;
}

double log_matern_spectral_kernel(double kappa2, double lam2, double v, double d) {
    // kappa^(2v) / (kappa^2 + lam^2)^(v + d/2)
    return v * std::log(kappa2) - (v + 0.5 * d) * std::log(kappa2 + lam2);
}

double matern_spectral_const(double v, double sigma2, double d) {
    return std::log(sigma2) + ln_gamma(v + 0.5 * d) - ln_gamma(v) -
           0.5 * d * std::log(std::numbers::pi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

void MaternParams::validate() const {
    require_positive(v, "Matern smoothness v");
    require_positive(phi, "Matern lengthscale phi");
    require_positive(sigma2, "Matern variance sigma2");
}

void ChParams::validate() const {
    require_positive(v, "CH smoothness v");
    require_positive(alpha, "CH tail parameter alpha");
    require_positive(beta, "CH lengthscale beta");
    require_positive(sigma2, "CH variance sigma2");
}

void SqExpParams::validate() const {
    require_positive(c, "squared-exponential scale c");
    require_positive(sigma2, "squared-exponential variance sigma2");
}

AnisotropyMatrix::AnisotropyMatrix(Eigen::MatrixXd b) : b_(std::move(b)) {
    if (b_.rows() == 0 || b_.rows() != b_.cols())
        throw DomainError("AnisotropyMatrix: B must be square and non-empty");
    if (!b_.allFinite()) throw DomainError("AnisotropyMatrix: B has non-finite entries");
    const double scale = std::max(1.0, b_.cwiseAbs().maxCoeff());
    if ((b_ - b_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw DomainError("AnisotropyMatrix: B is not symmetric");
    b_ = 0.5 * (b_ + b_.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b_, Eigen::EigenvaluesOnly);
    lambda_min_ = eig.eigenvalues().minCoeff();
    lambda_max_ = eig.eigenvalues().maxCoeff();
    if (!(lambda_min_ > 0.0)) throw DomainError("AnisotropyMatrix: B is not positive definite");
    det_ = eig.eigenvalues().prod();
    llt_.compute(b_);
}

double AnisotropyMatrix::inverse_quadratic_form(const Eigen::VectorXd& lam) const {
    if (lam.size() != b_.rows()) throw DomainError("AnisotropyMatrix: dimension mismatch");
    return lam.dot(llt_.solve(lam));
}

AnisotropyMatrix AnisotropyMatrix::with_lambda_max(double target) const {
    require_positive(target, "target lambda_max");
    return AnisotropyMatrix(b_ * (target / lambda_max_));
}

std::string family_name(Family f) {
    switch (f) {
        case Family::Matern: return "matern";
        case Family::CH: return "ch";
        case Family::SqExp: return "sqexp";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    if (name == "matern") return Family::Matern;
    if (name == "ch") return Family::CH;
    if (name == "sqexp") return Family::SqExp;
    throw DomainError("unknown covariance family '" + name + "' (expected matern, ch or sqexp)");
}

// ---------------------------------------------------------------------------
// Kernels

double matern_cov(double h, const MaternParams& p) {
    p.validate();
    h = clamp_lag(h);
    if (h == 0.0) return p.sigma2;
    const double x = std::sqrt(2.0 * p.v) * h / p.phi;
    const double lg = std::log(p.sigma2) + (1.0 - p.v) * std::numbers::ln2 - ln_gamma(p.v) +
                      p.v * std::log(x) + log_bessel_k(p.v, x);
    return std::exp(lg);
}

double ch_cov(double h, const ChParams& p, const QuadratureConfig& cfg) {
    p.validate();
    h = clamp_lag(h);
    if (h == 0.0) return p.sigma2;
    const double z = p.v * (h / p.beta) * (h / p.beta);
    return p.sigma2 * std::exp(ln_gamma(p.v + p.alpha) - ln_gamma(p.v) +
                              log_hyper_u(p.alpha, 1.0 - p.v, z, cfg));
}

double sqexp_cov(double h, const SqExpParams& p) {
    p.validate();
    h = clamp_lag(h);
    return p.sigma2 * std::exp(-h * h / p.c);
}

double ch_mixture_oracle(double h, const ChParams& p, const QuadratureConfig& cfg) {
    p.validate();
    h = clamp_lag(h);
    // phi^2 ~ IG(alpha, beta^2/2)  <=>  u = beta^2 / (2 phi^2) ~ Gamma(alpha, 1)
    MaternParams m{p.v, 1.0, p.sigma2};
    auto g = [&](double u) {
        if (h == 0.0) return p.sigma2;
        if (u <= 0.0) return p.sigma2;
        m.phi = p.beta / std::sqrt(2.0 * u);
        return matern_cov(h, m);
    };
    return gamma_expectation(p.alpha, g, cfg);
}

double aniso_distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                      const Eigen::Ref<const Eigen::VectorXd>& y, const AnisotropyMatrix& b) {
    if (x.size() != y.size() || x.size() != b.dim())
        throw DomainError("aniso_distance: dimension mismatch");
    const Eigen::VectorXd diff = x - y;
    const double q = diff.dot(b.matrix() * diff);
    return q > 0.0 ? std::sqrt(q) : 0.0;
}

double matern_spectral(double lam, const MaternParams& p, int d) {
    p.validate();
    if (!(lam >= 0.0)) throw DomainError("matern_spectral: frequency must be >= 0");
    if (d < 1) throw DomainError("matern_spectral: dimension must be >= 1");
    const double kappa2 = 2.0 * p.v / (p.phi * p.phi);
    return std::exp(matern_spectral_const(p.v, p.sigma2, d) +
                    log_matern_spectral_kernel(kappa2, lam * lam, p.v, d));
}

double ch_spectral(double lam, const ChParams& p, int d, const QuadratureConfig& cfg) {
    p.validate();
    if (!(lam >= 0.0)) throw DomainError("ch_spectral: frequency must be >= 0");
    if (d < 1) throw DomainError("ch_spectral: dimension must be >= 1");
    const double c = matern_spectral_const(p.v, p.sigma2, d);
    const double lam2 = lam * lam;
    // kappa^2 = 2v / phi^2 = 4 v u / beta^2 with u ~ Gamma(alpha, 1)
    auto g = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double kappa2 = 4.0 * p.v * u / (p.beta * p.beta);
        return std::exp(c + log_matern_spectral_kernel(kappa2, lam2, p.v, d));
    };
    return gamma_expectation(p.alpha, g, cfg);
}

double aniso_matern_spectral(const Eigen::VectorXd& lam, const MaternParams& p,
                             const AnisotropyMatrix& b) {
    p.validate();
    const int d = b.dim();
    const double q = b.inverse_quadratic_form(lam);
    const double kappa2 = 2.0 * p.v / (p.phi * p.phi);
    return std::exp(matern_spectral_const(p.v, p.sigma2, d) - 0.5 * std::log(b.determinant()) +
                    log_matern_spectral_kernel(kappa2, q, p.v, d));
}

double aniso_ch_spectral(const Eigen::VectorXd& lam, const ChParams& p,
                         const AnisotropyMatrix& b, const QuadratureConfig& cfg) {
    p.validate();
    const double q = b.inverse_quadratic_form(lam);
    return ch_spectral(std::sqrt(q), p, b.dim(), cfg) / std::sqrt(b.determinant());
}

// ---------------------------------------------------------------------------
// Tabulated CH

class ChTable {
public:
    ChTable(double v, double alpha, const QuadratureConfig& cfg) : v_(v), alpha_(alpha), cfg_(cfg) {
        // U(alpha, 1-v, z) - U(alpha, 1-v, 0) = O(z^min(v,1)); below exp(lo_) that is < 1e-13.
        lo_ = std::max(-700.0, -30.0 / std::min(v, 1.0));
        const int n = static_cast<int>(std::ceil((kHi - lo_) / kStep)) + 1;
        std::vector<double> values(n);
        const double log_prefactor = ln_gamma(v + alpha) - ln_gamma(v);
        for (int i = 0; i < n; ++i) {
            const double z = std::exp(lo_ + i * kStep);
            values[i] = log_prefactor + log_hyper_u(alpha, 1.0 - v, z, cfg);
        }
        hi_ = lo_ + (n - 1) * kStep;
        spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
            values.begin(), values.end(), lo_, kStep);
    }

    /// Gamma(v+alpha)/Gamma(v) * U(alpha, 1-v, z)
    double operator()(double z) const {
        if (z <= 0.0) return 1.0;
        const double s = std::log(z);
        if (s < lo_) return 1.0;
        if (s > hi_) {
            return std::exp(ln_gamma(v_ + alpha_) - ln_gamma(v_) +
                            log_hyper_u(alpha_, 1.0 - v_, z, cfg_));
        }
        return std::exp((*spline_)(s));
    }

private:
    static constexpr double kStep = 0.02;
    static constexpr double kHi = 25.0;
    double v_, alpha_;
    QuadratureConfig cfg_;
    double lo_ = 0.0, hi_ = 0.0;
    std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

namespace {

std::shared_ptr<const ChTable> shared_ch_table(double v, double alpha, const QuadratureConfig& cfg) {
    static std::mutex mu;
    static std::map<std::pair<double, double>, std::shared_ptr<const ChTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() > 64) cache.clear();
    auto& slot = cache[{v, alpha}];
    if (!slot) slot = std::make_shared<const ChTable>(v, alpha, cfg);
    return slot;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

CovarianceModel::CovarianceModel(KernelParams kernel, std::optional<AnisotropyMatrix> anisotropy,
                                 QuadratureConfig quad)
    : kernel_(std::move(kernel)), anisotropy_(std::move(anisotropy)), quad_(quad) {
    std::visit([](const auto& p) { p.validate(); }, kernel_);
    quad_.validate();
}

Family CovarianceModel::family() const {
    if (std::holds_alternative<MaternParams>(kernel_)) return Family::Matern;
    if (std::holds_alternative<ChParams>(kernel_)) return Family::CH;
    return Family::SqExp;
}

double CovarianceModel::operator()(double h) const {
    if (const auto* m = std::get_if<MaternParams>(&kernel_)) return matern_cov(h, *m);
    if (const auto* c = std::get_if<ChParams>(&kernel_)) return ch_cov(h, *c, quad_);
    return sqexp_cov(h, std::get<SqExpParams>(kernel_));
}

std::function<double(double)> CovarianceModel::bulk_evaluator() const {
    if (const auto* m = std::get_if<MaternParams>(&kernel_)) {
        const double scale = std::sqrt(2.0 * m->v) / m->phi;
        const double log_const =
            std::log(m->sigma2) + (1.0 - m->v) * std::numbers::ln2 - ln_gamma(m->v);
        return [scale, log_const, p = *m](double h) {
            h = clamp_lag(h);
            if (h == 0.0) return p.sigma2;
            const double x = scale * h;
            return std::exp(log_const + p.v * std::log(x) + log_bessel_k(p.v, x));
        };
    }
    const auto* c = std::get_if<ChParams>(&kernel_);
    if (!c) return [self = *this](double h) { return self(h); };
    auto table = shared_ch_table(c->v, c->alpha, quad_);
    return [table, p = *c](double h) {
        h = clamp_lag(h);
        if (h == 0.0) return p.sigma2;
        const double r = h / p.beta;
        return p.sigma2 * (*table)(p.v * r * r);
    };
}

double CovarianceModel::variance() const {
    return std::visit([](const auto& p) { return p.sigma2; }, kernel_);
}

double CovarianceModel::distance(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y) const {
    if (anisotropy_) return aniso_distance(x, y, *anisotropy_);
    if (x.size() != y.size()) throw DomainError("distance: dimension mismatch");
    return (x - y).norm();
}

CovarianceModel CovarianceModel::with_variance(double sigma2) const {
    KernelParams k = kernel_;
    std::visit([sigma2](auto& p) { p.sigma2 = sigma2; }, k);
    return CovarianceModel(std::move(k), anisotropy_, quad_);
}

// ---------------------------------------------------------------------------
// Matrices

Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& points, const CovarianceModel& model,
                           double noise) {
    const Eigen::Index n = points.rows();
    if (n < 1) throw DomainError("cov_matrix: need at least one point");
    if (!points.allFinite()) throw DomainError("cov_matrix: non-finite coordinates");
    if (!(noise >= 0.0)) throw DomainError("cov_matrix: noise must be >= 0");
    Eigen::MatrixXd k(n, n);
    const double c0 = model.variance();
    const auto cov = model.bulk_evaluator();
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = c0 + noise;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v =
                cov(model.distance(points.row(i).transpose(), points.row(j).transpose()));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    if (!k.allFinite()) throw NumericalError("cov_matrix: non-finite covariance entries");
    return k;
}

Eigen::MatrixXd cross_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const CovarianceModel& model) {
    if (a.cols() != b.cols()) throw DomainError("cross_cov: dimension mismatch");
    Eigen::MatrixXd k(a.rows(), b.rows());
    const auto cov = model.bulk_evaluator();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            k(i, j) = cov(model.distance(a.row(i).transpose(), b.row(j).transpose()));
    if (!k.allFinite()) throw NumericalError("cross_cov: non-finite covariance entries");
    return k;
}

}  // namespace gprate
