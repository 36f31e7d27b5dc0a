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
#include <limits>
#include <stdexcept>
#include <string>

namespace gprate {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a numerical procedure cannot reach its target accuracy, or a
/// result would overflow. Carries the achieved error estimate when one exists.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what,
                            double achieved_error = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), achieved_error_(achieved_error) {}

    double achieved_error() const noexcept { return achieved_error_; }

private:
    double achieved_error_;
};

/// Accuracy policy for adaptive quadrature.
struct QuadratureConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 2048;

    void validate() const;
};

/// Result of an adaptive integration.
struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval [a, b]. Throws
/// NumericalError when the error target is not met within max_subdivisions.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& cfg = {});

/// Same as integrate() on [a, inf), via the map t = a + s / (1 - s).
QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       const QuadratureConfig& cfg = {});

/// Modified Bessel function of the second kind K_v(x), x > 0.
///
/// Base orders |mu| <= 1/2 come from Temme's series (x <= 2) or Steed's
/// continued fraction (x > 2); higher orders use the forward recurrence,
/// carried in log space so the log form never overflows. bessel_k() throws
/// NumericalError when the value exceeds the double range.
double bessel_k(double v, double x);
double log_bessel_k(double v, double x);

/// Confluent hypergeometric function of the second kind in its integral form
///   U(a, b, c) = 1/Gamma(a) * int_0^inf exp(-c t) t^(a-1) (1+t)^(b-a-1) dt
/// for a > 0, c > 0.
double hyper_u(double a, double b, double c, const QuadratureConfig& cfg = {});

/// log U(a, b, c); finite where U itself underflows.
double log_hyper_u(double a, double b, double c, const QuadratureConfig& cfg = {});

/// log Gamma(x) for x > 0. Thread-safe (does not touch signgam).
double ln_gamma(double x);

/// exp(ln_gamma(a) - ln_gamma(b)).
double gamma_ratio(double a, double b);

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
double reg_lower_gamma(double a, double x);

/// Standard normal quantile.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace gprate
