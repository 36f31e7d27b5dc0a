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

#include "gprate/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace gprate {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

// One Gauss-Kronrod 7/15 panel with the QUADPACK error heuristic.
Segment gk15(const std::function<double(double)>& f, double a, double b) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    static const auto& xk = GK::abscissa();
    static const auto& wk = GK::weights();
    static const auto& wg = boost::math::quadrature::gauss<double, 7>::weights();

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    std::array<double, 15> fv{};
    // xk[0] is the center; the center and xk[even] are shared with the 7-point Gauss rule.
    fv[0] = f(center);
    for (std::size_t i = 1; i < xk.size(); ++i) {
        fv[2 * i - 1] = f(center - half * xk[i]);
        fv[2 * i] = f(center + half * xk[i]);
    }

    double kron = wk[0] * fv[0];
    double gauss = wg[0] * fv[0];
    double resabs = std::abs(kron);
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const double s = fv[2 * i - 1] + fv[2 * i];
        kron += wk[i] * s;
        resabs += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
        if (i % 2 == 0) gauss += wg[i / 2] * s;
    }
    const double mean = 0.5 * kron;
    double resasc = wk[0] * std::abs(fv[0] - mean);
    for (std::size_t i = 1; i < xk.size(); ++i)
        resasc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));

    kron *= half;
    gauss *= half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);

    double err = std::abs(kron - gauss);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
        err = std::max(50.0 * kEps * resabs, err);
    return {a, b, kron, err};
}

// 1/Gamma(1+z) Taylor coefficients about 0; enough terms for |z| <= 1/2.
constexpr std::array<double, 21> kRecipGamma1p = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
};

struct TemmeGammas {
    double gam1;   // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;   // (1/G(1-mu) + 1/G(1+mu)) / 2
    double gampl;  // 1/G(1+mu)
    double gammi;  // 1/G(1-mu)
};

TemmeGammas temme_gammas(double mu) {
    double even = 0.0, odd = 0.0;
    const double mu2 = mu * mu;
    double p = 1.0;
    for (std::size_t k = 0; k < kRecipGamma1p.size(); k += 2) {
        even += kRecipGamma1p[k] * p;
        if (k + 1 < kRecipGamma1p.size()) odd += kRecipGamma1p[k + 1] * p;
        p *= mu2;
    }
    // f(mu) = even + mu*odd, f(-mu) = even - mu*odd
    return {-odd, even, even + mu * odd, even - mu * odd};
}

// Returns (log K_mu(x), K_{mu+1}(x) / K_mu(x)) for |mu| <= 1/2.
std::pair<double, double> bessel_k_base(double mu, double x) {
    constexpr int kMaxIter = 10000;
    const double mu2 = mu * mu;
    if (x <= 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * mu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        const double d = -std::log(x2);
        const double e = mu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        const TemmeGammas g = temme_gammas(mu);
        double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
        double sum = ff;
        const double ee = std::exp(e);
        double p = 0.5 * ee / g.gampl;
        double q = 0.5 / (ee * g.gammi);
        double c = 1.0;
        const double dd = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= kMaxIter; ++i) {
            ff = (i * ff + p + q) / (i * i - mu2);
            c *= dd / i;
            p /= (i - mu);
            q /= (i + mu);
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        if (i > kMaxIter) throw NumericalError("bessel_k: Temme series did not converge");
        // K_mu = sum, K_{mu+1} = sum1 * 2/x
        return {std::log(sum), sum1 * 2.0 / x / sum};
    }

    // Steed's continued fraction, Temme normalization.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= kMaxIter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) break;
    }
    if (i > kMaxIter) throw NumericalError("bessel_k: continued fraction did not converge");
    h = a1 * h;
    const double log_kmu = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s);
    return {log_kmu, (mu + x + 0.5 - h) / x};
}

}  // namespace

void QuadratureConfig::validate() const {
    if (!(rel_tol > 0.0)) throw DomainError("QuadratureConfig: rel_tol must be > 0");
    if (!(abs_tol >= 0.0)) throw DomainError("QuadratureConfig: abs_tol must be >= 0");
    if (max_subdivisions < 16) throw DomainError("QuadratureConfig: max_subdivisions must be >= 16");
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& cfg) {
    cfg.validate();
    if (a == b) return {};
    std::priority_queue<Segment> heap;
    Segment first = gk15(f, a, b);
    double total = first.value, err = first.error;
    heap.push(first);
    int subdivisions = 1;
    while (err > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total))) {
        if (!std::isfinite(total) || !std::isfinite(err))
            throw NumericalError("integrate: non-finite integrand", err);
        if (subdivisions >= cfg.max_subdivisions) {
            std::ostringstream os;
            os << "integrate: no convergence after " << subdivisions
               << " subdivisions (estimate " << total << ", error " << err << ")";
            throw NumericalError(os.str(), err);
        }
        const Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = gk15(f, worst.a, mid);
        const Segment right = gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }
    // Resum to shed the drift of the running updates.
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {total, err, subdivisions};
}

QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       const QuadratureConfig& cfg) {
    auto mapped = [&](double s) {
        const double one_minus = 1.0 - s;
        const double t = a + s / one_minus;
        const double v = f(t);
        return v == 0.0 ? 0.0 : v / (one_minus * one_minus);
    };
    return integrate(mapped, 0.0, 1.0, cfg);
}

double log_bessel_k(double v, double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("bessel_k: argument must be > 0");
    if (!std::isfinite(v)) throw DomainError("bessel_k: order must be finite");
    v = std::abs(v);
    const int nl = static_cast<int>(std::floor(v + 0.5));
    const double mu = v - nl;
    auto [log_k, ratio] = bessel_k_base(mu, x);
    // ratio r_i = K_{mu+i+1} / K_{mu+i}; r_i = 2(mu+i)/x + 1/r_{i-1}
    for (int i = 1; i <= nl; ++i) {
        log_k += std::log(ratio);
        ratio = 2.0 * (mu + i) / x + 1.0 / ratio;
    }
    return log_k;
}

double bessel_k(double v, double x) {
    const double lk = log_bessel_k(v, x);
    if (lk > std::log(std::numeric_limits<double>::max())) {
        std::ostringstream os;
        os << "bessel_k: magnitude overflow for order " << v << " at x = " << x
           << " (log value " << lk << ")";
        throw NumericalError(os.str());
    }
    return std::exp(lk);
}

namespace {

// log of the integral of exp(e(x)) over [0, inf), shifted by a coarse maximum of e.
double log_integral_exp(const std::function<double(double)>& e, const QuadratureConfig& cfg) {
    double m = -std::numeric_limits<double>::infinity();
    for (double lx = -12.0; lx <= 4.0; lx += 0.25) {
        const double v = e(std::pow(10.0, lx));
        if (std::isfinite(v)) m = std::max(m, v);
    }
    if (!std::isfinite(m)) throw NumericalError("hyper_u: integrand vanishes");
    auto f = [&](double x) {
        const double v = e(x);
        return std::isnan(v) ? 0.0 : std::exp(v - m);
    };
    const double r = integrate_to_infinity(f, 0.0, cfg).value;
    if (!(r > 0.0) || !std::isfinite(r)) throw NumericalError("hyper_u: quadrature failed");
    return m + std::log(r);
}

}  // namespace

double log_hyper_u(double a, double b, double c, const QuadratureConfig& cfg) {
    if (!(a > 0.0)) throw DomainError("hyper_u: a must be > 0");
    if (!(c > 0.0)) throw DomainError("hyper_u: c must be > 0");
    if (!std::isfinite(b)) throw DomainError("hyper_u: b must be finite");
    cfg.validate();
    const double lga = ln_gamma(a);
    const double inf = std::numeric_limits<double>::infinity();
    if (c >= 1.0) {
        // t = s / c: U = c^-a / Gamma(a) * int e^-s s^(a-1) (1 + s/c)^(b-a-1) ds
        if (a < 1.0) {
            // s = w^(1/a), s^(a-1) ds = dw / a
            auto e = [&](double w) {
                if (w <= 0.0) return -std::log(a);
                const double x = std::pow(w, 1.0 / a);
                return -x + (b - a - 1.0) * std::log1p(x / c) - std::log(a);
            };
            return -a * std::log(c) - lga + log_integral_exp(e, cfg);
        }
        auto e = [&](double x) {
            if (x <= 0.0) return a == 1.0 ? 0.0 : -inf;
            return -x + (a - 1.0) * std::log(x) + (b - a - 1.0) * std::log1p(x / c);
        };
        return -a * std::log(c) - lga + log_integral_exp(e, cfg);
    }
    // t = e^u - 1: exp(-c(e^u - 1) + (a-1) log(e^u - 1) + (b-a) u)
    if (a < 1.0) {
        // u = s^(1/a); u^(a-1) du = ds / a
        auto e = [&](double s) {
            if (s <= 0.0) return -std::log(a);
            const double u = std::pow(s, 1.0 / a);
            const double t = std::expm1(u);
            if (!std::isfinite(t)) return -inf;
            return -c * t + (a - 1.0) * std::log(t / u) + (b - a) * u - std::log(a);
        };
        return -lga + log_integral_exp(e, cfg);
    }
    auto e = [&](double u) {
        if (u <= 0.0) return a == 1.0 ? 0.0 : -inf;
        const double t = std::expm1(u);
        if (!std::isfinite(t)) return -inf;
        return -c * t + (a - 1.0) * std::log(t) + (b - a) * u;
    };
    return -lga + log_integral_exp(e, cfg);
}

double hyper_u(double a, double b, double c, const QuadratureConfig& cfg) {
    return std::exp(log_hyper_u(a, b, c, cfg));
}

double ln_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("ln_gamma: argument must be > 0");
    return boost::math::lgamma(x);
}

double gamma_ratio(double a, double b) { return std::exp(ln_gamma(a) - ln_gamma(b)); }

double reg_lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw DomainError("reg_lower_gamma: a must be > 0");
    if (!(x >= 0.0)) throw DomainError("reg_lower_gamma: x must be >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return boost::math::gamma_p(a, x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double x) {
    return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

}  // namespace gprate
