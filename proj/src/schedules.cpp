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

#include "gprate/schedules.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gprate/nelder_mead.hpp"

namespace gprate {

namespace {

void require_sample_size(double n) {
    if (!(n >= 2.0) || !std::isfinite(n)) throw DomainError("schedule: sample size n must be >= 2");
}

}  // namespace

void RescalingSchedule::validate() const {
    if (!(eta > 0.0)) throw DomainError("schedule: eta must be > 0");
    if (!(v > 0.0)) throw DomainError("schedule: v must be > 0");
    if (d < 1) throw DomainError("schedule: d must be >= 1");
    if (!(multiplier > 0.0)) throw DomainError("schedule: multiplier must be > 0");
    if (v < eta) {
        std::ostringstream os;
        os << "schedule invalid: v = " << v << " < eta = " << eta
           << " (undersmoothing priors are not covered by the rescaling rule)";
        throw ConditionError(os.str());
    }
    if (family == ScheduleFamily::CH && !(alpha > 0.5 * d + 1.0)) {
        std::ostringstream os;
        os << "CH schedule requires alpha > d/2 + 1 = " << 0.5 * d + 1.0 << " (got " << alpha << ")";
        throw ConditionError(os.str());
    }
}

double RescalingSchedule::exponent() const {
    if (exponent_override) return *exponent_override;
    return (v - eta) / ((2.0 * eta + d) * v);
}

double rescale_matern(double n, const RescalingSchedule& s) {
    require_sample_size(n);
    s.validate();
    return s.multiplier * std::pow(n, -s.exponent());
}

double rescale_ch(double n, const RescalingSchedule& s, double c_alpha,
                  std::vector<std::string>* warnings) {
    require_sample_size(n);
    RescalingSchedule ch = s;
    ch.family = ScheduleFamily::CH;
    ch.validate();
    if (warnings && n > std::exp(1.0)) {
        const double cap = c_alpha * std::sqrt(std::log(std::log(n)));
        if (ch.alpha > cap) {
            std::ostringstream os;
            os << "alpha = " << ch.alpha << " exceeds " << c_alpha << " * sqrt(ln ln n) = " << cap
               << " at n = " << n;
            warnings->push_back(os.str());
        }
    }
    return ch.multiplier * std::pow(n, -ch.exponent());
}

double rescale_aniso(double n, const RescalingSchedule& s) {
    require_sample_size(n);
    s.validate();
    return s.multiplier * std::pow(n, s.exponent());
}

AnisotropyMatrix rescale_aniso_matrix(double n, const RescalingSchedule& s,
                                      const AnisotropyMatrix& unit_b, double ratio_floor) {
    if (!(ratio_floor > 0.0)) throw DomainError("rescale_aniso: ratio floor C must be > 0");
    if (unit_b.eigen_ratio() < ratio_floor) {
        std::ostringstream os;
        os << "anisotropy matrix eigenvalue ratio " << unit_b.eigen_ratio()
           << " is below the required floor " << ratio_floor;
        throw ConditionError(os.str());
    }
    return unit_b.with_lambda_max(rescale_aniso(n, s));
}

double minimax_rate(double n, double eta, int d) {
    if (!(eta > 0.0)) throw DomainError("minimax_rate: eta must be > 0");
    if (d < 1) throw DomainError("minimax_rate: d must be >= 1");
    if (!(n > 0.0)) throw DomainError("minimax_rate: n must be > 0");
    return std::pow(n, -eta / (2.0 * eta + d));
}

HierCheck check_hier_conditions(const HierConfig& cfg, double eta) {
    HierCheck out;
    const double half_d = 0.5 * cfg.d;
    out.v_threshold = (1.0 + half_d) * (eta + half_d);
    if (cfg.v > out.v_threshold) {
        out.k_floor = (cfg.v + half_d) / (cfg.v - out.v_threshold);
    } else {
        out.k_floor = std::numeric_limits<double>::infinity();
        out.violations.push_back({"v > (1 + d/2)(eta + d/2)", cfg.v, out.v_threshold});
    }
    if (!(cfg.k >= out.k_floor))
        out.violations.push_back({"k >= (v + d/2) / (v - (1 + d/2)(eta + d/2))", cfg.k, out.k_floor});
    if (!(cfg.k >= 1.0)) out.violations.push_back({"k >= 1", cfg.k, 1.0});
    out.ok = out.violations.empty();
    return out;
}

// ---------------------------------------------------------------------------
// Maximum likelihood

namespace {

// Free parameters in log space. Order: lengthscale, alpha (CH), sigma2.
struct ParamMap {
    CovarianceModel base;
    MleOptions opts;

    Eigen::VectorXd pack(const CovarianceModel& m) const {
        std::vector<double> v;
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, MaternParams>) {
                    if (opts.fit_lengthscale) v.push_back(std::log(p.phi));
                } else if constexpr (std::is_same_v<T, ChParams>) {
                    if (opts.fit_lengthscale) v.push_back(std::log(p.beta));
                    if (opts.fit_alpha) v.push_back(std::log(p.alpha));
                } else {
                    if (opts.fit_lengthscale) v.push_back(std::log(p.c));
                }
                if (opts.fit_variance) v.push_back(std::log(p.sigma2));
            },
            m.kernel());
        return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    CovarianceModel unpack(const Eigen::VectorXd& x) const {
        KernelParams k = base.kernel();
        Eigen::Index i = 0;
        std::visit(
            [&](auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, MaternParams>) {
                    if (opts.fit_lengthscale) p.phi = std::exp(x(i++));
                } else if constexpr (std::is_same_v<T, ChParams>) {
                    if (opts.fit_lengthscale) p.beta = std::exp(x(i++));
                    if (opts.fit_alpha) p.alpha = std::exp(x(i++));
                } else {
                    if (opts.fit_lengthscale) p.c = std::exp(x(i++));
                }
                if (opts.fit_variance) p.sigma2 = std::exp(x(i++));
            },
            k);
        return CovarianceModel(std::move(k), base.anisotropy(), base.quadrature());
    }
};

}  // namespace

MleResult mle_fit(const Dataset& data, const CovarianceModel& init, const MleOptions& opts) {
    data.validate();
    if (opts.budget < 0) throw DomainError("mle_fit: budget must be >= 0");
    ParamMap map{init, opts};
    const Eigen::VectorXd x0 = map.pack(init);

    MleResult best{init, -std::numeric_limits<double>::infinity(), 0, 0};
    if (opts.budget == 0 || x0.size() == 0) {
        try {
            best.log_likelihood = log_marginal_likelihood(data, init);
            if (opts.log_prior) best.log_likelihood += opts.log_prior(init);
        } catch (const NumericalError&) {
        }
        return best;
    }

    std::vector<std::string> trace;
    auto objective = [&](const Eigen::VectorXd& x) {
        if ((x.array().abs() > 30.0).any()) return std::numeric_limits<double>::infinity();
        try {
            const CovarianceModel m = map.unpack(x);
            const double lp = opts.log_prior ? opts.log_prior(m) : 0.0;
            return -(log_marginal_likelihood(data, m) + lp);
        } catch (const NumericalError& e) {
            ++best.failed_evaluations;
            if (trace.size() < 8) trace.emplace_back(e.what());
            return std::numeric_limits<double>::infinity();
        } catch (const DomainError& e) {
            ++best.failed_evaluations;
            if (trace.size() < 8) trace.emplace_back(e.what());
            return std::numeric_limits<double>::infinity();
        }
    };

    const int starts = 1 + std::max(0, opts.restarts);
    const int per_start = std::max(1, opts.budget / starts);
    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = x0;
    int remaining = opts.budget;
    for (int s = 0; s < starts && remaining > 0; ++s) {
        Eigen::VectorXd start = x0;
        if (s > 0) {
            for (Eigen::Index i = 0; i < start.size(); ++i)
                start(i) += ((s + i) % 2 == 0 ? 1.0 : -1.0) * 0.5 * (1.0 + 0.5 * (s - 1));
        }
        NelderMeadOptions nm;
        nm.max_evaluations = s == 0 ? remaining - per_start * (starts - 1) : per_start;
        nm.max_evaluations = std::min(std::max(nm.max_evaluations, 1), remaining);
        const auto r = nelder_mead_minimize(objective, start, nm);
        remaining -= r.evaluations;
        best.evaluations += r.evaluations;
        if (r.value < best_value) {
            best_value = r.value;
            best_x = r.x;
        }
    }
    if (!std::isfinite(best_value)) {
        std::ostringstream os;
        os << "mle_fit: all " << best.evaluations << " likelihood evaluations failed";
        for (const auto& t : trace) os << "\n  " << t;
        throw NumericalError(os.str());
    }
    best.model = map.unpack(best_x);
    best.log_likelihood = -best_value;
    return best;
}

}  // namespace gprate
