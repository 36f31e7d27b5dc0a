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

#include "gprate/hier.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "gprate/csv.hpp"
#include "gprate/random.hpp"

namespace gprate {

void HierPrior::validate() const {
    if (!(k >= 1.0)) throw DomainError("HierPrior: k must be >= 1");
    if (d < 1) throw DomainError("HierPrior: d must be >= 1");
}

double log_prior_A(double a, const HierPrior& prior) {
    prior.validate();
    if (!(a > 0.0)) throw DomainError("log_prior_A: a must be > 0");
    const double kd = prior.power();
    return std::log(kd) + (kd - 1.0) * std::log(a) - std::pow(a, kd);
}

CovarianceModel model_for_A(const CovarianceModel& tmpl, double a) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("model_for_A: A must be finite and > 0");
    KernelParams k = tmpl.kernel();
    std::visit(
        [a](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MaternParams>) p.phi = 1.0 / a;
            else if constexpr (std::is_same_v<T, ChParams>) p.beta = 1.0 / a;
            else p.c = 1.0 / (a * a);
        },
        k);
    return CovarianceModel(std::move(k), tmpl.anisotropy(), tmpl.quadrature());
}

double A_of_model(const CovarianceModel& m) {
    return std::visit(
        [](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MaternParams>) return 1.0 / p.phi;
            else if constexpr (std::is_same_v<T, ChParams>) return 1.0 / p.beta;
            else return 1.0 / std::sqrt(p.c);
        },
        m.kernel());
}

CovarianceModel hier_prefit(const Dataset& data, const CovarianceModel& tmpl, const HierPrior& prior,
                            MleOptions opts) {
    prior.validate();
    opts.fit_lengthscale = true;
    opts.fit_variance = true;
    opts.log_prior = [prior](const CovarianceModel& m) {
        const double a = A_of_model(m);
        return log_prior_A(a, prior) + std::log(a);
    };
    CovarianceModel start = tmpl;
    const double a0 = std::pow(std::log(2.0), 1.0 / prior.power());
    if (!(std::isfinite(log_prior_A(A_of_model(tmpl), prior)) && A_of_model(tmpl) < 4.0 * a0))
        start = model_for_A(tmpl, a0);
    return mle_fit(data, start, opts).model;
}

std::string hier_template_name(HierTemplate t) {
    switch (t) {
        case HierTemplate::Fixed: return "fixed";
        case HierTemplate::Map: return "map";
        case HierTemplate::MleScaled: return "mle-scaled";
    }
    return "unknown";
}

HierTemplate parse_hier_template(const std::string& name) {
    for (auto t : {HierTemplate::Fixed, HierTemplate::Map, HierTemplate::MleScaled})
        if (hier_template_name(t) == name) return t;
    throw DomainError("unknown hierarchical template '" + name + "' (expected fixed, map or mle-scaled)");
}

HierSetup hier_setup(const Dataset& data, const CovarianceModel& model, const HierPrior& prior,
                     HierTemplate how, const MleOptions& opts) {
    HierSetup s{data, model, 1.0};
    if (how == HierTemplate::Map) {
        s.tmpl = hier_prefit(data, model, prior, opts);
    } else if (how == HierTemplate::MleScaled) {
        MleOptions o = opts;
        o.fit_lengthscale = true;
        o.fit_variance = true;
        o.log_prior = nullptr;
        const CovarianceModel fit = mle_fit(data, model, o).model;
        s.coord_scale = 1.0 / A_of_model(fit);
        s.data.x /= s.coord_scale;
        s.tmpl = model_for_A(fit, 1.0);
    }
    return s;
}

HierChain mh_sample(const Dataset& data, const CovarianceModel& tmpl, const HierPrior& prior,
                    const MhOptions& opts) {
    data.validate();
    prior.validate();
    if (opts.burn_in < 0 || opts.draws < 1) throw DomainError("mh_sample: need burn_in >= 0 and draws >= 1");
    if (!(opts.proposal_sd > 0.0)) throw DomainError("mh_sample: proposal_sd must be > 0");

    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    HierChain chain;
    chain.burn_in = opts.burn_in;
    chain.proposal_sd = opts.proposal_sd;
    chain.tmpl = tmpl;
    chain.samples.reserve(static_cast<std::size_t>(opts.draws));
    chain.log_posteriors.reserve(static_cast<std::size_t>(opts.draws));
    chain.accepted.reserve(static_cast<std::size_t>(opts.draws));

    auto log_target = [&](double log_a) {
        const double a = std::exp(log_a);
        if (!(a > 0.0) || !std::isfinite(a)) return kNegInf;
        try {
            return log_marginal_likelihood(data, model_for_A(tmpl, a)) + log_prior_A(a, prior) + log_a;
        } catch (const NumericalError&) {
            ++chain.failed_evaluations;
            return kNegInf;
        }
    };

    Rng rng(opts.seed);
    double log_a = opts.initial_a > 0.0 ? std::log(opts.initial_a)
                                        : std::log(std::log(2.0)) / prior.power();
    double current = log_target(log_a);
    int proposals = 0, accepted_after_burn = 0;
    const int total = opts.burn_in + opts.draws;
    for (int it = 0; it < total; ++it) {
        const double proposal = log_a + opts.proposal_sd * standard_normal(rng);
        const double u = uniform01(rng);
        ++proposals;
        const double cand = log_target(proposal);
        bool accept = false;
        if (cand > kNegInf) {
            accept = !(current > kNegInf) || std::log(u) < cand - current;
        }
        if (accept) {
            log_a = proposal;
            current = cand;
        }
        if (it >= opts.burn_in) {
            chain.samples.push_back(std::exp(log_a));
            chain.log_posteriors.push_back(current);
            chain.accepted.push_back(accept ? 1 : 0);
            if (accept) ++accepted_after_burn;
        }
    }
    if (2 * chain.failed_evaluations > proposals) {
        std::ostringstream os;
        os << "mh_sample: " << chain.failed_evaluations << " of " << proposals
           << " likelihood evaluations failed (non positive definite); aborting";
        throw NumericalError(os.str());
    }
    chain.acceptance_rate = static_cast<double>(accepted_after_burn) / opts.draws;
    return chain;
}

double mixture_quantile(const std::vector<double>& means, const std::vector<double>& sds, double p) {
    if (means.empty() || means.size() != sds.size()) throw DomainError("mixture_quantile: bad mixture");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("mixture_quantile: p must lie in (0, 1)");
    const double z = normal_quantile(p);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    // The mixture quantile lies between the smallest and largest component quantiles.
    for (std::size_t i = 0; i < means.size(); ++i) {
        lo = std::min(lo, means[i] + z * sds[i]);
        hi = std::max(hi, means[i] + z * sds[i]);
    }
    auto cdf = [&](double y) {
        double s = 0.0;
        for (std::size_t i = 0; i < means.size(); ++i)
            s += sds[i] > 0.0 ? normal_cdf((y - means[i]) / sds[i]) : (y >= means[i] ? 1.0 : 0.0);
        return s / static_cast<double>(means.size());
    };
    lo -= 1e-6;
    hi += 1e-6;
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<HierPrediction> hier_predict(const HierChain& chain, const Dataset& data,
                                         const Eigen::MatrixXd& xstar, int thin, double level) {
    if (chain.samples.empty()) throw DomainError("hier_predict: empty chain");
    if (thin < 1) throw DomainError("hier_predict: thin must be >= 1");
    if (static_cast<std::size_t>(thin) >= chain.samples.size())
        throw DomainError("hier_predict: thin must be smaller than the chain length");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("hier_predict: level must be in (0, 1)");

    const auto m = static_cast<std::size_t>(xstar.rows());
    std::vector<std::vector<double>> means(m), sds(m), vars(m);
    // Rejected proposals repeat A; fit each distinct value once.
    std::map<double, std::vector<Prediction>> cache;
    for (std::size_t s = 0; s < chain.samples.size(); s += static_cast<std::size_t>(thin)) {
        const double a = chain.samples[s];
        auto it = cache.find(a);
        if (it == cache.end()) {
            const GpPosterior post(data, model_for_A(chain.tmpl, a));
            it = cache.emplace(a, post.predict_many(xstar)).first;
        }
        for (std::size_t j = 0; j < m; ++j) {
            means[j].push_back(it->second[j].mean);
            vars[j].push_back(it->second[j].var);
            sds[j].push_back(std::sqrt(it->second[j].var + data.omega));
        }
    }

    std::vector<HierPrediction> out(m);
    const double tail = 0.5 * (1.0 - level);
    for (std::size_t j = 0; j < m; ++j) {
        const double count = static_cast<double>(means[j].size());
        double mean = 0.0, within = 0.0;
        for (std::size_t i = 0; i < means[j].size(); ++i) {
            mean += means[j][i];
            within += vars[j][i];
        }
        mean /= count;
        within /= count;
        double between = 0.0;
        for (double mu : means[j]) between += (mu - mean) * (mu - mean);
        between /= count;
        out[j].mean = mean;
        out[j].var = within + between;
        out[j].interval = {mixture_quantile(means[j], sds[j], tail),
                           mixture_quantile(means[j], sds[j], 1.0 - tail)};
    }
    return out;
}

HierPrediction hier_predict(const HierChain& chain, const Dataset& data,
                            const Eigen::Ref<const Eigen::VectorXd>& xstar, int thin, double level) {
    const Eigen::MatrixXd xs = xstar.transpose();
    return hier_predict(chain, data, xs, thin, level).front();
}

void write_chain_csv(std::ostream& os, const HierChain& chain) {
    os << "iteration,A,log_posterior,accepted\n";
    for (std::size_t i = 0; i < chain.samples.size(); ++i) {
        os << chain.burn_in + static_cast<long>(i) << ',' << format_double(chain.samples[i]) << ','
           << format_double(chain.log_posteriors[i]) << ',' << int(chain.accepted[i]) << '\n';
    }
}

}  // namespace gprate
