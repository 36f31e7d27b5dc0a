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

#include "gprate/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace gprate {

NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const Eigen::Index dim = x0.size();
    NelderMeadResult res{x0, kInf, 0, false};
    if (opts.max_evaluations <= 0 || dim == 0) return res;

    auto eval = [&](const Eigen::VectorXd& x) {
        ++res.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };

    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(dim + 1), x0);
    std::vector<double> vals(pts.size(), kInf);
    vals[0] = eval(pts[0]);
    for (Eigen::Index i = 0; i < dim && res.evaluations < opts.max_evaluations; ++i) {
        pts[static_cast<std::size_t>(i + 1)](i) += opts.initial_step;
        vals[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
    }

    std::vector<std::size_t> order(pts.size());
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        std::vector<Eigen::VectorXd> p2;
        std::vector<double> v2;
        for (auto i : order) {
            p2.push_back(pts[i]);
            v2.push_back(vals[i]);
        }
        pts.swap(p2);
        vals.swap(v2);
    };

    while (res.evaluations < opts.max_evaluations) {
        sort_simplex();
        const std::size_t worst = pts.size() - 1;
        double spread = 0.0;
        for (std::size_t i = 1; i < pts.size(); ++i)
            spread = std::max(spread, (pts[i] - pts[0]).cwiseAbs().maxCoeff());
        if (std::isfinite(vals[worst]) &&
            std::abs(vals[worst] - vals[0]) <= opts.ftol * (std::abs(vals[0]) + opts.ftol) &&
            spread <= opts.xtol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < worst; ++i) centroid += pts[i];
        centroid /= static_cast<double>(worst);

        const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
        const double fr = eval(reflected);
        if (fr < vals[0]) {
            if (res.evaluations >= opts.max_evaluations) {
                pts[worst] = reflected;
                vals[worst] = fr;
                break;
            }
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(expanded);
            if (fe < fr) {
                pts[worst] = expanded;
                vals[worst] = fe;
            } else {
                pts[worst] = reflected;
                vals[worst] = fr;
            }
            continue;
        }
        if (fr < vals[worst - 1]) {
            pts[worst] = reflected;
            vals[worst] = fr;
            continue;
        }
        if (res.evaluations >= opts.max_evaluations) break;
        const bool outside = fr < vals[worst];
        const Eigen::VectorXd contracted =
            outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                    : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
        const double fc = eval(contracted);
        if (fc < std::min(fr, vals[worst])) {
            pts[worst] = contracted;
            vals[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 1; i < pts.size() && res.evaluations < opts.max_evaluations; ++i) {
            pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
            vals[i] = eval(pts[i]);
        }
    }
    sort_simplex();
    res.x = pts[0];
    res.value = vals[0];
    return res;
}

}  // namespace gprate
