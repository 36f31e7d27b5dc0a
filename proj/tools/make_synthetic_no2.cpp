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

// Writes the synthetic NO2 stand-in: one draw of a CH random field plus
// Gaussian noise at uniform sites in a 100 x 100 km square. Not real data.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "gprate/covariance.hpp"
#include "gprate/csv.hpp"
#include "gprate/experiments.hpp"
#include "gprate/random.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate the synthetic NO2 stand-in dataset"};
    std::string out = "data/no2_synthetic";
    std::uint64_t seed = 2026;
    int n_train = 500, n_test = 100;
    app.add_option("--output", out, "output directory");
    app.add_option("--seed", seed, "seed");
    app.add_option("--train", n_train, "training sites")->check(CLI::Range(2, 3000));
    app.add_option("--test", n_test, "held-out sites")->check(CLI::Range(1, 1000));
    CLI11_PARSE(app, argc, argv);

    constexpr double kMean = 20.0, kOmega = 4.0;
    const gprate::CovarianceModel field(gprate::ChParams{0.5, 3.0, 15.0, 25.0});

    const int n = n_train + n_test;
    std::mt19937_64 rng(gprate::derive_seed(seed, 1));
    std::uniform_real_distribution<double> unif(0.0, 100.0);
    Eigen::MatrixXd sites(n, 2);
    for (int i = 0; i < n; ++i) {
        sites(i, 0) = unif(rng);
        sites(i, 1) = unif(rng);
    }
    const Eigen::VectorXd f = gprate::gen_gp_truth(sites, field, gprate::derive_seed(seed, 2));
    std::mt19937_64 noise(gprate::derive_seed(seed, 3));
    std::normal_distribution<double> eps(0.0, std::sqrt(kOmega));

    auto table = [&](int lo, int hi) {
        std::ostringstream os;
        os << "x_km,y_km,y\n";
        for (int i = lo; i < hi; ++i)
            os << gprate::format_double(sites(i, 0)) << ',' << gprate::format_double(sites(i, 1)) << ','
               << gprate::format_double(kMean + f(i) + eps(noise)) << '\n';
        return os.str();
    };
    const std::filesystem::path dir(out);
    std::filesystem::create_directories(dir);
    gprate::write_file_atomic(dir / "train.csv", table(0, n_train));
    gprate::write_file_atomic(dir / "test.csv", table(n_train, n));
    std::cout << (dir / "train.csv").string() << '\n' << (dir / "test.csv").string() << '\n';
    return 0;
}
