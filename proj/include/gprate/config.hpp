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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gprate/covariance.hpp"
#include "gprate/experiments.hpp"
#include "gprate/hier.hpp"

namespace gprate {

/// Invalid configuration. The message starts with the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& message)
        : std::runtime_error("config key '" + key + "': " + message), key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct ModelConfig {
    Family family = Family::Matern;
    double v = 2.5;
    double phi = 1.0;     // Matern
    double alpha = 2.0;   // CH
    double beta = 1.0;    // CH
    double c = 1.0;       // squared exponential
    double sigma2 = 1.0;
    std::vector<std::vector<double>> anisotropy;  // empty: isotropic
};

struct TruthConfig {
    std::string type = "brownian";  // brownian | gp | zero
    double scale = 100.0;           // brownian
    std::optional<ModelConfig> model;  // gp
};

struct ScenarioSection {
    int d = 1;
    int n_total = 300;
    int n_test = 100;
    int replicates = 30;
    double omega = 1.0;
    double level = 0.95;
    TruthConfig truth;
};

struct FileSection {
    std::string path;
    std::string test_path;  // optional prediction sites
    std::optional<double> omega;
    std::optional<double> center_scale_coords;
    bool scale_response_by_max = false;
};

struct DataSection {
    std::optional<ScenarioSection> scenario;
    std::optional<FileSection> file;
};

struct MethodSection {
    MethodKind kind = MethodKind::MLE;
    // mle, and the pre-fit of rescaled / rescaled-tuned / hier
    int budget = 500;
    int restarts = 3;
    bool fit_alpha = true;
    // rescaled
    double eta = 0.5;
    double multiplier = 1.0;
    std::optional<double> exponent;
    bool fit_variance = false;  // rescaled
    // hier
    double k = 1.0;
    int burn_in = 500;
    int draws = 5000;
    double proposal_sd = 0.5;
    int thin = 10;
    HierTemplate hier_template = HierTemplate::Fixed;
};

struct RateSchedule {
    std::string name;
    std::optional<double> exponent;  // replaces the optimal exponent
    double exponent_factor = 1.0;    // multiplies it otherwise
};

struct RateSection {
    std::vector<int> n_grid;
    int reps_per_n = 20;
    std::vector<RateSchedule> compare;
};

struct RunConfig {
    std::uint64_t seed = 0;
    int threads = 1;
    DataSection data;
    ModelConfig model;
    MethodSection method;
    std::optional<RateSection> rate;
    std::string output = "out";
    std::filesystem::path base_dir;  // directory of the config file; not serialized
};

/// Parses and validates a JSON document. Relative data paths are resolved
/// against `base_dir` and must exist when `check_files` is set.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {},
                           bool check_files = true);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON with every field explicit. parse(serialize(c)) == c.
std::string serialize_run_config(const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

CovarianceModel build_model(const ModelConfig& m);
ModelConfig model_config_of(const CovarianceModel& m);
RescalingSchedule build_schedule(const RunConfig& cfg);

/// Method of the config for data of dimension d.
MethodSpec build_method(const RunConfig& cfg, int d);

/// Scenario for a config whose data section is a scenario.
ScenarioConfig build_scenario(const RunConfig& cfg);

std::filesystem::path resolve_path(const RunConfig& cfg, const std::string& p);

}  // namespace gprate
