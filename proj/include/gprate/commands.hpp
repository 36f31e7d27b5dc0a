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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "gprate/config.hpp"

namespace gprate {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3 };

/// Output files of one command: name relative to the output directory -> content.
using OutputFiles = std::map<std::string, std::string>;

/// Replicate-level metrics of the configured scenario:
/// metrics.csv, summary.txt, cvg.csv, mspe.csv, alci.csv.
OutputFiles cmd_simulate(const RunConfig& cfg);

/// Fits the model (fixed, mle or rescaled) to the data set or to replicate 0
/// of the scenario: summary.txt, model.json.
OutputFiles cmd_fit(const RunConfig& cfg);

/// Predictions at the test sites (CSV path, data.file.test_path, or the
/// held-out sites of scenario replicate 0): predictions.csv, summary.txt.
OutputFiles cmd_predict(const RunConfig& cfg, const std::optional<std::filesystem::path>& test);

/// Metropolis-Hastings chain for A plus predictive mixture at the test sites:
/// chain.csv, predictions.csv, summary.txt.
OutputFiles cmd_hier(const RunConfig& cfg, const std::optional<std::filesystem::path>& test);

/// Empirical contraction rate of the rescaled schedule (and any compared
/// schedules): rate.csv, rate_<name>.csv, summary.txt.
OutputFiles cmd_rate(const RunConfig& cfg);

/// Writes every file atomically under `dir`.
void write_outputs(const std::filesystem::path& dir, const OutputFiles& files);

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output;
    std::optional<int> threads;
    std::optional<std::filesystem::path> test;
};

/// Loads the config, applies overrides, runs `command` and writes its
/// outputs. Errors are reported on `err`; the return value is an ExitCode.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

}  // namespace gprate
