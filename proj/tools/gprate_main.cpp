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

#include <iostream>

#include <CLI11.hpp>

#include "gprate/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gprate: Gaussian-process regression with rescaled and hierarchical priors"};
    app.require_subcommand(1);

    gprate::CommandOptions opts;
    std::string config;
    std::uint64_t seed = 0;
    std::string output, test;
    int threads = 1;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "run the replicate scenario and write metrics.csv, summary.txt and panel CSVs"},
        {"fit", "fit the model and write summary.txt and model.json"},
        {"predict", "predict at test sites and write predictions.csv"},
        {"hier", "sample the inverse lengthscale by Metropolis-Hastings; write chain.csv and predictions.csv"},
        {"rate", "empirical contraction rate of rescaling schedules; write rate.csv"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "seed (overrides the config)");
        sub->add_option("--output", output, "output directory (overrides the config)");
        sub->add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
        if (name == "predict" || name == "hier")
            sub->add_option("--test", test, "CSV of prediction sites (coordinate columns)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gprate::kExitConfig;
    }

    const CLI::App* sub = app.get_subcommands().front();
    opts.config = config;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--output")) opts.output = output;
    if (sub->count("--threads")) opts.threads = threads;
    if (!test.empty()) opts.test = test;
    return gprate::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
