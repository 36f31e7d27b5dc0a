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

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gprate/gp.hpp"

namespace gprate {

/// Malformed input file; the message names the file and line.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

struct CsvPreprocess {
    std::optional<double> center_scale_coords;  // x -> factor * (x - mean(x))
    bool scale_response_by_max = false;         // y -> y / max|y|
};

/// The affine maps applied by ingest_csv, kept so predictions can be mapped
/// back to the original units.
struct CsvTransform {
    Eigen::VectorXd coord_mean;   // empty when coordinates were not transformed
    double coord_factor = 1.0;
    double response_scale = 1.0;  // y_model = y_raw / response_scale

    Eigen::MatrixXd apply_coords(const Eigen::MatrixXd& x) const;
    double response_to_raw(double y_model) const { return y_model * response_scale; }
};

struct IngestedCsv {
    Dataset data;
    CsvTransform transform;
    std::vector<std::string> coord_names;
    bool omega_from_file = false;
};

/// Reads a UTF-8 comma-separated file with a mandatory header naming the
/// coordinate columns (x1..xd or any names), the response column `y`, and
/// optionally an `omega` column whose first value overrides `omega`.
IngestedCsv ingest_csv(const std::filesystem::path& path, const CsvPreprocess& pre, double omega,
                       std::size_t min_rows = 2);

/// Coordinates only (for prediction sites); `y`/`omega` columns are ignored.
Eigen::MatrixXd read_coordinates_csv(const std::filesystem::path& path,
                                     const std::vector<std::string>& coord_names);

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Convenience estimate of omega from pairs of (near-)duplicate design points:
/// half the mean squared response difference over pairs closer than `radius`.
/// Returns nullopt when no such pairs exist. Not part of the fitted model.
std::optional<double> estimate_noise_from_duplicates(const Dataset& data, double radius);

}  // namespace gprate
