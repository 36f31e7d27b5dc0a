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

#include "gprate/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gprate {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line,
                  const std::string& column) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last)
        throw InputError(where(path, line) + ": column '" + column + "' is not a number: '" + cell + "'");
    if (!std::isfinite(v))
        throw InputError(where(path, line) + ": column '" + column + "' is not finite");
    return v;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    RawTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
            line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto cells = split_row(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            std::ostringstream os;
            os << where(path, lineno) << ": expected " << t.header.size() << " columns, found "
               << cells.size();
            throw InputError(os.str());
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row.push_back(parse_cell(cells[c], path, lineno, t.header[c]));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw InputError(path.string() + ": missing header row");
    return t;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

Eigen::MatrixXd CsvTransform::apply_coords(const Eigen::MatrixXd& x) const {
    if (coord_mean.size() == 0) return x;
    if (coord_mean.size() != x.cols()) throw DomainError("CsvTransform: dimension mismatch");
    return coord_factor * (x.rowwise() - coord_mean.transpose());
}

IngestedCsv ingest_csv(const std::filesystem::path& path, const CsvPreprocess& pre, double omega,
                       std::size_t min_rows) {
    const RawTable t = read_table(path);
    IngestedCsv out;
    int y_col = -1, omega_col = -1;
    std::vector<int> coord_cols;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.header[c] == "y") y_col = static_cast<int>(c);
        else if (t.header[c] == "omega") omega_col = static_cast<int>(c);
        else {
            coord_cols.push_back(static_cast<int>(c));
            out.coord_names.push_back(t.header[c]);
        }
    }
    if (y_col < 0) throw InputError(where(path, 1) + ": header has no 'y' column");
    if (coord_cols.empty()) throw InputError(where(path, 1) + ": header has no coordinate columns");
    if (t.rows.size() < min_rows) {
        std::ostringstream os;
        os << path.string() << ": need at least " << min_rows << " data rows, found " << t.rows.size();
        throw InputError(os.str());
    }

    const auto n = static_cast<Eigen::Index>(t.rows.size());
    const auto d = static_cast<Eigen::Index>(coord_cols.size());
    Dataset& data = out.data;
    data.x.resize(n, d);
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = row[static_cast<std::size_t>(coord_cols[j])];
        data.y(i) = row[static_cast<std::size_t>(y_col)];
    }
    data.omega = omega;
    if (omega_col >= 0 && n > 0) {
        data.omega = t.rows.front()[static_cast<std::size_t>(omega_col)];
        out.omega_from_file = true;
    }

    if (pre.center_scale_coords) {
        out.transform.coord_mean = data.x.colwise().mean().transpose();
        out.transform.coord_factor = *pre.center_scale_coords;
        data.x = out.transform.apply_coords(data.x);
    }
    if (pre.scale_response_by_max && n > 0) {
        const double m = data.y.cwiseAbs().maxCoeff();
        if (m > 0.0) {
            out.transform.response_scale = m;
            data.y /= m;
        }
    }
    return out;
}

Eigen::MatrixXd read_coordinates_csv(const std::filesystem::path& path,
                                     const std::vector<std::string>& coord_names) {
    const RawTable t = read_table(path);
    std::vector<std::size_t> cols;
    for (const auto& name : coord_names) {
        auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end())
            throw InputError(where(path, 1) + ": missing coordinate column '" + name + "'");
        cols.push_back(static_cast<std::size_t>(it - t.header.begin()));
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][cols[j]];
    return x;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::optional<double> estimate_noise_from_duplicates(const Dataset& data, double radius) {
    double sum = 0.0;
    std::size_t pairs = 0;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if ((data.x.row(i) - data.x.row(j)).norm() <= radius) {
                const double diff = data.y(i) - data.y(j);
                sum += diff * diff;
                ++pairs;
            }
    if (pairs == 0) return std::nullopt;
    return 0.5 * sum / static_cast<double>(pairs);
}

}  // namespace gprate
