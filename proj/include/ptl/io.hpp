#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ptl/core_data.hpp"

namespace ptl {

/// Reads a dataset CSV: a header row whose first column is `y`, then one
/// numeric row per observation. Ragged rows and non-numeric cells throw IoError.
DataSetXd read_dataset_csv(const std::filesystem::path& path);

void write_dataset_csv(const DataSetXd& data, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

} // namespace ptl
