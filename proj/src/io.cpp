#include "ptl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace ptl {

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (text == "nan" || text == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (text == "inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw IoError("not a number: '" + std::string(text) + "'");
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

DataSetXd read_dataset_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header.front() != "y")
        throw IoError(path.string() + ": first header column must be 'y'");
    const std::size_t width = header.size();
    if (width < 2) throw IoError(path.string() + ": no covariate columns");

    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != width)
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width)
                          + " fields, found " + std::to_string(cells.size()));
        for (const auto& c : cells) {
            try {
                values.push_back(parse_double(c));
            } catch (const IoError& e) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        ++rows;
    }
    if (rows == 0) throw IoError(path.string() + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows);
    const auto p = static_cast<Eigen::Index>(width - 1);
    DataSetXd out;
    out.X.resize(n, p);
    out.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double* row = values.data() + static_cast<std::size_t>(i) * width;
        out.y(i) = row[0];
        for (Eigen::Index j = 0; j < p; ++j) out.X(i, j) = row[j + 1];
    }
    try {
        validate(out, path.string());
    } catch (const InvalidArgument& e) {
        throw IoError(e.what());
    }
    return out;
}

void write_dataset_csv(const DataSetXd& data, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << 'y';
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.y(i));
        for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << format_double(data.X(i, j));
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace ptl
