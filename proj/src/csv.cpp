#include "zproc/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "zproc/errors.hpp"

namespace zproc {

namespace {

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no, const std::string& msg) {
    throw InvalidInput(path + ":" + std::to_string(line_no) + ": " + msg);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\r' || *(last - 1) == '\t')) --last;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) {
        parse_fail(path, line_no, "cannot parse number '" + s + "'");
    }
    return value;
}

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ifstream open_or_fail(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open input file '" + path + "'");
    return in;
}

bool looks_numeric(const std::string& s) {
    const std::string t = strip(s);
    if (t.empty()) return false;
    const char c = t[0];
    return (c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.';
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<double> read_scalar_series(const std::string& path) {
    std::ifstream in = open_or_fail(path);
    std::vector<double> xs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = strip(line);
        if (t.empty()) continue;
        if (line_no == 1 && !looks_numeric(t)) {
            if (t != "x") parse_fail(path, line_no, "expected header 'x' or a number, got '" + t + "'");
            continue;
        }
        xs.push_back(parse_double(t, path, line_no));
    }
    if (xs.empty()) throw InvalidInput(path + ": no observations");
    return xs;
}

void write_scalar_series(const std::vector<double>& xs, std::ostream& out) {
    out << "x\n";
    for (double x : xs) out << format_double(x) << '\n';
}

std::vector<double> read_ou_path(const std::string& path) {
    std::ifstream in = open_or_fail(path);
    std::vector<double> xs;
    double prev_t = 0.0;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = strip(line);
        if (t.empty()) continue;
        if (line_no == 1 && !looks_numeric(t)) {
            if (t != "t,x") parse_fail(path, line_no, "expected header 't,x', got '" + t + "'");
            header_seen = true;
            continue;
        }
        const auto fields = split_csv_line(t);
        if (fields.size() != 2) parse_fail(path, line_no, "expected 2 columns (t,x)");
        const double ti = parse_double(fields[0], path, line_no);
        if (!xs.empty() && ti < prev_t) parse_fail(path, line_no, "time column must be nondecreasing");
        prev_t = ti;
        xs.push_back(parse_double(fields[1], path, line_no));
    }
    (void)header_seen;
    if (xs.size() < 2) throw InvalidInput(path + ": path needs at least 2 points");
    return xs;
}

void write_ou_path(const std::vector<double>& path, double delta, std::ostream& out) {
    out << "t,x\n";
    for (std::size_t k = 0; k < path.size(); ++k) {
        out << format_double(static_cast<double>(k) * delta) << ',' << format_double(path[k]) << '\n';
    }
}

SurvData read_surv_csv(const std::string& path) {
    std::ifstream in = open_or_fail(path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw InvalidInput(path + ": empty file");
    ++line_no;
    const auto header = split_csv_line(strip(line));
    if (header.size() < 3 || strip(header[0]) != "time" || strip(header[1]) != "status") {
        parse_fail(path, line_no, "expected header 'time,status,z1,...'");
    }
    const int dim = static_cast<int>(header.size()) - 2;
    for (int j = 0; j < dim; ++j) {
        if (strip(header[static_cast<std::size_t>(j) + 2]) != "z" + std::to_string(j + 1)) {
            parse_fail(path, line_no, "covariate columns must be named z1..z" + std::to_string(dim));
        }
    }

    SurvData data;
    data.dim = dim;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = strip(line);
        if (t.empty()) continue;
        const auto fields = split_csv_line(t);
        if (fields.size() != header.size()) {
            parse_fail(path, line_no,
                       "expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(fields.size()));
        }
        data.time.push_back(parse_double(fields[0], path, line_no));
        const double status = parse_double(fields[1], path, line_no);
        if (status != 0.0 && status != 1.0) parse_fail(path, line_no, "status must be 0 or 1");
        data.status.push_back(static_cast<int>(status));
        for (int j = 0; j < dim; ++j) {
            data.covariates.push_back(parse_double(fields[static_cast<std::size_t>(j) + 2], path, line_no));
        }
    }
    if (data.size() == 0) throw InvalidInput(path + ": no subjects");
    data.validate();
    break_time_ties(data);
    return data;
}

void write_surv_csv(const SurvData& data, std::ostream& out) {
    out << "time,status";
    for (int j = 1; j <= data.dim; ++j) out << ",z" << j;
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_double(data.time[i]) << ',' << data.status[i];
        const auto z = data.z(i);
        for (int j = 0; j < data.dim; ++j) out << ',' << format_double(z[static_cast<std::size_t>(j)]);
        out << '\n';
    }
}

void write_zpath_csv(const ZPath& path, std::ostream& out) {
    out << "u";
    for (int j = 1; j <= path.dim; ++j) out << ",z" << j;
    out << ",norm\n";
    for (std::size_t k = 0; k <= path.n; ++k) {
        out << format_double(path.u[k]);
        const auto z = path.z_at(k);
        for (int j = 0; j < path.dim; ++j) out << ',' << format_double(z[static_cast<std::size_t>(j)]);
        out << ',' << format_double(std::sqrt(path.sqnorm[k])) << '\n';
    }
}

}  // namespace zproc
