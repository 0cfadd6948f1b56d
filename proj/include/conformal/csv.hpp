#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conformal/dataset.hpp"

namespace conformal {

namespace detail {

// Shortest exact decimal round-trip for a double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& field, const std::string& path, std::size_t line) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != field.size() || field.empty())
        throw std::runtime_error(path + ":" + std::to_string(line) + ": malformed number '" +
                                 field + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

/// Writes `f1,...,fp,label` rows. Floats are printed with 17 significant
/// digits, so load(save(d)) reproduces every value bit-for-bit.
inline void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t d = 1; d <= data.dim(); ++d) out << 'f' << d << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto object = data.object(i);
        for (double v : object) out << detail::format_double(v) << ',';
        if (data.task() == Task::classification)
            out << data.label_name(data.label(i));
        else
            out << detail::format_double(data.target(i));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Reads a dataset written by save_csv. Classification labels are interned
/// in order of first appearance. Errors name the offending line.
inline Dataset load_csv(const std::string& path, Task task) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "label")
        throw std::runtime_error(path + ":1: expected header 'f1,...,fp,label'");
    std::size_t dim = header.size() - 1;

    Dataset data(task, dim);
    std::vector<double> object(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != dim + 1)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim + 1) + " fields, got " +
                                     std::to_string(fields.size()));
        for (std::size_t d = 0; d < dim; ++d)
            object[d] = detail::parse_double(fields[d], path, line_no);
        if (task == Task::classification)
            data.add_classified(object, data.intern_label(fields[dim]));
        else
            data.add_regression(object, detail::parse_double(fields[dim], path, line_no));
    }
    return data;
}

/// Re-expresses `data`'s labels in `reference`'s alphabet (for test sets
/// scored against a trained model). Unknown labels are an error.
inline Dataset align_labels(const Dataset& data, const Dataset& reference) {
    if (data.task() != Task::classification) return data;
    if (data.dim() != reference.dim())
        throw std::runtime_error("dimension mismatch: " + std::to_string(data.dim()) + " vs " +
                                 std::to_string(reference.dim()));
    Dataset out(Task::classification, data.dim());
    out.set_label_names(reference.label_names());
    for (std::size_t i = 0; i < data.size(); ++i) {
        int id = reference.find_label(data.label_name(data.label(i)));
        if (id < 0)
            throw std::runtime_error("unknown label '" + data.label_name(data.label(i)) +
                                     "' not in training alphabet");
        out.add_classified(data.object(i), id);
    }
    return out;
}

}  // namespace conformal
