#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "classroom/error.hpp"
#include "classroom/identity/embedding.hpp"

namespace classroom {

/// One line of an enrollment file:
///   student_id,display_name,v0,v1,...,v127
/// Blank lines and lines starting with '#' are ignored. Fields are not quoted,
/// so neither id nor name may contain a comma.
struct EnrollmentEntry {
  std::string student_id;
  std::string display_name;
  Embedding embedding;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view text, ErrorCode on_error) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(on_error, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline EnrollmentEntry parse_enrollment_line(std::string_view line) {
  const auto fields = detail::split_commas(line);
  if (fields.size() != 2 + kEmbeddingDim) {
    throw Error(ErrorCode::InvalidEmbedding,
                "expected " + std::to_string(2 + kEmbeddingDim) + " fields, got " +
                    std::to_string(fields.size()));
  }
  std::vector<double> values;
  values.reserve(kEmbeddingDim);
  for (std::size_t i = 2; i < fields.size(); ++i) {
    values.push_back(detail::parse_double(fields[i], ErrorCode::InvalidEmbedding));
  }
  EnrollmentEntry entry{std::string(detail::trim(fields[0])), std::string(detail::trim(fields[1])),
                        Embedding(values)};
  if (entry.student_id.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty student_id");
  }
  return entry;
}

inline std::vector<EnrollmentEntry> read_enrollment(std::istream& in) {
  std::vector<EnrollmentEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    try {
      out.push_back(parse_enrollment_line(trimmed));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<EnrollmentEntry> read_enrollment_text(const std::string& text) {
  std::istringstream in(text);
  return read_enrollment(in);
}

inline std::vector<EnrollmentEntry> read_enrollment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path);
  return read_enrollment(in);
}

inline std::string format_enrollment_line(const std::string& student_id,
                                          const std::string& display_name,
                                          const Embedding& embedding) {
  std::string line = student_id + "," + display_name;
  for (double v : embedding.values()) {
    line += ',';
    line += detail::format_double(v);
  }
  return line;
}

}  // namespace classroom
