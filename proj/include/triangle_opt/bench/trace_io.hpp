#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "../errors.hpp"
#include "../trace.hpp"

namespace triangle_opt::bench {

enum class TraceFormat { csv, json };

inline const char* const kTraceHeader = "k,A,alpha,L_trial,j,m,cum_f,cum_grad,cum_stoch,gap";

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

template <class Int>
inline void append_int(std::string& out, Int v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

template <class T>
inline T parse_number(std::string_view field, const char* column, std::size_t line) {
  T v{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw ParseError("trace: malformed value '" + std::string(field) + "'", static_cast<int>(line), column);
  return v;
}

}  // namespace detail

inline std::string trace_to_csv(const Trace& trace) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const TraceRow& r : trace.rows) {
    detail::append_int(out, r.k);
    out += ',';
    detail::append_double(out, r.A);
    out += ',';
    detail::append_double(out, r.alpha);
    out += ',';
    detail::append_double(out, r.L_trial);
    out += ',';
    detail::append_int(out, r.j);
    out += ',';
    detail::append_int(out, r.m);
    out += ',';
    detail::append_int(out, r.cum_f);
    out += ',';
    detail::append_int(out, r.cum_grad);
    out += ',';
    detail::append_int(out, r.cum_stoch);
    out += ',';
    if (r.gap) detail::append_double(out, *r.gap);
    out += '\n';
  }
  return out;
}

inline nlohmann::json trace_to_json_value(const Trace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TraceRow& r : trace.rows) {
    nlohmann::json row;
    row["k"] = r.k;
    row["A"] = r.A;
    row["alpha"] = r.alpha;
    row["L_trial"] = r.L_trial;
    row["j"] = r.j;
    row["m"] = r.m;
    row["cum_f"] = r.cum_f;
    row["cum_grad"] = r.cum_grad;
    row["cum_stoch"] = r.cum_stoch;
    row["gap"] = r.gap ? nlohmann::json(*r.gap) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string trace_to_json(const Trace& trace) { return trace_to_json_value(trace).dump(1) + "\n"; }

inline Trace trace_from_csv(const std::string& text) {
  Trace trace;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("trace: missing header", 1, "header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw ParseError("trace: unexpected header '" + line + "'", 1, "header");
  static const char* const columns[] = {"k", "A", "alpha", "L_trial", "j", "m", "cum_f", "cum_grad", "cum_stoch", "gap"};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 10)
      throw ParseError("trace: expected 10 fields, got " + std::to_string(fields.size()), static_cast<int>(line_no),
                       "row");
    TraceRow r;
    r.k = detail::parse_number<std::int64_t>(fields[0], columns[0], line_no);
    r.A = detail::parse_number<double>(fields[1], columns[1], line_no);
    r.alpha = detail::parse_number<double>(fields[2], columns[2], line_no);
    r.L_trial = detail::parse_number<double>(fields[3], columns[3], line_no);
    r.j = detail::parse_number<int>(fields[4], columns[4], line_no);
    r.m = detail::parse_number<std::int64_t>(fields[5], columns[5], line_no);
    r.cum_f = detail::parse_number<std::int64_t>(fields[6], columns[6], line_no);
    r.cum_grad = detail::parse_number<std::int64_t>(fields[7], columns[7], line_no);
    r.cum_stoch = detail::parse_number<std::int64_t>(fields[8], columns[8], line_no);
    if (!fields[9].empty()) r.gap = detail::parse_number<double>(fields[9], columns[9], line_no);
    trace.rows.push_back(r);
  }
  return trace;
}

inline Trace trace_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("trace: ") + e.what(), 0, "");
  }
  if (!doc.is_array()) throw ParseError("trace: JSON trace must be an array of rows", 1, "");
  Trace trace;
  for (const auto& row : doc) {
    try {
      TraceRow r;
      r.k = row.at("k").get<std::int64_t>();
      r.A = row.at("A").get<double>();
      r.alpha = row.at("alpha").get<double>();
      r.L_trial = row.at("L_trial").get<double>();
      r.j = row.at("j").get<int>();
      r.m = row.at("m").get<std::int64_t>();
      r.cum_f = row.at("cum_f").get<std::int64_t>();
      r.cum_grad = row.at("cum_grad").get<std::int64_t>();
      r.cum_stoch = row.at("cum_stoch").get<std::int64_t>();
      if (row.contains("gap") && !row.at("gap").is_null()) r.gap = row.at("gap").get<double>();
      trace.rows.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("trace: bad row: ") + e.what(), 0, "row");
    }
  }
  return trace;
}

inline void emit_trace(const Trace& trace, const std::filesystem::path& path, TraceFormat format) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << (format == TraceFormat::csv ? trace_to_csv(trace) : trace_to_json(trace));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads a CSV or JSON trace, deciding by the first non-blank character.
inline Trace load_trace(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') return trace_from_json(text);
  return trace_from_csv(text);
}

}  // namespace triangle_opt::bench
