#pragma once
/*
 * sweep.hpp — tabular sweep results and deterministic CSV emission.
 *
 * CSV contract: '#'-prefixed metadata lines, then a header row, then
 * RFC-4180-style data rows. Floats use '.' decimals and 17 significant
 * digits so values round-trip exactly. Failed cells leave their numeric
 * fields empty and explain themselves in the `status` column; no NaN is
 * ever written.
 */

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "preamp/errors.hpp"

namespace preamp {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

struct SweepResult {
  using Value = std::variant<std::monostate, double, std::int64_t, std::string>;

  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_meta(std::string key, std::string value) {
    metadata.emplace_back(std::move(key), std::move(value));
  }

  void write_csv(std::ostream& out) const {
    for (const auto& [key, value] : metadata) {
      out << "# " << key << ": " << value << '\n';
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      out << csv_field(columns[c]);
    }
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ',';
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                out << format_double(v);
              } else if constexpr (std::is_same_v<T, std::int64_t>) {
                out << v;
              } else if constexpr (std::is_same_v<T, std::string>) {
                out << csv_field(v);
              }
            },
            row[c]);
      }
      out << '\n';
    }
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) {
      throw io_error("cannot open output file: " + path);
    }
    write_csv(out);
    out.flush();
    if (!out) {
      throw io_error("failed writing output file: " + path);
    }
  }
};

}  // namespace preamp
