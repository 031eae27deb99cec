#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "fewskel/error.hpp"

namespace fewskel::detail {

// Canonical number text: 17 significant digits, negative zero folded to 0 so
// that parse -> format is a fixed point.
inline void append_double(std::string& out, double value) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::non_finite, "cannot serialize non-finite number");
  }
  if (value == 0.0) value = 0.0;
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  out.append(buf, static_cast<std::size_t>(n));
}

inline std::string format_double(double value) {
  std::string s;
  append_double(s, value);
  return s;
}

inline void append_json_string(std::string& out, const std::string& s) {
  out.push_back('"');
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

}  // namespace fewskel::detail
