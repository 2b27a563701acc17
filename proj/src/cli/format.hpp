#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <string>

#include "json.hpp"

namespace ordmed::cli {

// Shortest round-trip decimal form; NaN as "NaN".
inline std::string num(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON has no NaN; emit null instead.
inline nlohmann::json jnum(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline void write_comment_block(std::ostream& out, const std::map<std::string, std::string>& meta) {
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << '\n';
}

}  // namespace ordmed::cli
