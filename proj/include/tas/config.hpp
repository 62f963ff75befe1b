#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <string>

#include "tas/core.hpp"

namespace tas {

/// Parses the key=value config format: one `key = value` pair per line,
/// `#` starts a comment, blank lines ignored. Keys and values are trimmed.
inline std::map<std::string, std::string> parse_key_value(std::istream& in) {
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
  };

  std::map<std::string, std::string> kv;
  std::string line;
  Count lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::BadArgument,
                  "config line " + std::to_string(lineno) + " is not key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw Error(Errc::BadArgument, "config line " + std::to_string(lineno) + " has an empty key");
    kv[key] = value;
  }
  return kv;
}

inline std::map<std::string, std::string> load_key_value(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::BadArgument, "cannot open config file '" + path + "'");
  return parse_key_value(in);
}

}  // namespace tas
