#pragma once
#include <cstdio>
#include <stdexcept>
#include <string>

namespace pairlearn {

// float formatting for every CSV we emit: 17 significant digits round-trips
// IEEE doubles exactly, so re-runs can be compared byte-for-byte
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fwrite(body.data(), 1, body.size(), f);
  std::fclose(f);
}

}  // namespace pairlearn
