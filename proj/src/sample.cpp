#include "pairlearn/sample.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pairlearn {

void SampleSet::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<int>(points[i].x.size()) != d)
      throw std::invalid_argument("sample point dimension mismatch");
    if (label_bound > 0.0 && std::fabs(points[i].y) > label_bound)
      throw std::invalid_argument("label exceeds stated bound");
  }
}

void write_samples_csv(const SampleSet& s, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  for (int j = 0; j < s.d; ++j) std::fprintf(f, "x%d,", j + 1);
  std::fprintf(f, "y\n");
  for (const auto& p : s.points) {
    for (int j = 0; j < s.d; ++j) std::fprintf(f, "%.17g,", p.x[j]);
    std::fprintf(f, "%.17g\n", p.y);
  }
  std::fclose(f);
}

SampleSet read_samples_csv(const std::string& path, double label_bound) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open " + path);
  SampleSet s;
  s.label_bound = label_bound;
  char line[8192];
  if (!std::fgets(line, sizeof line, f)) {
    std::fclose(f);
    throw std::runtime_error("empty samples file");
  }
  int ncols = 1;
  for (char* p = line; *p; ++p)
    if (*p == ',') ++ncols;
  s.d = ncols - 1;
  while (std::fgets(line, sizeof line, f)) {
    SamplePoint pt;
    char* p = line;
    for (int j = 0; j < ncols; ++j) {
      char* end = nullptr;
      double v = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("bad samples row");
      if (j < s.d)
        pt.x.push_back(v);
      else
        pt.y = v;
      p = end;
      while (*p == ',' || *p == ' ') ++p;
    }
    s.points.push_back(std::move(pt));
  }
  std::fclose(f);
  s.validate();
  return s;
}

}  // namespace pairlearn
