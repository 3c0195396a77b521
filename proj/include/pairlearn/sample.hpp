#pragma once
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pairlearn {

struct SamplePoint {
  std::vector<double> x;
  double y = 0.0;
};

// a labelled i.i.d. sample together with the label bound it was drawn under
struct SampleSet {
  std::vector<SamplePoint> points;
  int d = 0;
  double label_bound = 0.0;  // B: |y| <= B for every point
  uint64_t seed = 0;
  std::string origin;  // free-form tag of the generator

  std::size_t size() const { return points.size(); }
  // throws std::invalid_argument on dimension mismatch or |y| > B
  void validate() const;
};

// predictor on pairs of inputs, f(x, x')
using PairPredictor = std::function<double(std::span<const double>, std::span<const double>)>;
// function of a full observation z = (x, y)
using PointFunction = std::function<double(const SamplePoint&)>;
using ZPairFunction = std::function<double(const SamplePoint&, const SamplePoint&)>;

void write_samples_csv(const SampleSet& s, const std::string& path);
SampleSet read_samples_csv(const std::string& path, double label_bound = 0.0);

}  // namespace pairlearn
