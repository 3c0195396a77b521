#pragma once
#include <cstddef>
#include <vector>

namespace pairlearn {

// Deterministic reductions.  Work is split into fixed-size chunks that are
// summed serially; chunk partials are combined by a fixed pairwise tree.
// The chunk size does not depend on the thread count, so the OpenMP path and
// the serial reference produce bit-identical results.

inline constexpr std::size_t kReduceChunk = 4096;

inline double tree_combine(const double* v, std::size_t n) {
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  std::size_t half = n / 2;
  return tree_combine(v, half) + tree_combine(v + half, n - half);
}

// sum of item(i) for i in [0, count)
template <class F>
double chunked_sum(std::size_t count, F&& item, bool parallel = true) {
  if (count == 0) return 0.0;
  std::size_t nchunks = (count + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(nchunks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    std::size_t hi = lo + kReduceChunk < count ? lo + kReduceChunk : count;
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += item(i);
    partial[static_cast<std::size_t>(c)] = acc;
  }
  return tree_combine(partial.data(), nchunks);
}

// vector accumulation with per-chunk context (e.g. a net workspace):
// item(i, ctx, acc) adds item i's contribution into acc[0..dim)
template <class MakeCtx, class F>
void chunked_accumulate_ctx(std::size_t count, std::size_t dim, MakeCtx&& make_ctx, F&& item,
                            double* out, bool parallel = true) {
  std::size_t nchunks = (count + kReduceChunk - 1) / kReduceChunk;
  if (count == 0) nchunks = 0;
  std::vector<double> partial(nchunks * dim, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    std::size_t hi = lo + kReduceChunk < count ? lo + kReduceChunk : count;
    auto ctx = make_ctx();
    double* acc = partial.data() + static_cast<std::size_t>(c) * dim;
    for (std::size_t i = lo; i < hi; ++i) item(i, ctx, acc);
  }
  std::vector<double> col(nchunks);
  for (std::size_t k = 0; k < dim; ++k) {
    if (nchunks == 0) {
      out[k] = 0.0;
      continue;
    }
    for (std::size_t c = 0; c < nchunks; ++c) col[c] = partial[c * dim + k];
    out[k] = tree_combine(col.data(), nchunks);
  }
}

// vector accumulation: item(i, acc) adds item i's contribution into acc[0..dim)
template <class F>
void chunked_accumulate(std::size_t count, std::size_t dim, F&& item, double* out,
                        bool parallel = true) {
  std::size_t nchunks = (count + kReduceChunk - 1) / kReduceChunk;
  if (count == 0) nchunks = 0;
  std::vector<double> partial(nchunks * dim, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    std::size_t hi = lo + kReduceChunk < count ? lo + kReduceChunk : count;
    double* acc = partial.data() + static_cast<std::size_t>(c) * dim;
    for (std::size_t i = lo; i < hi; ++i) item(i, acc);
  }
  // combine per coordinate with the same pairwise tree
  std::vector<double> col(nchunks);
  for (std::size_t k = 0; k < dim; ++k) {
    if (nchunks == 0) {
      out[k] = 0.0;
      continue;
    }
    for (std::size_t c = 0; c < nchunks; ++c) col[c] = partial[c * dim + k];
    out[k] = tree_combine(col.data(), nchunks);
  }
}

}  // namespace pairlearn
