#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace patchflow {

enum class Summation { sequential, pairwise_tree };

/// Pairwise (cascade) sum. The base case keeps four interleaved partial sums
/// so the leaf adds pipeline; the order is fixed by n alone.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 32) {
    double s[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
      for (int j = 0; j < 4; ++j) s[j] += x[i + j];
    for (int j = 0; i < n; ++i, ++j) s[j] += x[i];
    return (s[0] + s[1]) + (s[2] + s[3]);
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(std::span<const double> x) { return pairwise_sum(x.data(), x.size()); }

inline double reduce(std::span<const double> x, Summation mode) {
  if (mode == Summation::pairwise_tree) return pairwise_sum(x);
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

/// Streams blocks of terms and combines the block totals with a pairwise
/// tree at the end. The result depends only on the term order.
class BlockAccumulator {
 public:
  explicit BlockAccumulator(Summation mode = Summation::pairwise_tree) : mode_(mode) {}

  void add_block(const double* terms, std::size_t n) {
    if (mode_ == Summation::sequential) {
      for (std::size_t i = 0; i < n; ++i) running_ += terms[i];
    } else {
      blocks_.push_back(pairwise_sum(terms, n));
    }
  }

  double total() const {
    return mode_ == Summation::sequential ? running_ : pairwise_sum(blocks_.data(), blocks_.size());
  }

  void reset() {
    blocks_.clear();
    running_ = 0.0;
  }

 private:
  Summation mode_;
  std::vector<double> blocks_;
  double running_ = 0.0;
};

}  // namespace patchflow
