#include "core/pairsum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define PATCHFLOW_AVX2 1
#endif

namespace patchflow {

namespace {

constexpr std::size_t kBlock = 256;
constexpr double kInf = std::numeric_limits<double>::infinity();
alignas(64) const double kZeros[kBlock] = {};

// Per-thread block totals, one column per reduced quantity.
struct Totals {
  int width = 0;
  std::vector<double> blocks;  // nblocks * width
  std::vector<double> running;
  std::vector<double> column;

  void reset(int w, std::size_t nblocks) {
    width = w;
    blocks.assign(nblocks * w, 0.0);
    running.assign(w, 0.0);
  }
  void add(Summation mode, std::size_t b, int c, const double* terms, std::size_t len) {
    if (mode == Summation::sequential) {
      double s = running[c];
      for (std::size_t i = 0; i < len; ++i) s += terms[i];
      running[c] = s;
    } else {
      blocks[b * width + c] = pairwise_sum(terms, len);
    }
  }
  double total(Summation mode, int c, std::size_t nblocks) {
    if (mode == Summation::sequential) return running[c];
    column.resize(nblocks);
    for (std::size_t b = 0; b < nblocks; ++b) column[b] = blocks[b * width + c];
    return pairwise_sum(column.data(), nblocks);
  }
};

thread_local Totals t_totals;

template <int N>
inline double inv_pow_n(double inv2) {
  if constexpr (N % 2 == 0) {
    double r = 1.0;
    for (int k = 0; k < N / 2; ++k) r *= inv2;
    return r;
  } else {
    double r = std::sqrt(inv2);
    for (int k = 0; k < N / 2; ++k) r *= inv2;
    return r;
  }
}

// Upper-triangle index pairs (m, i), m <= i, in row order.
template <int N>
struct PairTable {
  int first[N * (N + 1) / 2];
  int second[N * (N + 1) / 2];
  constexpr PairTable() : first(), second() {
    int c = 0;
    for (int m = 0; m < N; ++m)
      for (int i = m; i < N; ++i) {
        first[c] = m;
        second[c] = i;
        ++c;
      }
  }
};
template <int N>
constexpr PairTable<N> kPairs{};

template <int N, bool Grad>
void moments_fixed(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out) {
  constexpr int NB = N * (N + 1) / 2;
  const std::size_t count = src.count;
  const std::size_t nblocks = (count + kBlock - 1) / kBlock;
  const int width = N + (Grad ? 1 + NB : 0);
  Totals& tot = t_totals;
  tot.reset(width, nblocks);

  alignas(64) double bufS[N][kBlock];
  alignas(64) double bufA[kBlock];
  alignas(64) double bufB[NB][kBlock];
  alignas(64) double bufD2[kBlock];

  const double eps2 = opt.pv_eps2;
  double xs[N];
  for (int m = 0; m < N; ++m) xs[m] = x[m];
  out.near.clear();
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t q0 = b * kBlock;
    const std::size_t len = std::min(kBlock, count - q0);
    const double* __restrict w = src.weight + q0;
    const double* __restrict nr2 = src.near_r2 ? src.near_r2 + q0 : kZeros;
    const double* __restrict pos[N];
    for (int m = 0; m < N; ++m) pos[m] = src.pos + m * count + q0;
#pragma GCC ivdep
    for (std::size_t k = 0; k < len; ++k) {
      double d[N];
      double d2 = 0.0;
#pragma GCC unroll 8
      for (int m = 0; m < N; ++m) {
        d[m] = xs[m] - pos[m][k];
        d2 += d[m] * d[m];
      }
      bufD2[k] = d2;
      // 1/inf = 0 drops the coincident source without a branch.
      const double inv2 = 1.0 / (d2 > 0.0 ? d2 : kInf);
      const double rmn = inv_pow_n<N>(inv2);
      const double lim = nr2[k];
      const double wr = w[k] * rmn;
      const double wv = d2 < lim ? 0.0 : wr;
#pragma GCC unroll 8
      for (int m = 0; m < N; ++m) bufS[m][k] = wv * d[m];
      if constexpr (Grad) {
        const double wg = d2 > eps2 ? wr : 0.0;
        bufA[k] = wg;
        const double wb = wg * inv2;
#pragma GCC unroll 64
        for (int c = 0; c < NB; ++c) bufB[c][k] = wb * d[kPairs<N>.first[c]] * d[kPairs<N>.second[c]];
      }
    }
    if (src.near_r2) {
      for (std::size_t k = 0; k < len; ++k)
        if (bufD2[k] < nr2[k]) out.near.push_back(static_cast<std::uint32_t>(q0 + k));
    }
    for (int m = 0; m < N; ++m) tot.add(opt.mode, b, m, bufS[m], len);
    if constexpr (Grad) {
      tot.add(opt.mode, b, N, bufA, len);
      for (int c = 0; c < NB; ++c) tot.add(opt.mode, b, N + 1 + c, bufB[c], len);
    }
  }
  out.S.resize(N);
  for (int m = 0; m < N; ++m) out.S[m] = tot.total(opt.mode, m, nblocks);
  if constexpr (Grad) {
    out.A = tot.total(opt.mode, N, nblocks);
    out.B.resize(N * N);
    int c = 0;
    for (int m = 0; m < N; ++m)
      for (int i = m; i < N; ++i) {
        const double v = tot.total(opt.mode, N + 1 + c, nblocks);
        out.B[m * N + i] = v;
        out.B[i * N + m] = v;
        ++c;
      }
  } else {
    out.A = 0.0;
    out.B.clear();
  }
}

#ifdef PATCHFLOW_AVX2
// Same moments with explicit 4-wide lanes. Each block sums lane k mod 4
// sequentially, then folds the lanes as (0+1)+(2+3); the blocks still go
// through the pairwise tree, so the order depends on the source count only.
template <int N, bool Grad>
void moments_avx2(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out) {
  constexpr int NB = N * (N + 1) / 2;
  constexpr int W = N + (Grad ? 1 + NB : 0);
  const std::size_t count = src.count;
  const std::size_t nblocks = (count + kBlock - 1) / kBlock;
  Totals& tot = t_totals;
  tot.reset(W, nblocks);
  out.near.clear();

  __m256d xs[N];
  for (int m = 0; m < N; ++m) xs[m] = _mm256_set1_pd(x[m]);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d inf = _mm256_set1_pd(kInf);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d eps2 = _mm256_set1_pd(opt.pv_eps2);
  const bool has_near = src.near_r2 != nullptr;

  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t q0 = b * kBlock;
    const std::size_t len = std::min(kBlock, count - q0);
    __m256d acc[W];
    for (int c = 0; c < W; ++c) acc[c] = zero;
    for (std::size_t k = 0; k < len; k += 4) {
      const std::size_t q = q0 + k;
      const std::size_t rem = len - k;
      __m256d d[N], w, lim;
      if (rem >= 4) {
        for (int m = 0; m < N; ++m) d[m] = _mm256_sub_pd(xs[m], _mm256_loadu_pd(src.pos + m * count + q));
        w = _mm256_loadu_pd(src.weight + q);
        lim = has_near ? _mm256_loadu_pd(src.near_r2 + q) : zero;
      } else {
        // Tail: missing lanes load zero weight and are never near.
        const __m256i mask = _mm256_cmpgt_epi64(_mm256_set1_epi64x(static_cast<long long>(rem)),
                                                _mm256_setr_epi64x(0, 1, 2, 3));
        for (int m = 0; m < N; ++m) d[m] = _mm256_sub_pd(xs[m], _mm256_maskload_pd(src.pos + m * count + q, mask));
        w = _mm256_maskload_pd(src.weight + q, mask);
        lim = has_near ? _mm256_maskload_pd(src.near_r2 + q, mask) : zero;
      }
      __m256d d2 = _mm256_mul_pd(d[0], d[0]);
      for (int m = 1; m < N; ++m) d2 = _mm256_fmadd_pd(d[m], d[m], d2);
      const __m256d inv2 = _mm256_div_pd(one, _mm256_blendv_pd(inf, d2, _mm256_cmp_pd(d2, zero, _CMP_GT_OQ)));
      __m256d rmn;
      if constexpr (N % 2 == 0) {
        rmn = inv2;
        for (int i = 1; i < N / 2; ++i) rmn = _mm256_mul_pd(rmn, inv2);
      } else {
        rmn = _mm256_sqrt_pd(inv2);
        for (int i = 0; i < N / 2; ++i) rmn = _mm256_mul_pd(rmn, inv2);
      }
      const __m256d wr = _mm256_mul_pd(w, rmn);
      const __m256d near = _mm256_cmp_pd(d2, lim, _CMP_LT_OQ);
      const __m256d wv = _mm256_andnot_pd(near, wr);
      for (int m = 0; m < N; ++m) acc[m] = _mm256_fmadd_pd(wv, d[m], acc[m]);
      if constexpr (Grad) {
        const __m256d wg = _mm256_and_pd(_mm256_cmp_pd(d2, eps2, _CMP_GT_OQ), wr);
        acc[N] = _mm256_add_pd(acc[N], wg);
        const __m256d wb = _mm256_mul_pd(wg, inv2);
        int c = N + 1;
        for (int m = 0; m < N; ++m) {
          const __m256d wm = _mm256_mul_pd(wb, d[m]);
          for (int i = m; i < N; ++i, ++c) acc[c] = _mm256_fmadd_pd(wm, d[i], acc[c]);
        }
      }
      if (has_near) {
        int bits = _mm256_movemask_pd(near);
        while (bits) {
          const int j = __builtin_ctz(bits);
          out.near.push_back(static_cast<std::uint32_t>(q + j));
          bits &= bits - 1;
        }
      }
    }
    alignas(32) double lane[4];
    for (int c = 0; c < W; ++c) {
      _mm256_store_pd(lane, acc[c]);
      tot.blocks[b * W + c] = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    }
  }
  out.S.resize(N);
  for (int m = 0; m < N; ++m) out.S[m] = tot.total(opt.mode, m, nblocks);
  if constexpr (Grad) {
    out.A = tot.total(opt.mode, N, nblocks);
    out.B.resize(N * N);
    int c = 0;
    for (int m = 0; m < N; ++m)
      for (int i = m; i < N; ++i, ++c) {
        const double v = tot.total(opt.mode, N + 1 + c, nblocks);
        out.B[m * N + i] = v;
        out.B[i * N + m] = v;
      }
  } else {
    out.A = 0.0;
    out.B.clear();
  }
}
#endif

template <int N>
void moments_fixed(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out) {
#ifdef PATCHFLOW_AVX2
  if (opt.mode == Summation::pairwise_tree) {
    if (opt.gradient) moments_avx2<N, true>(src, x, opt, out);
    else moments_avx2<N, false>(src, x, opt, out);
    return;
  }
#endif
  if (opt.gradient) moments_fixed<N, true>(src, x, opt, out);
  else moments_fixed<N, false>(src, x, opt, out);
}

void moments_dynamic(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out) {
  const int n = src.n;
  const int width = n + (opt.gradient ? 1 + n * n : 0);
  std::vector<double> total(width);
  out.near.clear();
  std::vector<double> d(n);
  reduce_terms(
      src.count, width, opt.mode,
      [&](std::size_t q, double* t) {
        double d2 = 0.0;
        for (int m = 0; m < n; ++m) {
          d[m] = x[m] - src.pos[m * src.count + q];
          d2 += d[m] * d[m];
        }
        const double inv2 = d2 > 0.0 ? 1.0 / d2 : 0.0;
        const double rmn = std::pow(inv2, 0.5 * n);
        const bool masked = src.near_r2 ? d2 < src.near_r2[q] : false;
        const double wv = masked ? 0.0 : src.weight[q] * rmn;
        for (int m = 0; m < n; ++m) t[m] = wv * d[m];
        if (opt.gradient) {
          const double wg = d2 > opt.pv_eps2 ? src.weight[q] * rmn : 0.0;
          t[n] = wg;
          for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i) t[n + 1 + m * n + i] = wg * inv2 * d[m] * d[i];
        }
      },
      total.data());
  if (src.near_r2) {
    for (std::size_t q = 0; q < src.count; ++q) {
      double d2 = 0.0;
      for (int m = 0; m < n; ++m) {
        const double dm = x[m] - src.pos[m * src.count + q];
        d2 += dm * dm;
      }
      if (d2 < src.near_r2[q]) out.near.push_back(static_cast<std::uint32_t>(q));
    }
  }
  out.S.assign(total.begin(), total.begin() + n);
  if (opt.gradient) {
    out.A = total[n];
    out.B.assign(total.begin() + n + 1, total.end());
  } else {
    out.A = 0.0;
    out.B.clear();
  }
}

}  // namespace

void linear_profile_moments(const SourceArrays& src, const double* x, const PairSumOptions& opt, Moments& out) {
  switch (src.n) {
    case 2: moments_fixed<2>(src, x, opt, out); return;
    case 3: moments_fixed<3>(src, x, opt, out); return;
    case 4: moments_fixed<4>(src, x, opt, out); return;
    case 5: moments_fixed<5>(src, x, opt, out); return;
    case 6: moments_fixed<6>(src, x, opt, out); return;
    default: moments_dynamic(src, x, opt, out); return;
  }
}

void reduce_terms(std::size_t count, int width, Summation mode,
                  const std::function<void(std::size_t, double*)>& term, double* total) {
  const std::size_t nblocks = (count + kBlock - 1) / kBlock;
  std::vector<double> buf(static_cast<std::size_t>(width) * kBlock);
  std::vector<double> t(width);
  Totals tot;
  tot.reset(width, nblocks);
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t q0 = b * kBlock;
    const std::size_t len = std::min(kBlock, count - q0);
    for (std::size_t k = 0; k < len; ++k) {
      term(q0 + k, t.data());
      for (int c = 0; c < width; ++c) buf[c * kBlock + k] = t[c];
    }
    for (int c = 0; c < width; ++c) tot.add(mode, b, c, &buf[c * kBlock], len);
  }
  for (int c = 0; c < width; ++c) total[c] = tot.total(mode, c, nblocks);
}

}  // namespace patchflow
