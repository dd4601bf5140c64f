#pragma once

// Reference implementations used only by tests. Each one is written directly
// from the defining formula and shares no code with the library path it is
// compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline double ind_le(double a, double b) { return a <= b ? 1.0 : 0.0; }
inline double pos(double a) { return a > 0.0 ? a : 0.0; }
inline double naive_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// sum_ij (b_i l_i - b_j l_j) 1{b_i f_i <= b_j f_j}
inline double indicator_sum(const std::vector<double>& f, const std::vector<double>& b,
                            const std::vector<double>& l) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    for (std::size_t j = 0; j < f.size(); ++j)
      s += (b[i] * l[i] - b[j] * l[j]) * ind_le(b[i] * f[i], b[j] * f[j]);
  return s;
}

/// Pair sum with an arbitrary margin function phi and optional weights.
inline double pair_sum(const std::vector<double>& f, const std::vector<double>& b,
                       const std::vector<double>& l, double sigma,
                       const std::function<double(double)>& phi,
                       const std::vector<double>* teacher = nullptr, double scale = 3.0,
                       bool positive_gap = false) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      double gap = b[i] * l[i] - b[j] * l[j];
      if (positive_gap) gap = pos(gap);
      double w = 1.0;
      if (teacher) w = naive_sigmoid(scale * b[i] * (*teacher)[i]) * naive_sigmoid(scale * b[j] * f[j]);
      s += w * gap * phi(-sigma * (b[i] * f[i] - b[j] * f[j]));
    }
  }
  return s;
}

inline double softplus_naive(double z) { return std::log(1.0 + std::exp(z)); }

inline double logistic_sum(const std::vector<double>& f, const std::vector<double>& y,
                           const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += -w[i] * (y[i] * std::log(f[i]) + (1.0 - y[i]) * std::log(1.0 - f[i]));
  return s;
}

/// E_y[fn(y)] by explicit 2^n enumeration.
inline double expect_over_clicks(const std::vector<double>& p,
                                 const std::function<double(const std::vector<double>&)>& fn) {
  const std::size_t n = p.size();
  double total = 0.0;
  std::vector<double> y(n);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = (mask >> i) & 1u ? 1.0 : 0.0;
      w *= y[i] > 0 ? p[i] : 1.0 - p[i];
    }
    total += w * fn(y);
  }
  return total;
}

/// Central differences of a scalar function of a vector.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double up = fn(x);
    x[k] = orig - h;
    const double down = fn(x);
    x[k] = orig;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({1.0, std::abs(a[k]), std::abs(b[k])});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

/// 1 - AUC by counting every (positive, negative) pair, ties one half.
inline double auc_loss_pairs(const std::vector<double>& s, const std::vector<double>& y) {
  double good = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      total += 1.0;
      good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return 1.0 - good / total;
}

/// Best alpha-weighted welfare over every ordered choice of K of the eCPMs.
inline double best_assignment(const std::vector<double>& ecpm, const std::vector<double>& alpha) {
  std::vector<std::size_t> idx(ecpm.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  double best = -1e300;
  do {
    double w = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) w += alpha[k] * ecpm[idx[k]];
    best = std::max(best, w);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

/// sigmoid(w2 . relu(W1 x + b1) + b2) written out with plain loops.
inline double mlp(const std::vector<double>& w1, const std::vector<double>& b1,
                  const std::vector<double>& w2, double b2, const std::vector<double>& x) {
  const std::size_t h = b1.size(), d = x.size();
  double z = b2;
  for (std::size_t r = 0; r < h; ++r) {
    double a = b1[r];
    for (std::size_t c = 0; c < d; ++c) a += w1[r * d + c] * x[c];
    z += w2[r] * std::max(a, 0.0);
  }
  return naive_sigmoid(z);
}

}  // namespace oracle
