#pragma once

// Golden-section machinery behind the ellipsoid intersection criterion.
//
// For ellipsoids {x : (x - c)^T Sigma^{-1} (x - c) <= eps^2} the shape
// matrix is eps^2 Sigma, and the separation function is
//
//   K(S) = 1 - vᵀ (eps^2 Sigma_j / (1-S) + eps^2 Sigma_i / S)^{-1} v
//        = 1 - g(S) / eps^2,
//   g(S) = S (1-S) vᵀ ((1-S) Sigma_i + S Sigma_j)^{-1} v,
//
// with v = x_i - x_j. K is convex on (0,1), so g is concave and the search
// maximises g. Every comparison inside the search is made on g alone, which
// makes the sequence of evaluated S independent of eps; intersection at eps
// is then the predicate 1 - g_max / eps^2 >= -kTangencyTolerance, monotone
// in eps by construction.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "flowph/ellipsoid.hpp"

namespace flowph::detail {

/// The single predicate shared by intersection tests and birth-scale solving.
inline bool within_contact(double g, double eps) {
  return 1.0 - g / (eps * eps) >= -kTangencyTolerance;
}

inline double k_from_g(double g, double eps) { return 1.0 - g / (eps * eps); }

template <int D>
struct ContactPair {
  using Mat = Eigen::Matrix<double, D, D>;
  using Vec = Eigen::Matrix<double, D, 1>;

  Mat sigma_i;
  Mat sigma_j;
  Vec v;

  double g(double s, double shift) const {
    double sv = s;
    for (int attempt = 0; attempt < 4; ++attempt) {
      const Mat blend = (1.0 - sv) * sigma_i + sv * sigma_j;
      const Eigen::LLT<Mat> llt(blend);
      if (llt.info() == Eigen::Success) return sv * (1.0 - sv) * v.dot(llt.solve(v));
      // Singular blend: re-evaluate at S nudged toward the interior.
      sv += sv < 0.5 ? shift : -shift;
    }
    const Eigen::LDLT<Mat> ldlt((1.0 - sv) * sigma_i + sv * sigma_j);
    const double q = v.dot(ldlt.solve(v));
    return std::isfinite(q) ? sv * (1.0 - sv) * q : 0.0;
  }
};

struct GoldenOutcome {
  double g_max = 0.0;
  double s_at = 0.5;
  int iterations = 0;
  bool stopped_early = false;
};

/// Maximises g over (0,1). With early_eps > 0 the search returns as soon as
/// an evaluated g fails the contact predicate at that scale.
template <int D>
GoldenOutcome golden_contact(const ContactPair<D>& pair, double tol, int max_iter, double early_eps) {
  constexpr double kInvPhi = 0.6180339887498948482;
  GoldenOutcome out;
  if (pair.v.squaredNorm() == 0.0) return out;
  out.g_max = -std::numeric_limits<double>::infinity();
  const bool early = early_eps > 0.0;

  auto consider = [&](double s, double g) {
    if (g > out.g_max) {
      out.g_max = g;
      out.s_at = s;
    }
    return early && !within_contact(g, early_eps);
  };

  double a = 0.0;
  double b = 1.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double gc = pair.g(c, tol);
  if (consider(c, gc)) {
    out.stopped_early = true;
    return out;
  }
  double gd = pair.g(d, tol);
  if (consider(d, gd)) {
    out.stopped_early = true;
    return out;
  }
  while (b - a > tol && out.iterations < max_iter) {
    ++out.iterations;
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kInvPhi * (b - a);
      gc = pair.g(c, tol);
      if (consider(c, gc)) {
        out.stopped_early = true;
        return out;
      }
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kInvPhi * (b - a);
      gd = pair.g(d, tol);
      if (consider(d, gd)) {
        out.stopped_early = true;
        return out;
      }
    }
  }
  const double mid = 0.5 * (a + b);
  if (consider(mid, pair.g(mid, tol))) out.stopped_early = true;
  return out;
}

/// Smallest eps with within_contact(g_max, eps), exact to the last ulp.
inline double contact_scale(double g_max) {
  if (!(g_max > 0.0)) return 0.0;
  double eps = std::sqrt(g_max / (1.0 + kTangencyTolerance));
  constexpr double kInf = std::numeric_limits<double>::infinity();
  while (!within_contact(g_max, eps)) eps = std::nextafter(eps, kInf);
  for (;;) {
    const double lower = std::nextafter(eps, 0.0);
    if (lower > 0.0 && within_contact(g_max, lower)) {
      eps = lower;
    } else {
      break;
    }
  }
  return eps;
}

enum class BirthStatus { born, beyond_cap, inconsistent };

struct BirthOutcome {
  BirthStatus status = BirthStatus::beyond_cap;
  double scale = 0.0;
};

/// Birth scale of one pair: full search for g_max, exact inversion of the
/// contact predicate, then early-exit probes at scale (1 -/+ rel_tol).
template <int D>
BirthOutcome birth_scale(const ContactPair<D>& pair, double eps_max, double rel_tol, double tol, int max_iter) {
  const double g_max = golden_contact(pair, tol, max_iter, 0.0).g_max;
  if (!within_contact(g_max, eps_max)) return {BirthStatus::beyond_cap, 0.0};
  const double birth = contact_scale(g_max);
  if (birth == 0.0) return {BirthStatus::born, 0.0};
  const double above = std::min(eps_max, birth * (1.0 + rel_tol));
  const double below = birth * (1.0 - rel_tol);
  if (golden_contact(pair, tol, max_iter, above).stopped_early ||
      !golden_contact(pair, tol, max_iter, below).stopped_early) {
    return {BirthStatus::inconsistent, birth};
  }
  return {BirthStatus::born, birth};
}

}  // namespace flowph::detail
