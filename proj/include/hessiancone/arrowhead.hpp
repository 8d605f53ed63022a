#pragma once

// Hermitian arrowhead matrices
//
//   [ d_1                 a_1     ]
//   [      d_2            a_2     ]
//   [           ...       ...     ]
//   [               d_{n-1} a_{n-1} ]
//   [ a_1^* ... a_{n-1}^*  corner ]
//
// and quantitative bounds on how their eigenvalues cluster around the
// diagonal once the corner entry dominates the border.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hessiancone/error.hpp"
#include "hessiancone/parallel.hpp"
#include "hessiancone/random.hpp"

namespace hessiancone::arrowhead {

using Complex = std::complex<double>;

/// Strict inequalities of the concentration bounds are checked non-strictly
/// with this slack to absorb eigensolver rounding.
inline constexpr double kBoundMargin = 1e-9;

struct ArrowheadSpec {
  std::vector<double> d;       // diagonal d_1..d_{n-1}
  std::vector<Complex> a_off;  // last column a_1..a_{n-1}
  double corner = 0.0;

  [[nodiscard]] int n() const { return static_cast<int>(d.size()) + 1; }

  void validate() const {
    if (d.size() != a_off.size())
      fail(ErrorKind::DimensionMismatch, "arrowhead: |d| = " + std::to_string(d.size()) +
                                             " but |a_off| = " + std::to_string(a_off.size()));
    if (d.empty()) fail(ErrorKind::DimensionMismatch, "arrowhead: n must be at least 2");
    auto finite = [](double x) { return std::isfinite(x); };
    bool ok = std::isfinite(corner) && std::all_of(d.begin(), d.end(), finite) &&
              std::all_of(a_off.begin(), a_off.end(),
                          [&](Complex z) { return finite(z.real()) && finite(z.imag()); });
    if (!ok) fail(ErrorKind::InvalidArgument, "arrowhead: non-finite entry");
  }
};

struct Spectrum {
  std::vector<double> values;  // ascending
};

struct ConcentrationReport {
  std::vector<double> deviations;  // |d_match(alpha) - lambda_alpha|, alpha < n
  std::vector<int> matched;        // index into d used for each alpha
  double corner_excess = 0.0;      // lambda_n - corner
  double excess_bound = 0.0;       // upper bound asserted for corner_excess
  double threshold = 0.0;
  double epsilon = 0.0;
  std::vector<bool> deviation_pass;
  bool excess_pass = false;

  [[nodiscard]] bool all_pass() const {
    return excess_pass && std::all_of(deviation_pass.begin(), deviation_pass.end(), [](bool b) { return b; });
  }
  [[nodiscard]] double max_deviation() const {
    double m = 0.0;
    for (double x : deviations) m = std::max(m, x);
    return m;
  }
};

inline Eigen::MatrixXcd assemble(const ArrowheadSpec& spec) {
  spec.validate();
  const int n = spec.n();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n - 1; ++i) {
    A(i, i) = spec.d[i];
    A(i, n - 1) = spec.a_off[i];
    A(n - 1, i) = std::conj(spec.a_off[i]);
  }
  A(n - 1, n - 1) = spec.corner;
  return A;
}

/// Ascending eigenvalues of an arbitrary Hermitian matrix.
inline Spectrum hermitian_eigenvalues(const Eigen::MatrixXcd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(A, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorKind::NumericFailure, "Hermitian eigensolver did not converge");
  Spectrum s;
  s.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::sort(s.values.begin(), s.values.end());
  return s;
}

inline Spectrum eigenvalues(const ArrowheadSpec& spec) { return hermitian_eigenvalues(assemble(spec)); }

namespace detail {

inline double border_mass(const std::vector<Complex>& a_off) {
  double s = 0.0;
  for (Complex z : a_off) s += std::norm(z);
  return s;
}

inline double abs_sum(const std::vector<double>& d) {
  double s = 0.0;
  for (double x : d) s += std::abs(x);
  return s;
}

inline void check_inputs(const std::vector<double>& d, const std::vector<Complex>& a_off, double eps) {
  if (d.size() != a_off.size()) fail(ErrorKind::DimensionMismatch, "arrowhead: |d| != |a_off|");
  if (d.empty()) fail(ErrorKind::DimensionMismatch, "arrowhead: n must be at least 2");
  if (!(eps > 0.0) || !std::isfinite(eps)) fail(ErrorKind::InvalidArgument, "arrowhead: epsilon must be positive");
}

}  // namespace detail

/// Corner size beyond which every lambda_alpha (alpha < n) sits within eps of
/// d_alpha, both sorted ascending:
///   (2n-3)/eps * sum|a_i|^2 + (n-1) sum|d_i| + (n-2) eps / (2n-3).
inline double threshold_strong(const std::vector<double>& d, const std::vector<Complex>& a_off, double eps) {
  detail::check_inputs(d, a_off, eps);
  const double n = static_cast<double>(d.size() + 1);
  return (2 * n - 3) / eps * detail::border_mass(a_off) + (n - 1) * detail::abs_sum(d) +
         (n - 2) * eps / (2 * n - 3);
}

/// Corner size beyond which every lambda_alpha lies within eps of some d_i:
///   1/eps * sum|a_i|^2 + sum (d_i + (n-2)|d_i|) + (n-2) eps.
inline double threshold_weak(const std::vector<double>& d, const std::vector<Complex>& a_off, double eps) {
  detail::check_inputs(d, a_off, eps);
  const double n = static_cast<double>(d.size() + 1);
  double diag = 0.0;
  for (double x : d) diag += x + (n - 2) * std::abs(x);
  return detail::border_mass(a_off) / eps + diag + (n - 2) * eps;
}

/// Threshold for pairwise distinct diagonals:
///   1/eps * sum|a_i|^2 + (n-1) sum|d_i| + (n-2) eps.
inline double threshold_distinct(const std::vector<double>& d, const std::vector<Complex>& a_off, double eps) {
  detail::check_inputs(d, a_off, eps);
  const double n = static_cast<double>(d.size() + 1);
  return detail::border_mass(a_off) / eps + (n - 1) * detail::abs_sum(d) + (n - 2) * eps;
}

/// Half of the smallest gap between diagonal entries; +inf when n = 2.
inline double half_min_gap(const std::vector<double>& d) {
  std::vector<double> s(d);
  std::sort(s.begin(), s.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i) gap = std::min(gap, s[i] - s[i - 1]);
  return 0.5 * gap;
}

namespace detail {

inline ConcentrationReport sorted_match_report(const ArrowheadSpec& spec, const Spectrum& spec_values, double eps,
                                               double threshold) {
  const int n = spec.n();
  std::vector<int> order(n - 1);
  for (int i = 0; i < n - 1; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return spec.d[a] < spec.d[b]; });

  ConcentrationReport r;
  r.epsilon = eps;
  r.threshold = threshold;
  r.deviations.resize(n - 1);
  r.matched.resize(n - 1);
  r.deviation_pass.resize(n - 1);
  for (int alpha = 0; alpha < n - 1; ++alpha) {
    r.matched[alpha] = order[alpha];
    r.deviations[alpha] = std::abs(spec.d[order[alpha]] - spec_values.values[alpha]);
    r.deviation_pass[alpha] = r.deviations[alpha] < eps + kBoundMargin;
  }
  r.corner_excess = spec_values.values[n - 1] - spec.corner;
  r.excess_bound = (n - 1) * eps;
  r.excess_pass = r.corner_excess >= -kBoundMargin && r.corner_excess < r.excess_bound + kBoundMargin;
  return r;
}

}  // namespace detail

/// Per-index concentration at or above threshold_strong.
inline ConcentrationReport check_concentration_strong(const ArrowheadSpec& spec, double eps) {
  spec.validate();
  const double threshold = threshold_strong(spec.d, spec.a_off, eps);
  if (spec.corner < threshold)
    fail(ErrorKind::BelowThreshold, "corner " + std::to_string(spec.corner) + " < " + std::to_string(threshold));
  return detail::sorted_match_report(spec, eigenvalues(spec), eps, threshold);
}

/// Nearest-diagonal concentration at or above threshold_weak. Each lambda_alpha
/// is matched to its nearest d_i (ties go to the smaller index) and the corner
/// excess is bounded by (n-1) eps + |sum_alpha (d_alpha - d_{i_alpha})|.
inline ConcentrationReport check_concentration_weak(const ArrowheadSpec& spec, double eps) {
  spec.validate();
  const double threshold = threshold_weak(spec.d, spec.a_off, eps);
  if (spec.corner < threshold)
    fail(ErrorKind::BelowThreshold, "corner " + std::to_string(spec.corner) + " < " + std::to_string(threshold));
  const Spectrum s = eigenvalues(spec);
  const int n = spec.n();

  ConcentrationReport r;
  r.epsilon = eps;
  r.threshold = threshold;
  r.deviations.resize(n - 1);
  r.matched.resize(n - 1);
  r.deviation_pass.resize(n - 1);
  double mismatch = 0.0;
  for (int alpha = 0; alpha < n - 1; ++alpha) {
    int best = 0;
    double best_dist = std::abs(s.values[alpha] - spec.d[0]);
    for (int i = 1; i < n - 1; ++i) {
      const double dist = std::abs(s.values[alpha] - spec.d[i]);
      if (dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
    r.matched[alpha] = best;
    r.deviations[alpha] = best_dist;
    r.deviation_pass[alpha] = best_dist < eps + kBoundMargin;
    mismatch += spec.d[alpha] - spec.d[best];
  }
  r.corner_excess = s.values[n - 1] - spec.corner;
  r.excess_bound = (n - 1) * eps + std::abs(mismatch);
  r.excess_pass = r.corner_excess >= -kBoundMargin && r.corner_excess < r.excess_bound + kBoundMargin;
  return r;
}

/// Per-index concentration for pairwise distinct d with eps at most half the
/// smallest gap.
inline ConcentrationReport check_concentration_distinct(const ArrowheadSpec& spec, double eps) {
  spec.validate();
  const double half_gap = half_min_gap(spec.d);
  if (half_gap <= 0.0) fail(ErrorKind::InvalidArgument, "diagonal entries are not pairwise distinct");
  if (!(eps > 0.0) || eps > half_gap)
    fail(ErrorKind::OutOfRange, "epsilon must lie in (0, " + std::to_string(half_gap) + "]");
  const double threshold = threshold_distinct(spec.d, spec.a_off, eps);
  if (spec.corner < threshold)
    fail(ErrorKind::BelowThreshold, "corner " + std::to_string(spec.corner) + " < " + std::to_string(threshold));
  return detail::sorted_match_report(spec, eigenvalues(spec), eps, threshold);
}

struct Deflation {
  double eigenvalue = 0.0;
  ArrowheadSpec reduced;
  int removed = -1;  // deleted index i0
  int merged = -1;   // index j0 (in the original numbering) carrying the merged border entry
};

/// Splits off the eigenvalue d_{i0} = d_{j0} of the first repeated pair
/// (i0 < j0). The reduced spec deletes row i0 and replaces a_{j0} by
/// sqrt(|a_{i0}|^2 + |a_{j0}|^2); its spectrum plus d_{i0} is the original one.
inline Deflation deflate_repeated(const ArrowheadSpec& spec) {
  spec.validate();
  const int m = static_cast<int>(spec.d.size());
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if (spec.d[i] != spec.d[j]) continue;
      Deflation out;
      out.eigenvalue = spec.d[i];
      out.removed = i;
      out.merged = j;
      out.reduced.corner = spec.corner;
      for (int k = 0; k < m; ++k) {
        if (k == i) continue;
        out.reduced.d.push_back(spec.d[k]);
        out.reduced.a_off.push_back(k == j ? Complex(std::hypot(std::abs(spec.a_off[i]), std::abs(spec.a_off[j])), 0.0)
                                           : spec.a_off[k]);
      }
      return out;
    }
  }
  fail(ErrorKind::InvalidArgument, "no repeated diagonal entries to deflate");
}

// ---------------------------------------------------------------------------
// Random specs. Diagonal entries are uniform on [-range, range]; border entries
// have modulus uniform on [0, range] and phase uniform on [0, 2pi).

inline ArrowheadSpec random_spec(Rng& rng, int n, double range = 10.0) {
  ArrowheadSpec s;
  s.d.resize(n - 1);
  s.a_off.resize(n - 1);
  for (int i = 0; i < n - 1; ++i) s.d[i] = rng.uniform(-range, range);
  for (int i = 0; i < n - 1; ++i) {
    const double r = rng.uniform(0.0, range);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.a_off[i] = std::polar(r, phase);
  }
  return s;
}

/// Random spec whose diagonal gaps are all at least min_gap (rejection sampling
/// on the diagonal only, so the conditional distribution stays uniform).
inline ArrowheadSpec random_spec_with_gap(Rng& rng, int n, double min_gap, double range = 10.0) {
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    ArrowheadSpec s = random_spec(rng, n, range);
    if (2.0 * half_min_gap(s.d) >= min_gap) return s;
  }
  fail(ErrorKind::NumericFailure, "could not sample a diagonal with the requested gap");
}

/// Random spec with at least one forced repeat on the diagonal.
inline ArrowheadSpec random_spec_with_repeat(Rng& rng, int n, double range = 10.0) {
  if (n < 3) fail(ErrorKind::InvalidArgument, "a repeated diagonal needs n >= 3");
  ArrowheadSpec s = random_spec(rng, n, range);
  const int i = rng.uniform_int(0, n - 2);
  int j = rng.uniform_int(0, n - 3);
  if (j >= i) ++j;
  s.d[j] = s.d[i];
  s.corner = rng.uniform(-range, range);
  return s;
}

struct SweepSummary {
  int n = 0;
  double eps = 0.0;
  double corner_fraction = 0.0;
  std::int64_t trials = 0;
  double max_dev = 0.0;
  double max_excess = 0.0;
  std::int64_t violations = 0;
};

/// Random specs with corner = fraction * threshold_strong. Records the largest
/// per-index deviation and corner excess, and counts specs violating the
/// at-threshold bounds. Deterministic given seed.
inline SweepSummary sweep_below_threshold(int n, double eps, std::int64_t trials, std::uint64_t seed,
                                          double corner_fraction = 0.5, double range = 10.0) {
  if (trials < 1) fail(ErrorKind::InvalidArgument, "sweep needs at least one trial");
  SweepSummary out{n, eps, corner_fraction, trials, 0.0, 0.0, 0};
  std::vector<double> dev(trials), exc(trials);
  std::vector<char> bad(trials);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    ArrowheadSpec s = random_spec(rng, n, range);
    s.corner = corner_fraction * threshold_strong(s.d, s.a_off, eps);
    const ConcentrationReport r = detail::sorted_match_report(s, eigenvalues(s), eps, s.corner);
    dev[t] = r.max_deviation();
    exc[t] = r.corner_excess;
    bad[t] = r.all_pass() ? 0 : 1;
  });
  for (std::int64_t t = 0; t < trials; ++t) {
    out.max_dev = std::max(out.max_dev, dev[t]);
    out.max_excess = std::max(out.max_excess, exc[t]);
    out.violations += bad[t];
  }
  return out;
}

enum class Lemma { Strong, Weak, Distinct };

inline const char* to_string(Lemma lemma) {
  switch (lemma) {
    case Lemma::Strong: return "strong";
    case Lemma::Weak: return "weak";
    case Lemma::Distinct: return "distinct";
  }
  return "?";
}

/// Random specs with the corner set exactly at the lemma's threshold; counts
/// specs whose report has a failing flag. For Lemma::Distinct the diagonal is
/// resampled until every gap is at least 2 eps.
inline SweepSummary lemma_sweep(Lemma lemma, int n, double eps, std::int64_t trials, std::uint64_t seed,
                                double range = 10.0) {
  SweepSummary out{n, eps, 1.0, trials, 0.0, 0.0, 0};
  if (trials <= 0) return out;
  std::vector<double> dev(trials), exc(trials);
  std::vector<char> bad(trials);
  parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
    Rng rng = Rng::stream(seed, t);
    ConcentrationReport r;
    if (lemma == Lemma::Distinct) {
      ArrowheadSpec s = random_spec_with_gap(rng, n, 2.0 * eps, range);
      s.corner = threshold_distinct(s.d, s.a_off, eps);
      r = check_concentration_distinct(s, eps);
    } else {
      ArrowheadSpec s = random_spec(rng, n, range);
      if (lemma == Lemma::Strong) {
        s.corner = threshold_strong(s.d, s.a_off, eps);
        r = check_concentration_strong(s, eps);
      } else {
        s.corner = threshold_weak(s.d, s.a_off, eps);
        r = check_concentration_weak(s, eps);
      }
    }
    dev[t] = r.max_deviation();
    exc[t] = r.corner_excess;
    bad[t] = r.all_pass() ? 0 : 1;
  });
  for (std::int64_t t = 0; t < trials; ++t) {
    out.max_dev = std::max(out.max_dev, dev[t]);
    out.max_excess = std::max(out.max_excess, exc[t]);
    out.violations += bad[t];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format: "n; d_1 ... d_{n-1}; re(a_1) im(a_1) ...; corner"

inline std::string to_text(const ArrowheadSpec& spec) {
  spec.validate();
  std::ostringstream os;
  os << std::setprecision(17) << spec.n() << ";";
  for (double x : spec.d) os << " " << x;
  os << ";";
  for (Complex z : spec.a_off) os << " " << z.real() << " " << z.imag();
  os << "; " << spec.corner;
  return os.str();
}

inline ArrowheadSpec from_text(std::string_view line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : line) {
    if (c == ';') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() != 4) fail(ErrorKind::Parse, "arrowhead spec needs 4 ';'-separated fields");

  auto numbers = [](const std::string& field) {
    std::istringstream is(field);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (...) {
        fail(ErrorKind::Parse, "bad number '" + tok + "'");
      }
      if (used != tok.size()) fail(ErrorKind::Parse, "bad number '" + tok + "'");
      out.push_back(v);
    }
    return out;
  };

  const auto n_field = numbers(parts[0]);
  if (n_field.size() != 1 || n_field[0] != std::floor(n_field[0]) || n_field[0] < 2)
    fail(ErrorKind::Parse, "bad dimension field");
  const int n = static_cast<int>(n_field[0]);
  ArrowheadSpec spec;
  spec.d = numbers(parts[1]);
  const auto a = numbers(parts[2]);
  const auto corner = numbers(parts[3]);
  if (static_cast<int>(spec.d.size()) != n - 1 || static_cast<int>(a.size()) != 2 * (n - 1) || corner.size() != 1)
    fail(ErrorKind::DimensionMismatch, "arrowhead spec fields disagree with n = " + std::to_string(n));
  for (int i = 0; i < n - 1; ++i) spec.a_off.emplace_back(a[2 * i], a[2 * i + 1]);
  spec.corner = corner[0];
  spec.validate();
  return spec;
}

inline constexpr std::string_view kSweepCsvHeader = "n,eps,corner_fraction,max_dev,max_excess,violations";

inline std::string to_csv_row(const SweepSummary& s) {
  std::ostringstream os;
  os << s.n << "," << std::setprecision(10) << s.eps << "," << s.corner_fraction << "," << std::scientific
     << std::setprecision(10) << s.max_dev << "," << s.max_excess << "," << s.violations;
  return os.str();
}

}  // namespace hessiancone::arrowhead
