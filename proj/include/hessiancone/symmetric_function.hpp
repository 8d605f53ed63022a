#pragma once

// Symmetric concave functions of eigenvalues and their Garding cones.
//
//   sigma_root(k)        f = sigma_k^{1/k}              on Gamma_k
//   monge_ampere         f = sigma_n^{1/n}              on Gamma_n
//   hessian_quotient     f = (sigma_l/sigma_k)^{1/(l-k)} on Gamma_l
//
// All three are homogeneous of degree one, positive on their cone and vanish
// on its boundary, so sup over the cone boundary is 0 for every kind.

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hessiancone/error.hpp"

namespace hessiancone {

using Lambda = std::vector<double>;

inline constexpr int kMaxDimension = 16;

enum class FunctionKind { SigmaRoot, MongeAmpere, HessianQuotient };

namespace detail {

/// e[j] = sigma_j(lambda without entry `skip`) for j = 0..k.
inline void elementary_symmetric(std::span<const double> lambda, int k, std::span<double> e, int skip = -1) {
  e[0] = 1.0;
  for (int j = 1; j <= k; ++j) e[j] = 0.0;
  for (int i = 0; i < static_cast<int>(lambda.size()); ++i) {
    if (i == skip) continue;
    const double x = lambda[i];
    for (int j = k; j >= 1; --j) e[j] += x * e[j - 1];
  }
}

inline int parse_int(std::string_view text, std::string_view what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(std::string(text), &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    fail(ErrorKind::Parse, "bad integer for " + std::string(what) + ": '" + std::string(text) + "'");
  }
}

}  // namespace detail

class SymmetricFunction {
 public:
  static SymmetricFunction sigma_root(int n, int k) {
    check_dim(n);
    if (k < 1 || k > n) fail(ErrorKind::InvalidArgument, "sigma_k needs 1 <= k <= n");
    return SymmetricFunction(FunctionKind::SigmaRoot, n, 0, k);
  }
  static SymmetricFunction monge_ampere(int n) {
    check_dim(n);
    return SymmetricFunction(FunctionKind::MongeAmpere, n, 0, n);
  }
  static SymmetricFunction hessian_quotient(int n, int k, int l) {
    check_dim(n);
    if (k < 0 || k >= l || l > n) fail(ErrorKind::InvalidArgument, "quotient needs 0 <= k < l <= n");
    return SymmetricFunction(FunctionKind::HessianQuotient, n, k, l);
  }

  /// CLI names: sigma1, sigmaK:k, ma, quotient:k:l.
  static SymmetricFunction parse(std::string_view name, int n) {
    if (name == "sigma1") return sigma_root(n, 1);
    if (name == "ma") return monge_ampere(n);
    if (name.starts_with("sigmaK:")) return sigma_root(n, detail::parse_int(name.substr(7), "k"));
    if (name.starts_with("quotient:")) {
      const auto rest = name.substr(9);
      const auto colon = rest.find(':');
      if (colon == std::string_view::npos) fail(ErrorKind::Parse, "quotient kind needs quotient:k:l");
      return hessian_quotient(n, detail::parse_int(rest.substr(0, colon), "k"),
                              detail::parse_int(rest.substr(colon + 1), "l"));
    }
    fail(ErrorKind::Parse, "unknown function kind '" + std::string(name) + "'");
  }

  [[nodiscard]] FunctionKind kind() const { return kind_; }
  [[nodiscard]] int dim() const { return n_; }
  /// m such that the cone is Gamma_m.
  [[nodiscard]] int cone_order() const { return upper_; }
  [[nodiscard]] int lower_order() const { return lower_; }
  [[nodiscard]] double boundary_sup() const { return 0.0; }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case FunctionKind::SigmaRoot: return upper_ == 1 ? "sigma1" : "sigmaK:" + std::to_string(upper_);
      case FunctionKind::MongeAmpere: return "ma";
      case FunctionKind::HessianQuotient: return "quotient:" + std::to_string(lower_) + ":" + std::to_string(upper_);
    }
    return "?";
  }

  /// sigma_j(lambda) > 0 for j = 1..m.
  [[nodiscard]] bool in_cone(std::span<const double> lambda) const {
    check_size(lambda);
    std::array<double, kMaxDimension + 1> e{};
    detail::elementary_symmetric(lambda, upper_, e);
    for (int j = 1; j <= upper_; ++j)
      if (!(e[j] > 0.0)) return false;
    return true;
  }

  [[nodiscard]] double value(std::span<const double> lambda) const {
    double f = 0.0;
    evaluate(lambda, &f, {});
    return f;
  }

  void gradient(std::span<const double> lambda, std::span<double> grad) const {
    double f = 0.0;
    evaluate(lambda, &f, grad);
  }

  [[nodiscard]] Lambda gradient(std::span<const double> lambda) const {
    Lambda g(n_);
    gradient(lambda, g);
    return g;
  }

  /// Value and (optionally, when grad is non-empty) gradient. Throws NotInCone
  /// outside the cone.
  void evaluate(std::span<const double> lambda, double* value, std::span<double> grad) const {
    if (!try_evaluate(lambda, value, grad)) fail(ErrorKind::NotInCone, "eigenvalue point outside " + cone_name());
  }

  /// Like evaluate but reports failure instead of throwing.
  bool try_evaluate(std::span<const double> lambda, double* value, std::span<double> grad) const {
    check_size(lambda);
    std::array<double, kMaxDimension + 1> e{};
    detail::elementary_symmetric(lambda, upper_, e);
    for (int j = 1; j <= upper_; ++j)
      if (!(e[j] > 0.0)) return false;
    const double top = e[upper_];
    if (kind_ != FunctionKind::HessianQuotient) {
      const double f = std::pow(top, 1.0 / upper_);
      if (value) *value = f;
      if (!grad.empty()) {
        std::array<double, kMaxDimension + 1> ei{};
        const double scale = f / (upper_ * top);
        for (int i = 0; i < n_; ++i) {
          detail::elementary_symmetric(lambda, upper_ - 1, ei, i);
          grad[i] = scale * ei[upper_ - 1];
        }
      }
      return true;
    }
    const double bottom = e[lower_];
    // Relative to |lambda|^k so the guard commutes with scaling along rays.
    double size = 0.0;
    for (const double v : lambda) size = std::max(size, std::abs(v));
    if (bottom < 1e-12 * std::pow(size, lower_)) return false;
    const double p = upper_ - lower_;
    const double f = std::pow(top / bottom, 1.0 / p);
    if (value) *value = f;
    if (!grad.empty()) {
      std::array<double, kMaxDimension + 1> ei{};
      for (int i = 0; i < n_; ++i) {
        detail::elementary_symmetric(lambda, upper_ - 1, ei, i);
        const double d_top = ei[upper_ - 1] / top;
        const double d_bottom = lower_ == 0 ? 0.0 : ei[lower_ - 1] / bottom;
        grad[i] = f / p * (d_top - d_bottom);
      }
    }
    return true;
  }

  [[nodiscard]] std::string cone_name() const { return "Gamma_" + std::to_string(upper_); }

 private:
  SymmetricFunction(FunctionKind kind, int n, int lower, int upper) : kind_(kind), n_(n), lower_(lower), upper_(upper) {}

  static void check_dim(int n) {
    if (n < 1 || n > kMaxDimension) fail(ErrorKind::InvalidArgument, "dimension must lie in [1, 16]");
  }
  void check_size(std::span<const double> lambda) const {
    if (static_cast<int>(lambda.size()) != n_)
      fail(ErrorKind::DimensionMismatch,
           "expected " + std::to_string(n_) + " eigenvalues, got " + std::to_string(lambda.size()));
  }

  FunctionKind kind_;
  int n_;
  int lower_;
  int upper_;
};

}  // namespace hessiancone
