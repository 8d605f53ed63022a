#pragma once

// Discrete complex and real Hessians, their pointwise spectra, and the
// linearization of u -> f(lambda(chi + Hess u)).
//
// With z = x + i y, the complex Hessian is
//   u_{i jbar} = 1/4 [ (u_{x_i x_j} + u_{y_i y_j}) + i (u_{x_i y_j} - u_{y_i x_j}) ],
// assembled from centered second differences (mixed ones on the 4-point
// diagonal stencil). The assembly is Hermitian by construction.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hessiancone/error.hpp"
#include "hessiancone/grid.hpp"
#include "hessiancone/parallel.hpp"
#include "hessiancone/symmetric_function.hpp"

namespace hessiancone {

using Complex = std::complex<double>;
using Form = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAxes, kMaxAxes>;

/// Eigenvalues closer than this are treated as one cluster when linearizing.
inline constexpr double kClusterTolerance = 1e-8;

/// An n x n Hermitian matrix per node, or one matrix shared by all nodes.
class HermitianFormField {
 public:
  HermitianFormField() = default;

  static HermitianFormField uniform(const Form& m, std::size_t nodes) {
    check_hermitian(m);
    HermitianFormField f(static_cast<int>(m.rows()), nodes, true);
    f.store(0, m);
    return f;
  }
  static HermitianFormField identity(int n, std::size_t nodes) {
    return uniform(Form::Identity(n, n), nodes);
  }
  static HermitianFormField per_node(int n, std::size_t nodes) { return HermitianFormField(n, nodes, false); }

  [[nodiscard]] int dim() const { return n_; }
  [[nodiscard]] std::size_t nodes() const { return nodes_; }
  [[nodiscard]] bool is_uniform() const { return uniform_; }

  [[nodiscard]] Complex entry(std::size_t node, int i, int j) const {
    return data_[offset(node) + static_cast<std::size_t>(i * n_ + j)];
  }
  [[nodiscard]] Form at(std::size_t node) const {
    Form m(n_, n_);
    const std::size_t base = offset(node);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = data_[base + static_cast<std::size_t>(i * n_ + j)];
    return m;
  }
  void set(std::size_t node, const Form& m) {
    if (uniform_) fail(ErrorKind::InvalidArgument, "cannot set one node of a uniform form field");
    store(node, m);
  }

 private:
  HermitianFormField(int n, std::size_t nodes, bool uniform)
      : n_(n), nodes_(nodes), uniform_(uniform), data_((uniform ? 1 : nodes) * static_cast<std::size_t>(n * n)) {}

  [[nodiscard]] std::size_t offset(std::size_t node) const {
    return uniform_ ? 0 : node * static_cast<std::size_t>(n_ * n_);
  }
  void store(std::size_t node, const Form& m) {
    if (m.rows() != n_ || m.cols() != n_) fail(ErrorKind::DimensionMismatch, "form has the wrong size");
    const std::size_t base = offset(node);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) data_[base + static_cast<std::size_t>(i * n_ + j)] = m(i, j);
  }
  static void check_hermitian(const Form& m) {
    if (m.rows() != m.cols()) fail(ErrorKind::DimensionMismatch, "form must be square");
    if (!(m - m.adjoint()).isZero(1e-12)) fail(ErrorKind::InvalidArgument, "form is not Hermitian");
  }

  int n_ = 0;
  std::size_t nodes_ = 0;
  bool uniform_ = true;
  std::vector<Complex> data_;
};

namespace detail {

/// Full symmetric table of centered second differences D_kl u at an interior
/// node; d has room for kMaxAxes x kMaxAxes entries, row stride kMaxAxes.
inline void second_differences(const GridGeometry& g, const double* u, std::size_t node, double* d,
                               const bool* pairs = nullptr) {
  const int m = g.axes();
  const double c = u[node];
  for (int k = 0; k < m; ++k) {
    const std::int32_t kp = g.neighbor(node, k, true);
    const std::int32_t km = g.neighbor(node, k, false);
    const double hk = g.h(k);
    d[k * kMaxAxes + k] = (u[kp] - 2.0 * c + u[km]) / (hk * hk);
    for (int l = k + 1; l < m; ++l) {
      if (pairs && !pairs[k * kMaxAxes + l]) {
        d[k * kMaxAxes + l] = d[l * kMaxAxes + k] = 0.0;
        continue;
      }
      const double v = (u[g.neighbor(kp, l, true)] - u[g.neighbor(kp, l, false)] - u[g.neighbor(km, l, true)] +
                        u[g.neighbor(km, l, false)]) /
                       (4.0 * hk * g.h(l));
      d[k * kMaxAxes + l] = d[l * kMaxAxes + k] = v;
    }
  }
}

/// Hessian form from a table of real second derivatives (complex or real model).
inline void form_from_second(const GridGeometry& g, const double* d, Form& out) {
  const int n = g.dim();
  out.resize(n, n);
  if (!g.is_complex()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = d[i * kMaxAxes + j];
    return;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
      const double re = 0.25 * (d[xi * kMaxAxes + xj] + d[yi * kMaxAxes + yj]);
      const double im = i == j ? 0.0 : 0.25 * (d[xi * kMaxAxes + yj] - d[yi * kMaxAxes + xj]);
      out(i, j) = Complex(re, im);
    }
}

}  // namespace detail

/// Pointwise Hermitian spectral work: eigenvalues ascending, optional
/// eigenvectors. n = 2 uses the closed form.
class SpectralKernel {
 public:
  void eigenvalues(const Form& g, double* lambda) {
    if (g.rows() == 2) {
      const double a = g(0, 0).real(), c = g(1, 1).real();
      const double mean = 0.5 * (a + c);
      const double r = std::hypot(0.5 * (a - c), std::abs(g(0, 1)));
      lambda[0] = mean - r;
      lambda[1] = mean + r;
      return;
    }
    solver_.compute(g, Eigen::EigenvaluesOnly);
    if (solver_.info() != Eigen::Success) fail(ErrorKind::NumericFailure, "pointwise eigensolver failed");
    for (int i = 0; i < g.rows(); ++i) lambda[i] = solver_.eigenvalues()[i];
  }

  /// B = sum_p f_p v_p v_p^*, with f_p averaged over eigenvalue clusters.
  /// lambda and grad are the eigenvalues of g and the gradient of f there.
  void spectral_derivative(const Form& g, const double* lambda, const double* grad, Form& B) {
    const int n = static_cast<int>(g.rows());
    B.resize(n, n);
    if (n == 2) {
      const double gap = lambda[1] - lambda[0];
      if (gap < kClusterTolerance) {
        B.setIdentity();
        B *= 0.5 * (grad[0] + grad[1]);
        return;
      }
      // Spectral projectors (lambda_2 - g)/gap and (g - lambda_1)/gap.
      const Form I = Form::Identity(2, 2);
      B = (grad[0] * (lambda[1] * I - g) + grad[1] * (g - lambda[0] * I)) / gap;
      return;
    }
    solver_.compute(g, Eigen::ComputeEigenvectors);
    if (solver_.info() != Eigen::Success) fail(ErrorKind::NumericFailure, "pointwise eigensolver failed");
    std::array<double, kMaxAxes> fbar{};
    int start = 0;
    while (start < n) {
      int end = start + 1;
      while (end < n && lambda[end] - lambda[end - 1] < kClusterTolerance) ++end;
      double avg = 0.0;
      for (int p = start; p < end; ++p) avg += grad[p];
      avg /= end - start;
      for (int p = start; p < end; ++p) fbar[p] = avg;
      start = end;
    }
    const auto& V = solver_.eigenvectors();
    B.setZero();
    for (int p = 0; p < n; ++p) B += fbar[p] * V.col(p) * V.col(p).adjoint();
  }

 private:
  Eigen::SelfAdjointEigenSolver<Form> solver_;
};

/// g = chi + Hess u at interior nodes; boundary nodes hold chi alone.
inline HermitianFormField form_field(const ScalarField& u, const HermitianFormField& chi) {
  const GridGeometry& g = *u.grid;
  if (chi.dim() != g.dim() || chi.nodes() != g.size())
    fail(ErrorKind::DimensionMismatch, "chi does not match the grid");
  HermitianFormField out = HermitianFormField::per_node(g.dim(), g.size());
  parallel_chunks(g.size(), [&](std::size_t lo, std::size_t hi) {
    std::array<double, kMaxAxes * kMaxAxes> d{};
    Form H;
    for (std::size_t node = lo; node < hi; ++node) {
      if (g.on_boundary(node)) {
        out.set(node, chi.at(node));
        continue;
      }
      detail::second_differences(g, u.values.data(), node, d.data());
      detail::form_from_second(g, d.data(), H);
      out.set(node, chi.at(node) + H);
    }
  });
  return out;
}

/// chi + sqrt(-1) d dbar u on the complex model.
inline HermitianFormField complex_hessian(const ScalarField& u, const HermitianFormField& chi) {
  if (!u.grid->is_complex()) fail(ErrorKind::InvalidArgument, "complex_hessian needs the complex model");
  return form_field(u, chi);
}

/// chi + Hess u on the real model.
inline HermitianFormField real_hessian(const ScalarField& u, const HermitianFormField& chi) {
  if (u.grid->is_complex()) fail(ErrorKind::InvalidArgument, "real_hessian needs the real model");
  return form_field(u, chi);
}

/// Ascending eigenvalues per node, row-major (node, index).
struct EigenField {
  int n = 0;
  std::vector<double> values;
  [[nodiscard]] std::span<const double> at(std::size_t node) const {
    return {values.data() + node * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
};

inline EigenField eigen_field(const HermitianFormField& g) {
  EigenField out;
  out.n = g.dim();
  out.values.resize(g.nodes() * static_cast<std::size_t>(g.dim()));
  parallel_chunks(g.nodes(), [&](std::size_t lo, std::size_t hi) {
    SpectralKernel kernel;
    for (std::size_t node = lo; node < hi; ++node)
      kernel.eigenvalues(g.at(node), out.values.data() + node * static_cast<std::size_t>(g.dim()));
  });
  return out;
}

/// Symmetric real coefficients C_kl over the real axes, per node, so that the
/// linearized operator is sum_{k,l} C_kl D_kl. Stored as full axes x axes
/// blocks; only interior nodes are filled.
struct CoefficientField {
  GridPtr grid;
  int axes = 0;
  std::vector<double> values;
  /// active[k * kMaxAxes + l] is false when C_kl vanishes at every node.
  std::array<bool, kMaxAxes * kMaxAxes> active{};

  [[nodiscard]] const double* at(std::size_t node) const {
    return values.data() + node * static_cast<std::size_t>(axes * axes);
  }
  double* at(std::size_t node) { return values.data() + node * static_cast<std::size_t>(axes * axes); }
  [[nodiscard]] double get(std::size_t node, int k, int l) const { return at(node)[k * axes + l]; }
};

namespace detail {

/// Real coefficient block from the Hermitian derivative B of f(lambda(g)).
inline void coefficients_from_derivative(const GridGeometry& g, const Form& B, double* C) {
  const int m = g.axes();
  const int n = g.dim();
  if (!g.is_complex()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C[i * m + j] = B(i, j).real();
    return;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = 0.25 * B(i, j).real();
      const double im = 0.25 * B(i, j).imag();
      const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
      C[xi * m + xj] = re;
      C[yi * m + yj] = re;
      C[xi * m + yj] = im;
      C[yi * m + xj] = -im;
    }
}

}  // namespace detail

/// Outcome of evaluating f(lambda(chi + Hess u)) over the interior.
struct OperatorEvaluation {
  bool admissible = true;
  /// Smallest interior node index outside the cone, or -1.
  std::int64_t bad_node = -1;
};

/// f(lambda(chi + Hess u)) at interior nodes into `values` (boundary entries
/// untouched), optionally with the linearization coefficients.
inline OperatorEvaluation evaluate_operator(const ScalarField& u, const HermitianFormField& chi,
                                            const SymmetricFunction& fun, std::vector<double>& values,
                                            CoefficientField* coeff = nullptr) {
  const GridGeometry& g = *u.grid;
  if (fun.dim() != g.dim()) fail(ErrorKind::DimensionMismatch, "function dimension differs from the grid");
  if (chi.dim() != g.dim() || chi.nodes() != g.size()) fail(ErrorKind::DimensionMismatch, "chi does not match the grid");
  values.resize(g.size());
  const int m = g.axes();
  if (coeff) {
    coeff->grid = u.grid;
    coeff->axes = m;
    coeff->values.assign(g.size() * static_cast<std::size_t>(m * m), 0.0);
  }
  const auto& interior = g.interior();
  std::vector<std::int64_t> first_bad(1 + interior.size() / 1024, -1);
  parallel_chunks(interior.size(), [&](std::size_t lo, std::size_t hi) {
    std::array<double, kMaxAxes * kMaxAxes> d{};
    std::array<double, kMaxAxes> lambda{};
    std::array<double, kMaxAxes> grad{};
    Form H, B;
    SpectralKernel kernel;
    std::int64_t bad = -1;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t node = static_cast<std::size_t>(interior[k]);
      detail::second_differences(g, u.values.data(), node, d.data());
      detail::form_from_second(g, d.data(), H);
      H += chi.at(node);
      kernel.eigenvalues(H, lambda.data());
      const std::span<const double> lam(lambda.data(), static_cast<std::size_t>(g.dim()));
      const std::span<double> gr = coeff ? std::span<double>(grad.data(), static_cast<std::size_t>(g.dim()))
                                         : std::span<double>();
      double f = 0.0;
      if (!fun.try_evaluate(lam, &f, gr)) {
        if (bad < 0) bad = static_cast<std::int64_t>(node);
        values[node] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      values[node] = f;
      if (coeff) {
        kernel.spectral_derivative(H, lambda.data(), grad.data(), B);
        detail::coefficients_from_derivative(g, B, coeff->at(node));
      }
    }
    if (bad >= 0) first_bad[lo / 1024] = bad;
  });
  OperatorEvaluation ev;
  for (std::int64_t b : first_bad)
    if (b >= 0 && (ev.bad_node < 0 || b < ev.bad_node)) ev.bad_node = b;
  ev.admissible = ev.bad_node < 0;
  if (coeff) {
    coeff->active.fill(false);
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) {
        bool any = false;
        for (std::size_t idx = 0; idx < interior.size() && !any; ++idx)
          any = coeff->get(static_cast<std::size_t>(interior[idx]), k, l) != 0.0;
        coeff->active[k * kMaxAxes + l] = any;
      }
  }
  return ev;
}

/// Per-node Hermitian coefficients F^{i jbar} = dF/dg_{i jbar} at chi + Hess u.
inline HermitianFormField linearize(const ScalarField& u, const HermitianFormField& chi, const SymmetricFunction& fun) {
  const GridGeometry& g = *u.grid;
  const HermitianFormField forms = form_field(u, chi);
  HermitianFormField out = HermitianFormField::per_node(g.dim(), g.size());
  SpectralKernel kernel;
  std::array<double, kMaxAxes> lambda{}, grad{};
  for (const std::int32_t idx : g.interior()) {
    const auto node = static_cast<std::size_t>(idx);
    const Form G = forms.at(node);
    kernel.eigenvalues(G, lambda.data());
    double f = 0.0;
    if (!fun.try_evaluate(std::span<const double>(lambda.data(), g.dim()), &f,
                          std::span<double>(grad.data(), g.dim())))
      fail(ErrorKind::NotInCone, "linearize: node " + std::to_string(node) + " is not admissible");
    Form B;
    kernel.spectral_derivative(G, lambda.data(), grad.data(), B);
    out.set(node, B);
  }
  return out;
}

}  // namespace hessiancone
