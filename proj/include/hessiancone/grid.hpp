#pragma once

// Uniform node grids on flat product manifolds with one Dirichlet direction.
//
// Complex model: T^{n-1} x (S^1 x [0,1]) with real axes ordered
// x_1, y_1, ..., x_n, y_n. Every axis is periodic with unit period except
// x_n, which runs over [0,1] with nodes on both boundary faces.
//
// Real model: T^{d-1} x [0,1], axes x_1..x_d, the last one Dirichlet.
//
// Nodes are stored row-major with the last axis fastest. A periodic axis with
// N intervals has N nodes (the node at 1 is identified with the node at 0);
// the Dirichlet axis with N intervals has N+1 nodes.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hessiancone/error.hpp"
#include "hessiancone/parallel.hpp"

namespace hessiancone {

enum class Model { Complex, Real };

inline constexpr int kMaxAxes = 6;

class GridGeometry {
 public:
  /// n complex dimensions; `intervals` gives N per real axis (one entry
  /// applies to all axes).
  static std::shared_ptr<const GridGeometry> complex_model(int n, std::vector<int> intervals) {
    if (n < 2 || 2 * n > kMaxAxes) fail(ErrorKind::InvalidArgument, "complex dimension must lie in [2, 3]");
    return std::shared_ptr<const GridGeometry>(new GridGeometry(Model::Complex, n, 2 * n, 2 * (n - 1), std::move(intervals)));
  }
  static std::shared_ptr<const GridGeometry> complex_model(int n, int intervals) {
    return complex_model(n, std::vector<int>{intervals});
  }

  static std::shared_ptr<const GridGeometry> real_model(int d, std::vector<int> intervals) {
    if (d < 1 || d > kMaxAxes) fail(ErrorKind::InvalidArgument, "real dimension must lie in [1, 6]");
    return std::shared_ptr<const GridGeometry>(new GridGeometry(Model::Real, d, d, d - 1, std::move(intervals)));
  }
  static std::shared_ptr<const GridGeometry> real_model(int d, int intervals) {
    return real_model(d, std::vector<int>{intervals});
  }

  [[nodiscard]] Model model() const { return model_; }
  [[nodiscard]] bool is_complex() const { return model_ == Model::Complex; }
  /// Complex dimension n, or real dimension d for the real model.
  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] int axes() const { return axes_; }
  [[nodiscard]] int normal_axis() const { return normal_; }
  [[nodiscard]] int intervals(int axis) const { return intervals_[axis]; }
  [[nodiscard]] int extent(int axis) const { return extent_[axis]; }
  [[nodiscard]] double h(int axis) const { return 1.0 / intervals_[axis]; }
  /// Largest spacing over all axes.
  [[nodiscard]] double h_max() const {
    double m = 0.0;
    for (int a = 0; a < axes_; ++a) m = std::max(m, h(a));
    return m;
  }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t stride(int axis) const { return stride_[axis]; }
  [[nodiscard]] bool periodic(int axis) const { return axis != normal_; }

  [[nodiscard]] int coord(std::size_t node, int axis) const {
    return static_cast<int>((node / stride_[axis]) % static_cast<std::size_t>(extent_[axis]));
  }
  [[nodiscard]] double position(std::size_t node, int axis) const { return coord(node, axis) * h(axis); }

  [[nodiscard]] std::size_t index(std::span<const int> coords) const {
    std::size_t idx = 0;
    for (int a = 0; a < axes_; ++a) {
      int c = coords[a];
      if (periodic(a)) c = ((c % extent_[a]) + extent_[a]) % extent_[a];
      else if (c < 0 || c >= extent_[a]) fail(ErrorKind::OutOfRange, "node coordinate outside the Dirichlet range");
      idx += static_cast<std::size_t>(c) * stride_[a];
    }
    return idx;
  }

  [[nodiscard]] bool on_boundary(std::size_t node) const {
    const int c = coord(node, normal_);
    return c == 0 || c == intervals_[normal_];
  }

  /// Distance to the boundary faces, min(x_n, 1 - x_n).
  [[nodiscard]] double boundary_distance(std::size_t node) const {
    const double x = position(node, normal_);
    return std::min(x, 1.0 - x);
  }

  /// Neighbor one step along `axis` (+1 when up, -1 otherwise). Periodic axes
  /// wrap; along the Dirichlet axis the result is -1 past either face.
  [[nodiscard]] std::int32_t neighbor(std::size_t node, int axis, bool up) const {
    return (up ? plus_ : minus_)[static_cast<std::size_t>(axis) * size_ + node];
  }

  /// Interior nodes in increasing index order.
  [[nodiscard]] const std::vector<std::int32_t>& interior() const { return interior_; }
  /// Boundary nodes in increasing index order.
  [[nodiscard]] const std::vector<std::int32_t>& boundary() const { return boundary_; }

  [[nodiscard]] std::string describe() const {
    std::string s = is_complex() ? "complex n=" : "real d=";
    s += std::to_string(dim_) + " intervals";
    for (int a = 0; a < axes_; ++a) s += (a ? "x" : " ") + std::to_string(intervals_[a]);
    return s;
  }

  [[nodiscard]] bool same_shape(const GridGeometry& other) const {
    if (model_ != other.model_ || dim_ != other.dim_) return false;
    for (int a = 0; a < axes_; ++a)
      if (intervals_[a] != other.intervals_[a]) return false;
    return true;
  }

 private:
  GridGeometry(Model model, int dim, int axes, int normal, std::vector<int> intervals)
      : model_(model), dim_(dim), axes_(axes), normal_(normal) {
    if (intervals.size() == 1) intervals.assign(axes, intervals[0]);
    if (static_cast<int>(intervals.size()) != axes)
      fail(ErrorKind::DimensionMismatch, "need one interval count per real axis");
    for (int a = 0; a < axes; ++a) {
      if (intervals[a] < 3) fail(ErrorKind::InvalidArgument, "each axis needs at least 3 intervals");
      intervals_[a] = intervals[a];
      extent_[a] = a == normal ? intervals[a] + 1 : intervals[a];
    }
    std::size_t s = 1;
    for (int a = axes - 1; a >= 0; --a) {
      stride_[a] = s;
      s *= static_cast<std::size_t>(extent_[a]);
    }
    size_ = s;
    if (size_ > static_cast<std::size_t>(INT32_MAX)) fail(ErrorKind::InvalidArgument, "grid too large");

    plus_.resize(static_cast<std::size_t>(axes) * size_);
    minus_.resize(static_cast<std::size_t>(axes) * size_);
    for (int a = 0; a < axes; ++a) {
      const std::size_t base = static_cast<std::size_t>(a) * size_;
      const int e = extent_[a];
      const std::size_t st = stride_[a];
      parallel_for(size_, [&](std::size_t node) {
        const int c = coord(node, a);
        const std::size_t row = node - static_cast<std::size_t>(c) * st;
        if (a == normal_) {
          plus_[base + node] = c + 1 < e ? static_cast<std::int32_t>(node + st) : -1;
          minus_[base + node] = c > 0 ? static_cast<std::int32_t>(node - st) : -1;
        } else {
          plus_[base + node] = static_cast<std::int32_t>(row + static_cast<std::size_t>((c + 1) % e) * st);
          minus_[base + node] = static_cast<std::int32_t>(row + static_cast<std::size_t>((c + e - 1) % e) * st);
        }
      });
    }
    for (std::size_t node = 0; node < size_; ++node)
      (on_boundary(node) ? boundary_ : interior_).push_back(static_cast<std::int32_t>(node));
  }

  Model model_;
  int dim_;
  int axes_;
  int normal_;
  std::array<int, kMaxAxes> intervals_{};
  std::array<int, kMaxAxes> extent_{};
  std::array<std::size_t, kMaxAxes> stride_{};
  std::size_t size_ = 0;
  std::vector<std::int32_t> plus_;
  std::vector<std::int32_t> minus_;
  std::vector<std::int32_t> interior_;
  std::vector<std::int32_t> boundary_;
};

using GridPtr = std::shared_ptr<const GridGeometry>;

/// One real value per node.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0) : grid(std::move(g)), values(grid->size(), fill) {}

  template <class Fn>
  static ScalarField from_function(GridPtr g, Fn&& fn) {
    ScalarField f(g);
    std::array<double, kMaxAxes> x{};
    for (std::size_t node = 0; node < g->size(); ++node) {
      for (int a = 0; a < g->axes(); ++a) x[a] = g->position(node, a);
      f.values[node] = fn(std::span<const double>(x.data(), g->axes()));
    }
    return f;
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  [[nodiscard]] std::size_t size() const { return values.size(); }
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b, const char* what) {
  if (!a.grid || !b.grid || !a.grid->same_shape(*b.grid))
    fail(ErrorKind::DimensionMismatch, std::string(what) + ": fields live on different grids");
}

}  // namespace hessiancone
