#ifndef BIPHOTON_NUMERICS_HPP
#define BIPHOTON_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "biphoton/constants.hpp"
#include "biphoton/errors.hpp"

namespace biphoton {

// Trapezoid rule on a uniform grid.
inline double trapezoid_uniform(const std::vector<double>& f, double step) {
  if (f.size() < 2) return 0.0;
  double s = 0.0;
  for (double v : f) s += v;
  s -= 0.5 * (f.front() + f.back());
  return s * step;
}

// Composite Simpson on uniformly spaced samples.  An odd interval count is
// handled by Simpson 3/8 on the final three intervals.
inline double simpson_uniform(const std::vector<double>& f, double step) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n == 2) return 0.5 * step * (f[0] + f[1]);
  std::size_t intervals = n - 1;
  std::size_t even_end = intervals;  // index past the Simpson-1/3 block
  double tail = 0.0;
  if (intervals % 2 != 0) {
    if (intervals < 3) return 0.5 * step * (f[0] + f[1]);
    even_end = intervals - 3;
    const std::size_t i = even_end;
    tail = 3.0 * step / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  double s = 0.0;
  if (even_end >= 2) {
    s = f[0] + f[even_end];
    for (std::size_t i = 1; i < even_end; i += 2) s += 4.0 * f[i];
    for (std::size_t i = 2; i < even_end; i += 2) s += 2.0 * f[i];
    s *= step / 3.0;
  }
  return s + tail;
}

// Vertex abscissa of the parabola through (x1-h,y0), (x1,y1), (x1+h,y2).
// Returns x1 when the three points are collinear.
inline double quadratic_vertex(double x1, double h, double y0, double y1, double y2) {
  const double denom = y0 - 2.0 * y1 + y2;
  if (denom == 0.0) return x1;
  double d = 0.5 * (y0 - y2) / denom;
  d = std::clamp(d, -1.0, 1.0);
  return x1 + d * h;
}

// Phase unwrap relative to a reference: returns value in (ref-pi, ref+pi].
inline double unwrap_step(double phase, double ref) {
  double d = phase - ref;
  d -= std::floor(d / two_pi) * two_pi;
  if (d > pi) d -= two_pi;
  return ref + d;
}

// Wrap angle to (-pi, pi].
inline double wrap_angle(double a) {
  double d = a - std::floor(a / two_pi) * two_pi;
  if (d > pi) d -= two_pi;
  return d;
}

// Natural cubic spline (C^2) through strictly increasing abscissae.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
      throw ConfigError("cubic spline needs >= 2 points with matching sizes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1]))
        throw ConfigError("cubic spline abscissae must be strictly increasing");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // Thomas algorithm for the second-derivative system, natural ends.
    std::vector<double> a(n, 0.0), b(n, 0.0), cdiag(n, 0.0), r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x_[i] - x_[i - 1];
      const double hr = x_[i + 1] - x_[i];
      a[i] = hl / 6.0;
      b[i] = (hl + hr) / 3.0;
      cdiag[i] = hr / 6.0;
      r[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * cdiag[i - 1];
      r[i] -= w * r[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = (r[i] - cdiag[i] * m_[i + 1]) / b[i];
      if (i == 1) break;
    }
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  double operator()(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h;
    const double B = (x - x_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

  double derivative(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - x) / h;
    const double B = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * B * B - 1.0) * m_[i + 1] - (3.0 * A * A - 1.0) * m_[i]) * h / 6.0;
  }

 private:
  std::size_t segment(double x) const {
    // clamp to the table range; domain policing is done by the caller
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
  }

  std::vector<double> x_, y_, m_;
};

// Rectangular table z(w, omega): cubic (spline) along omega on every w row,
// linear blending between the two bracketing rows.
class Table2D {
 public:
  Table2D() = default;

  Table2D(std::vector<double> w, std::vector<double> omega,
          const std::vector<std::vector<double>>& values)
      : w_(std::move(w)), omega_(std::move(omega)) {
    if (w_.size() < 2 || omega_.size() < 2)
      throw ConfigError("2-D table needs at least a 2x2 grid");
    if (values.size() != w_.size())
      throw ConfigError("2-D table row count mismatch");
    for (std::size_t i = 1; i < w_.size(); ++i)
      if (!(w_[i] > w_[i - 1]))
        throw ConfigError("2-D table w axis must be strictly increasing");
    rows_.reserve(w_.size());
    for (const auto& row : values) {
      if (row.size() != omega_.size())
        throw ConfigError("2-D table column count mismatch");
      rows_.emplace_back(omega_, row);
    }
  }

  double w_min() const { return w_.front(); }
  double w_max() const { return w_.back(); }
  double omega_min() const { return omega_.front(); }
  double omega_max() const { return omega_.back(); }

  double operator()(double w, double omega) const {
    std::size_t i;
    if (w <= w_.front()) {
      i = 0;
    } else if (w >= w_.back()) {
      i = w_.size() - 2;
    } else {
      auto it = std::upper_bound(w_.begin(), w_.end(), w);
      i = static_cast<std::size_t>(it - w_.begin()) - 1;
    }
    const double t = (w - w_[i]) / (w_[i + 1] - w_[i]);
    return (1.0 - t) * rows_[i](omega) + t * rows_[i + 1](omega);
  }

 private:
  std::vector<double> w_, omega_;
  std::vector<CubicSpline> rows_;
};

// Chunked parallel loop with index-addressed output: results are deterministic
// regardless of scheduling.  Falls back to serial for small workloads.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (n < 64 || hw == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(hw, 8);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t t = 0; t < workers; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

// FNV-1a 64-bit hash of a byte string; used for manifest content hashes.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace biphoton

#endif  // BIPHOTON_NUMERICS_HPP
