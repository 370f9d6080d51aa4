#include "gsge/analytic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gsge {

TrigField::TrigField(int n, std::array<double, 3> base, std::vector<TrigMode> modes)
    : n_(n), base_(base), modes_(std::move(modes)) {
  if (n < 1 || n > kMaxDim) throw ParameterError("trig field dimension out of range");
  for (auto& m : modes_) {
    if (static_cast<int>(m.frequency.size()) != n) {
      throw InputError("trig mode needs one frequency per axis");
    }
    if (m.phase.empty()) m.phase.assign(static_cast<std::size_t>(n), 0.0);
    if (static_cast<int>(m.phase.size()) != n) throw InputError("trig mode needs one phase per axis");
  }
}

double TrigField::value(const Vector& x, double t) const {
  return jet(x, t).u;
}

Jet TrigField::jet(const Vector& x, double t) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Jet j = Jet::zero(n_);
  j.u = base_[0] + base_[1] * t + base_[2] * t * t;
  j.ut = base_[1] + 2.0 * base_[2] * t;
  j.utt = 2.0 * base_[2];
  std::vector<double> c(static_cast<std::size_t>(n_)), s(static_cast<std::size_t>(n_)),
      w(static_cast<std::size_t>(n_));
  for (const auto& m : modes_) {
    const double a = m.amplitude[0] + m.amplitude[1] * t + m.amplitude[2] * t * t;
    const double at = m.amplitude[1] + 2.0 * m.amplitude[2] * t;
    const double att = 2.0 * m.amplitude[2];
    for (int i = 0; i < n_; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      w[ii] = two_pi * m.frequency[ii];
      const double arg = w[ii] * x(i) + m.phase[ii];
      c[ii] = std::cos(arg);
      s[ii] = std::sin(arg);
    }
    // prod_i c_i with factor l replaced by its derivative(s).
    auto product = [&](int skip1, int skip2) {
      double p = 1.0;
      for (int i = 0; i < n_; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (i == skip1 && i == skip2) {
          p *= -w[ii] * w[ii] * c[ii];
        } else if (i == skip1 || i == skip2) {
          p *= -w[ii] * s[ii];
        } else {
          p *= c[ii];
        }
      }
      return p;
    };
    const double g = product(-1, -1);
    j.u += a * g;
    j.ut += at * g;
    j.utt += att * g;
    for (int i = 0; i < n_; ++i) {
      const double gi = product(i, -1);
      j.grad_u(i) += a * gi;
      j.grad_ut(i) += at * gi;
      for (int l = 0; l < n_; ++l) j.hess_u(i, l) += a * product(i, l);
    }
  }
  return j;
}

std::vector<double> TrigField::sample(const GridSpec& grid, double t) const {
  std::vector<double> out(grid.spatial_size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = value(grid.position(x), t);
  return out;
}

SpacetimeField TrigField::sample(const GridSpec& grid) const {
  SpacetimeField f(grid);
  for (int m = 0; m < static_cast<int>(grid.levels()); ++m) {
    const auto s = sample(grid, grid.time(m));
    std::copy(s.begin(), s.end(), f.slice(m).begin());
  }
  return f;
}

std::vector<double> manufactured_rhs(const TrigField& u, const Problem& p) {
  const GridSpec& g = p.grid;
  if (u.dimension() != g.n) throw InputError("manufactured field dimension mismatch");
  std::vector<double> out(g.total_size());
  const auto ns = g.spatial_size();
  for (int m = 0; m < static_cast<int>(g.levels()); ++m) {
    for (std::size_t x = 0; x < ns; ++x) {
      Jet j = u.jet(g.position(x), g.time(m));
      j.a_here = p.a_field[x];
      out[static_cast<std::size_t>(m) * ns + x] = residual_pair(j, p.coeffs).direct;
    }
  }
  return out;
}

}  // namespace gsge
