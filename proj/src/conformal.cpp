#include "gsge/conformal.hpp"

#include "gsge/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gsge {

void Coefficients::validate() const {
  if (n < 1 || n > kMaxDim) {
    throw ParameterError("dimension n=" + std::to_string(n) + " outside [1," +
                         std::to_string(kMaxDim) + "]");
  }
  if (k < 1 || k > n) {
    throw ParameterError("index k=" + std::to_string(k) + " outside [1," + std::to_string(n) + "]");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ParameterError("gamma must be finite and >= 0");
  if (!std::isfinite(s) || !std::isfinite(r)) throw ParameterError("s and r must be finite");
}

Jet Jet::zero(int n) {
  Jet j;
  j.grad_u = Vector::Zero(n);
  j.grad_ut = Vector::Zero(n);
  j.hess_u = SymMatrix::Zero(n, n);
  j.a_here = SymMatrix::Zero(n, n);
  return j;
}

AugmentedMatrix AugmentedMatrix::from_blocks(double r00, const Vector& r0, const SymMatrix& block) {
  const auto n = block.rows();
  AugmentedMatrix out;
  out.r.resize(n + 1, n + 1);
  out.r(0, 0) = r00;
  out.r.col(0).tail(n) = r0;
  out.r.row(0).tail(n) = r0.transpose();
  out.r.bottomRightCorner(n, n) = block;
  return out;
}

SymMatrix assemble_w(const Jet& jet, const Coefficients& c) {
  const double lap = jet.hess_u.trace();
  const double g2 = jet.grad_u.squaredNorm();
  SymMatrix w = jet.hess_u + c.s * (jet.grad_u * jet.grad_u.transpose()) + jet.a_here;
  w.diagonal().array() += c.gamma * lap - 0.5 * c.r * g2;
  return w;
}

SymMatrix assemble_e(const Jet& jet, const Coefficients& c) {
  return jet.utt * assemble_w(jet, c) - jet.grad_ut * jet.grad_ut.transpose();
}

AugmentedMatrix assemble_r(const Jet& jet, const Coefficients& c) {
  return AugmentedMatrix::from_blocks(jet.utt, jet.grad_ut, assemble_w(jet, c));
}

double f_k(const AugmentedMatrix& r, int k) {
  const SymMatrix block = r.spatial();
  const Vector r0 = r.mixed();
  return r.r00() * sigma(block, k) - r0.dot(sigma_grad(block, k) * r0);
}

ResidualPair residual_pair(const Jet& jet, const Coefficients& c) {
  const SymMatrix w = assemble_w(jet, c);
  ResidualPair out;
  out.direct = jet.utt * sigma(w, c.k) - jet.grad_ut.dot(sigma_grad(w, c.k) * jet.grad_ut);
  if (jet.utt > 0.0) {
    const SymMatrix e = jet.utt * w - jet.grad_ut * jet.grad_ut.transpose();
    out.via_e = std::pow(jet.utt, 1 - c.k) * sigma(e, c.k);
  }
  return out;
}

std::string_view to_string(Admissibility a) {
  switch (a) {
    case Admissibility::strict:
      return "strict";
    case Admissibility::degenerate:
      return "degenerate";
    case Admissibility::violated:
      return "violated";
  }
  return "unknown";
}

double AdmissibilityVerdict::margin() const { return std::min({cone, utt, sigma_k_e}); }

AdmissibilityVerdict classify_admissible(const Jet& jet, const Coefficients& c, double margin) {
  const SymMatrix w = assemble_w(jet, c);
  const SymMatrix e = jet.utt * w - jet.grad_ut * jet.grad_ut.transpose();
  AdmissibilityVerdict v;
  v.cone = cone_margin(w, c.k);
  v.utt = jet.utt;
  v.sigma_k_e = sigma(e, c.k);
  if (v.cone > margin && v.utt > margin && v.sigma_k_e > margin) {
    v.cls = Admissibility::strict;
  } else if (v.cone >= -margin && v.utt >= -margin && v.sigma_k_e >= -margin) {
    v.cls = Admissibility::degenerate;
  } else {
    v.cls = Admissibility::violated;
  }
  return v;
}

double log_residual(const Jet& jet, const Coefficients& c) {
  const AdmissibilityVerdict v = classify_admissible(jet, c, 0.0);
  if (v.cls != Admissibility::strict) {
    throw DomainError("log residual requires a strictly admissible jet", v.margin());
  }
  if (!(jet.psi_here > 0.0)) throw DomainError("log residual requires psi > 0", jet.psi_here);
  return std::log(std::pow(jet.utt, 1 - c.k) * v.sigma_k_e) - std::log(jet.psi_here);
}

Preset preset_params(std::string_view name, int n, double tau) {
  if (name == "schouten") return {1.0, 1.0, 0.0};
  if (name == "neg-schouten") return {-1.0, -1.0, 0.0};
  if (name == "neg-ricci" || name == "neg-modified-schouten") {
    if (n < 3) throw ParameterError(std::string(name) + " preset needs n >= 3");
    const double nm2 = static_cast<double>(n - 2);
    if (name == "neg-ricci") return {-1.0, -2.0, 1.0 / nm2};
    if (tau > 1.0) throw ParameterError("neg-modified-schouten preset needs tau <= 1");
    return {-1.0, tau - 2.0, (1.0 - tau) / nm2};
  }
  throw ParameterError("unknown preset '" + std::string(name) + "'");
}

RegimeReport validate_theorem_regime(const Coefficients& c) {
  RegimeReport rep;
  const double lhs = 2.0 * c.s * c.k;
  const double rhs = c.r * c.n;
  rep.gamma_positive = c.gamma > 0.0;
  rep.gradient_pattern = c.r > 0.0 && lhs <= rhs;
  rep.uniqueness = (c.gamma > 0.0 && c.r >= 0.0 && lhs <= rhs) || rep.gradient_pattern;
  std::ostringstream msg;
  if (rep.gamma_positive) msg << "regime (i): gamma > 0";
  if (rep.gradient_pattern) {
    if (rep.gamma_positive) msg << "; ";
    msg << "regime (ii): r > 0 and 2sk = " << lhs << " <= rn = " << rhs;
  }
  if (!rep.any()) {
    msg << "warning: outside both estimate regimes (gamma = 0 and not (r > 0 and 2sk = " << lhs
        << " <= rn = " << rhs << "))";
  }
  if (c.n < 3) msg << "; note: n = " << c.n << " < 3, formulas are evaluated as-is";
  rep.message = msg.str();
  return rep;
}

bool approximation_cone_condition(const Coefficients& c, double tol) {
  EigenSpectrum lam = EigenSpectrum::Constant(c.n, 0.5 * c.r);
  lam[c.n - 1] -= c.s;
  const auto e = sigma_all(lam);
  for (int j = 1; j <= c.k; ++j) {
    if (e[static_cast<std::size_t>(j)] < -tol) return false;
  }
  return true;
}

}  // namespace gsge
