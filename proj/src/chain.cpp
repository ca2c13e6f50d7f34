#include "rodlearn/chain.hpp"

#include <algorithm>
#include <cmath>

namespace rodlearn {

// ---------------------------------------------------------------------------
// Potential
// ---------------------------------------------------------------------------

Potential Potential::quadratic(double stiffness) {
  return Potential(PotentialKind::Quadratic, {stiffness});
}

Potential Potential::double_well(double kappa, double beta) {
  return Potential(PotentialKind::DoubleWell, {kappa, beta});
}

Potential Potential::table(std::vector<double> nodes, std::vector<double> slopes) {
  if (nodes.size() < 2 || nodes.size() != slopes.size())
    throw DimensionError("table potential needs >= 2 breakpoints with one slope each");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1]))
      throw std::invalid_argument("table potential breakpoints must be strictly increasing");
  std::vector<double> params;
  params.reserve(2 * nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    params.push_back(nodes[i]);
    params.push_back(slopes[i]);
  }
  Potential p(PotentialKind::Table, std::move(params));
  p.rebuild_table_cache();
  return p;
}

Potential Potential::from_params(PotentialKind kind, const std::vector<double>& params) {
  switch (kind) {
    case PotentialKind::Quadratic:
      return quadratic(params.empty() ? 1.0 : params[0]);
    case PotentialKind::DoubleWell:
      return double_well(params.empty() ? 1.0 : params[0],
                         params.size() > 1 ? params[1] : 0.0);
    case PotentialKind::Table: {
      if (params.size() < 4 || params.size() % 2 != 0)
        throw std::invalid_argument("table potential params must be s_1,v_1,s_2,v_2,...");
      std::vector<double> nodes, slopes;
      for (std::size_t i = 0; i < params.size(); i += 2) {
        nodes.push_back(params[i]);
        slopes.push_back(params[i + 1]);
      }
      return table(std::move(nodes), std::move(slopes));
    }
  }
  throw std::logic_error("unreachable potential kind");
}

void Potential::rebuild_table_cache() {
  tnodes_.clear();
  tslopes_.clear();
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    tnodes_.push_back(params_[i]);
    tslopes_.push_back(params_[i + 1]);
  }
  // Integrate a' piecewise (trapezoid is exact for piecewise-linear a'),
  // anchored so that a(0) = 0.
  const std::size_t n = tnodes_.size();
  tvalues_.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = tnodes_[i] - tnodes_[i - 1];
    tvalues_[i] = tvalues_[i - 1] + 0.5 * (tslopes_[i] + tslopes_[i - 1]) * dt;
  }
  // shift: subtract a(0)
  double a0;
  if (0.0 <= tnodes_.front()) {
    a0 = tvalues_.front() + tslopes_.front() * (0.0 - tnodes_.front());
  } else if (0.0 >= tnodes_.back()) {
    a0 = tvalues_.back() + tslopes_.back() * (0.0 - tnodes_.back());
  } else {
    const auto it = std::upper_bound(tnodes_.begin(), tnodes_.end(), 0.0);
    const std::size_t k = static_cast<std::size_t>(it - tnodes_.begin()) - 1;
    const double dt = -tnodes_[k];
    const double m = (tslopes_[k + 1] - tslopes_[k]) / (tnodes_[k + 1] - tnodes_[k]);
    a0 = tvalues_[k] + tslopes_[k] * dt + 0.5 * m * dt * dt;
  }
  for (double& v : tvalues_) v -= a0;
}

double Potential::value(double s) const {
  switch (kind_) {
    case PotentialKind::Quadratic:
      return 0.5 * params_[0] * s * s;
    case PotentialKind::DoubleWell: {
      const double w = s * s - 1.0;
      return 0.25 * params_[0] * w * w + 0.5 * params_[1] * s * s;
    }
    case PotentialKind::Table: {
      if (s <= tnodes_.front())
        return tvalues_.front() + tslopes_.front() * (s - tnodes_.front());
      if (s >= tnodes_.back())
        return tvalues_.back() + tslopes_.back() * (s - tnodes_.back());
      const auto it = std::upper_bound(tnodes_.begin(), tnodes_.end(), s);
      const std::size_t k = static_cast<std::size_t>(it - tnodes_.begin()) - 1;
      const double dt = s - tnodes_[k];
      const double m = (tslopes_[k + 1] - tslopes_[k]) / (tnodes_[k + 1] - tnodes_[k]);
      return tvalues_[k] + tslopes_[k] * dt + 0.5 * m * dt * dt;
    }
  }
  return 0.0;
}

double Potential::slope(double s) const {
  switch (kind_) {
    case PotentialKind::Quadratic:
      return params_[0] * s;
    case PotentialKind::DoubleWell:
      return params_[0] * (s * s - 1.0) * s + params_[1] * s;
    case PotentialKind::Table: {
      if (s <= tnodes_.front()) return tslopes_.front();
      if (s >= tnodes_.back()) return tslopes_.back();
      const auto it = std::upper_bound(tnodes_.begin(), tnodes_.end(), s);
      const std::size_t k = static_cast<std::size_t>(it - tnodes_.begin()) - 1;
      const double w = (s - tnodes_[k]) / (tnodes_[k + 1] - tnodes_[k]);
      return (1.0 - w) * tslopes_[k] + w * tslopes_[k + 1];
    }
  }
  return 0.0;
}

double Potential::curvature(double s) const {
  switch (kind_) {
    case PotentialKind::Quadratic:
      return params_[0];
    case PotentialKind::DoubleWell:
      return params_[0] * (3.0 * s * s - 1.0) + params_[1];
    case PotentialKind::Table: {
      // piecewise constant; take the left value at breakpoints, zero outside
      if (s <= tnodes_.front() || s > tnodes_.back()) return 0.0;
      auto it = std::lower_bound(tnodes_.begin(), tnodes_.end(), s);
      std::size_t k = static_cast<std::size_t>(it - tnodes_.begin());
      if (k > 0 && !(tnodes_[k] < s)) --k;  // s on a breakpoint: segment to the left
      if (k + 1 >= tnodes_.size()) k = tnodes_.size() - 2;
      return (tslopes_[k + 1] - tslopes_[k]) / (tnodes_[k + 1] - tnodes_[k]);
    }
  }
  return 0.0;
}

std::vector<std::string> Potential::validate(double R, double m2, double c1,
                                             double c2, double p) const {
  std::vector<std::string> out;
  const int samples = 2001;
  double min_value = 0.0;
  double max_curv = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = -R + 2.0 * R * i / (samples - 1);
    min_value = std::min(min_value, value(s));
    max_curv = std::max(max_curv, std::abs(curvature(s)));
  }
  if (min_value < -1e-12)
    out.push_back("potential takes negative value " + std::to_string(min_value) +
                  " inside the strain window");
  if (max_curv > m2 * (1.0 + 1e-12))
    out.push_back("slope Lipschitz constant " + std::to_string(max_curv) +
                  " exceeds bound " + std::to_string(m2));
  const double floor = c1 * std::pow(R, p) - c2;
  if (value(R) < floor || value(-R) < floor)
    out.push_back("coercivity fails at window ends: a(+-R) < c1 R^p - c2");
  if (std::abs(slope(0.0)) > 1e-12)
    out.push_back("normalization a'(0) = 0 violated: a'(0) = " +
                  std::to_string(slope(0.0)));
  return out;
}

// ---------------------------------------------------------------------------
// BoundaryProfile
// ---------------------------------------------------------------------------

BoundaryProfile BoundaryProfile::constant(double c) {
  BoundaryProfile b;
  b.kind = Kind::Constant;
  b.c0 = c;
  return b;
}

BoundaryProfile BoundaryProfile::ramp(double c0, double rate) {
  BoundaryProfile b;
  b.kind = Kind::Ramp;
  b.c0 = c0;
  b.rate = rate;
  return b;
}

BoundaryProfile BoundaryProfile::sinusoid(double c0, double amplitude, double omega) {
  BoundaryProfile b;
  b.kind = Kind::Sinusoid;
  b.c0 = c0;
  b.amplitude = amplitude;
  b.omega = omega;
  return b;
}

double BoundaryProfile::value(double t) const {
  switch (kind) {
    case Kind::Constant: return c0;
    case Kind::Ramp: return c0 + rate * t;
    case Kind::Sinusoid: return c0 + amplitude * std::sin(omega * t);
  }
  return c0;
}

double BoundaryProfile::derivative(double t) const {
  switch (kind) {
    case Kind::Constant: return 0.0;
    case Kind::Ramp: return rate;
    case Kind::Sinusoid: return amplitude * omega * std::cos(omega * t);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Chain energy and derivatives
// ---------------------------------------------------------------------------

Vector discrete_gradient(const Vector& y) {
  if (y.size() < 2) throw DimensionError("discrete_gradient needs at least 2 entries");
  return y.tail(y.size() - 1) - y.head(y.size() - 1);
}

Vector embed(const ChainModel& model, double t, const Vector& x) {
  if (x.size() != model.d)
    throw DimensionError("state has length " + std::to_string(x.size()) +
                         ", expected d = " + std::to_string(model.d));
  Vector y(model.d + 2);
  y(0) = model.f1.value(t);
  y.segment(1, model.d) = x;
  y(model.d + 1) = model.f2.value(t);
  return y;
}

Vector strains(const ChainModel& model, double t, const Vector& x) {
  return discrete_gradient(embed(model, t, x));
}

Vector dbar_transpose(const Vector& w) {
  if (w.size() < 2) throw DimensionError("dbar_transpose needs at least 2 entries");
  return w.head(w.size() - 1) - w.tail(w.size() - 1);
}

double energy(const ChainModel& model, double t, const Vector& x) {
  const Vector s = strains(model, t, x);
  double e = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) e += model.potential.value(s(j));
  return e;
}

Vector grad_x_energy(const ChainModel& model, double t, const Vector& x) {
  const Vector s = strains(model, t, x);
  Vector ap(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) ap(j) = model.potential.slope(s(j));
  return dbar_transpose(ap);
}

double corrected_energy(const ChainModel& model, double t, const Vector& x,
                        const Vector& u) {
  if (u.size() != x.size()) throw DimensionError("control/state length mismatch");
  return energy(model, t, x) - u.dot(x);
}

double partial_t_energy(const ChainModel& model, double t, const Vector& x) {
  const Vector s = strains(model, t, x);
  return -model.f1.derivative(t) * model.potential.slope(s(0)) +
         model.f2.derivative(t) * model.potential.slope(s(model.d));
}

void hessian_tridiagonal(const ChainModel& model, double t, const Vector& x,
                         Vector& diag, Vector& off) {
  const Vector s = strains(model, t, x);
  Vector app(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) app(j) = model.potential.curvature(s(j));
  diag.resize(model.d);
  off.resize(std::max(model.d - 1, 0));
  for (int i = 0; i < model.d; ++i) diag(i) = app(i) + app(i + 1);
  for (int i = 0; i + 1 < model.d; ++i) off(i) = -app(i + 1);
}

}  // namespace rodlearn
