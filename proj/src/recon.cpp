#include "rodlearn/recon.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace rodlearn {

// ---------------------------------------------------------------------------
// Piecewise-linear competitor and hat basis
// ---------------------------------------------------------------------------

namespace {

// index k with p_k <= r < p_{k+1}, clamped to [0, K-2]
int segment_of(const std::vector<double>& nodes, double r) {
  const auto it = std::upper_bound(nodes.begin(), nodes.end(), r);
  int k = static_cast<int>(it - nodes.begin()) - 1;
  return std::clamp(k, 0, static_cast<int>(nodes.size()) - 2);
}

}  // namespace

double PwLinearFn::operator()(double r) const {
  const auto& p = grid.nodes;
  if (r <= p.front()) return coeffs(0);
  if (r >= p.back()) return coeffs(grid.size() - 1);
  const int k = segment_of(p, r);
  const double w = (r - p[k]) / (p[k + 1] - p[k]);
  return (1.0 - w) * coeffs(k) + w * coeffs(k + 1);
}

double PwLinearFn::derivative(double r) const {
  const auto& p = grid.nodes;
  if (r <= p.front() || r > p.back()) return 0.0;
  int k = segment_of(p, r);
  if (r == p[k] && k > 0) --k;  // left value at nodes
  return (coeffs(k + 1) - coeffs(k)) / (p[k + 1] - p[k]);
}

double hat_eval(const Grid& grid, int k, double r) {
  const auto& p = grid.nodes;
  const int K = grid.size();
  if (k < 0 || k >= K) throw std::out_of_range("hat_eval: node index out of range");
  const double rc = std::clamp(r, p.front(), p.back());
  if (k > 0 && rc >= p[k - 1] && rc <= p[k])
    return (p[k] == p[k - 1]) ? 1.0 : (rc - p[k - 1]) / (p[k] - p[k - 1]);
  if (k + 1 < K && rc >= p[k] && rc <= p[k + 1])
    return (rc - p[k]) == 0.0 ? 1.0 : (p[k + 1] - rc) / (p[k + 1] - p[k]);
  if (rc == p[k]) return 1.0;
  return 0.0;
}

Eigen::MatrixXd grid_gradient_operator(const Grid& grid) {
  const int K = grid.size();
  if (K < 2) throw std::invalid_argument("grid_gradient_operator: need K >= 2");
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(K - 1, K);
  for (int k = 0; k + 1 < K; ++k) {
    const double delta = grid.nodes[k + 1] - grid.nodes[k];
    D(k, k) = 1.0 / delta;
    D(k, k + 1) = -1.0 / delta;
  }
  return D;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

int SparseLsq::max_row_nnz() const {
  int worst = 0;
  for (int r = 0; r < rows; ++r) worst = std::max(worst, row_ptr[r + 1] - row_ptr[r]);
  return worst;
}

Vector SparseLsq::multiply(const Vector& c) const {
  Vector out = Vector::Zero(rows);
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out(r) += val[k] * c(col[k]);
  return out;
}

Eigen::MatrixXd SparseLsq::normal_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(cols, cols);
  for (int r = 0; r < rows; ++r)
    for (int a = row_ptr[r]; a < row_ptr[r + 1]; ++a)
      for (int b = row_ptr[r]; b < row_ptr[r + 1]; ++b)
        m(col[a], col[b]) += val[a] * val[b];
  return m;
}

Vector SparseLsq::normal_rhs() const {
  Vector v = Vector::Zero(cols);
  for (int r = 0; r < rows; ++r)
    for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) v(col[k]) += val[k] * rhs(r);
  return v;
}

double SparseLsq::objective(const Vector& c) const {
  return (multiply(c) - rhs).squaredNorm();
}

SparseLsq assemble(const ChainModel& model, const MeasurementSet& measurements,
                   const Grid& grid, DataMode mode) {
  const int K = grid.size();
  if (K < 2) throw std::invalid_argument("assemble: grid needs at least 2 nodes");
  const int d = model.d;
  const int n_exp = static_cast<int>(measurements.strains.size());
  const int n_meas = static_cast<int>(measurements.times.size());

  SparseLsq sys;
  sys.cols = K;
  sys.rows = n_exp * n_meas * d;
  sys.row_ptr.reserve(sys.rows + 1);
  sys.row_ptr.push_back(0);
  sys.col.reserve(static_cast<std::size_t>(sys.rows) * 4);
  sys.val.reserve(static_cast<std::size_t>(sys.rows) * 4);
  sys.rhs.resize(sys.rows);

  const auto& p = grid.nodes;
  // hat evaluation of a strain: at most two active nodes with weights
  struct HatPair {
    int k0, k1;
    double w0, w1;
  };
  auto hats_at = [&](double z, bool& clamped) -> HatPair {
    double zc = z;
    if (z < p.front()) {
      zc = p.front();
      clamped = true;
    } else if (z > p.back()) {
      zc = p.back();
      clamped = true;
    }
    const int k = segment_of(p, zc);
    const double w = (zc - p[k]) / (p[k + 1] - p[k]);
    return {k, k + 1, 1.0 - w, w};
  };

  int row = 0;
  std::array<std::pair<int, double>, 4> entries;
  for (int i = 0; i < n_exp; ++i) {
    for (int m = 0; m < n_meas; ++m) {
      const Vector& z = measurements.strains[i][m];
      const double scale = std::sqrt(measurements.weights[m] / n_exp);
      // per-strain hat pairs and (Paper mode) true slopes
      std::vector<HatPair> hp(d + 1);
      for (int j = 0; j <= d; ++j) {
        bool clamped = false;
        hp[j] = hats_at(z(j), clamped);
        if (clamped) ++sys.clamp_count;
      }
      for (int r = 0; r < d; ++r) {
        // row = scale * (hats of z_r  -  hats of z_{r+1}), merged by column
        int n_entries = 0;
        auto push = [&](int c, double v) {
          for (int q = 0; q < n_entries; ++q)
            if (entries[q].first == c) {
              entries[q].second += v;
              return;
            }
          entries[n_entries++] = {c, v};
        };
        push(hp[r].k0, scale * hp[r].w0);
        push(hp[r].k1, scale * hp[r].w1);
        push(hp[r + 1].k0, -scale * hp[r + 1].w0);
        push(hp[r + 1].k1, -scale * hp[r + 1].w1);
        std::sort(entries.begin(), entries.begin() + n_entries);
        for (int q = 0; q < n_entries; ++q) {
          if (entries[q].second == 0.0) continue;
          sys.col.push_back(entries[q].first);
          sys.val.push_back(entries[q].second);
        }
        sys.row_ptr.push_back(static_cast<int>(sys.col.size()));
        if (mode == DataMode::Paper) {
          sys.rhs(row) = scale * (model.potential.slope(z(r)) -
                                  model.potential.slope(z(r + 1)));
        } else {
          sys.rhs(row) = scale * measurements.controls[i](r);
        }
        ++row;
      }
    }
  }
  return sys;
}

// ---------------------------------------------------------------------------
// Constrained solve (ADMM) and the pinned unconstrained reference
// ---------------------------------------------------------------------------

void SolveConfig::validate() const {
  if (m1 <= 0.0 || m2 <= 0.0) throw std::invalid_argument("bounds M1, M2 must be > 0");
  if (rho <= 0.0) throw std::invalid_argument("rho must be > 0");
  if (tol_primal <= 0.0 || tol_dual <= 0.0)
    throw std::invalid_argument("tolerances must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

namespace {

int locate_pin(const Grid& grid, int pin_node) {
  if (pin_node >= 0) {
    if (pin_node >= grid.size() || grid.nodes[pin_node] != 0.0)
      throw std::invalid_argument("pin node index does not point at the node 0");
    return pin_node;
  }
  if (!grid.has_zero)
    throw std::invalid_argument("grid does not contain the node 0; cannot pin a'(0)");
  return grid.zero_index;
}

// drop the pin row/column: maps reduced coordinates to full ones
std::vector<int> reduced_index_map(int K, int pin) {
  std::vector<int> map;
  map.reserve(K - 1);
  for (int k = 0; k < K; ++k)
    if (k != pin) map.push_back(k);
  return map;
}

}  // namespace

Vector pinned_least_squares(const SparseLsq& sys, const Grid& grid, int pin_node) {
  const int K = sys.cols;
  const int pin = locate_pin(grid, pin_node);
  const auto map = reduced_index_map(K, pin);
  const Eigen::MatrixXd P = sys.normal_matrix();
  const Vector q = sys.normal_rhs();
  Eigen::MatrixXd Pr(K - 1, K - 1);
  Vector qr(K - 1);
  for (int a = 0; a < K - 1; ++a) {
    qr(a) = q(map[a]);
    for (int b = 0; b < K - 1; ++b) Pr(a, b) = P(map[a], map[b]);
  }
  // LDLT handles rank-deficient normal matrices (nodes never activated)
  Vector vr = Pr.ldlt().solve(qr);
  Vector full = Vector::Zero(K);
  for (int a = 0; a < K - 1; ++a) full(map[a]) = vr(a);
  return full;
}

PwLinearFn solve_constrained_ls(const SparseLsq& sys, const Grid& grid,
                                const SolveConfig& cfg, SolveReport* report) {
  cfg.validate();
  const int K = sys.cols;
  if (K != grid.size()) throw std::invalid_argument("system/grid size mismatch");
  const int pin = locate_pin(grid, cfg.pin_node);
  const auto map = reduced_index_map(K, pin);
  const int n = K - 1;

  // reduced normal data: P = M^T M, q = M^T Y restricted off the pin
  const Eigen::MatrixXd Pfull = sys.normal_matrix();
  const Vector qfull = sys.normal_rhs();
  Eigen::MatrixXd P(n, n);
  Vector q(n);
  for (int a = 0; a < n; ++a) {
    q(a) = qfull(map[a]);
    for (int b = 0; b < n; ++b) P(a, b) = Pfull(map[a], map[b]);
  }

  // reduced grid gradient G = D_Lambda with the pin column removed,
  // row-normalized so no constraint row carries the 1/gap amplification of
  // near-floor grid cells; the bound scales along with each row
  const Eigen::MatrixXd Dfull = grid_gradient_operator(grid);
  Eigen::MatrixXd G(K - 1, n);
  for (int a = 0; a < n; ++a) G.col(a) = Dfull.col(map[a]);
  Vector row_scale(K - 1);
  Vector grad_bound(K - 1);
  for (int j = 0; j < K - 1; ++j) {
    const double s = std::max(G.row(j).lpNorm<Eigen::Infinity>(), 1e-300);
    row_scale(j) = s;
    G.row(j) /= s;
    grad_bound(j) = cfg.m2 / s;
  }

  const double rho = cfg.rho;
  // v-step matrix: 2P + rho (I + G^T G)
  Eigen::MatrixXd A = 2.0 * P + rho * Eigen::MatrixXd::Identity(n, n) +
                      rho * G.transpose() * G;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw SolveError("ADMM system matrix is not positive definite", 0.0, 0.0);

  Vector v = Vector::Zero(n);
  Vector z_box = Vector::Zero(n), z_grad = Vector::Zero(K - 1);
  Vector y_box = Vector::Zero(n), y_grad = Vector::Zero(K - 1);

  if (report) {
    report->primal_history.clear();
    report->primal_history.reserve(std::min(cfg.max_iter, 100000));
  }

  const double relax = 1.7;  // over-relaxation
  double rprim = 0.0, rdual = 0.0;
  bool converged = false;
  int iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    v = llt.solve(2.0 * q + rho * (z_box - y_box) + rho * G.transpose() * (z_grad - y_grad));
    const Vector gv = G * v;
    const Vector z_box_prev = z_box;
    const Vector z_grad_prev = z_grad;
    const Vector v_rel = relax * v + (1.0 - relax) * z_box_prev;
    const Vector gv_rel = relax * gv + (1.0 - relax) * z_grad_prev;
    z_box = (v_rel + y_box).cwiseMax(-cfg.m1).cwiseMin(cfg.m1);
    z_grad = (gv_rel + y_grad).cwiseMax(-grad_bound).cwiseMin(grad_bound);
    y_box += v_rel - z_box;
    y_grad += gv_rel - z_grad;

    // primal residual in the constraints' natural units
    rprim = std::max((v - z_box).lpNorm<Eigen::Infinity>(),
                     (row_scale.array() * (gv - z_grad).array()).abs().maxCoeff());
    rdual = rho * ((z_box - z_box_prev) +
                   G.transpose() * (z_grad - z_grad_prev)).lpNorm<Eigen::Infinity>();
    if (report) report->primal_history.push_back(rprim);
    if (rprim <= cfg.tol_primal && rdual <= cfg.tol_dual) {
      converged = true;
      ++iter;
      break;
    }
  }

  Vector full = Vector::Zero(K);
  for (int a = 0; a < n; ++a) full(map[a]) = v(a);

  if (report) {
    report->iterations = iter;
    report->converged = converged;
    report->primal_residual = rprim;
    report->dual_residual = rdual;
    report->objective = sys.objective(full);
  }
  if (!converged)
    throw SolveError("ADMM did not converge in " + std::to_string(cfg.max_iter) +
                         " iterations (primal " + std::to_string(rprim) + ", dual " +
                         std::to_string(rdual) + ")",
                     rprim, rdual);

  PwLinearFn fn;
  fn.grid = grid;
  fn.coeffs = full;
  return fn;
}

// ---------------------------------------------------------------------------
// Antiderivative and reconstruction error
// ---------------------------------------------------------------------------

PwQuadratic integrate_aprime(const PwLinearFn& fn) {
  const auto& p = fn.grid.nodes;
  const int K = fn.grid.size();
  if (!(0.0 >= p.front() && 0.0 <= p.back()))
    throw std::invalid_argument("integrate_aprime: 0 must lie inside the grid");
  PwQuadratic out;
  out.nodes = p;
  out.slopes.resize(K);
  for (int k = 0; k < K; ++k) out.slopes[k] = fn.coeffs(k);
  out.values.assign(K, 0.0);
  for (int k = 1; k < K; ++k) {
    const double dt = p[k] - p[k - 1];
    out.values[k] = out.values[k - 1] + 0.5 * (out.slopes[k] + out.slopes[k - 1]) * dt;
  }
  // anchor ahat(0) = 0
  double at0;
  {
    const int k = segment_of(p, 0.0);
    const double dt = 0.0 - p[k];
    const double m = (out.slopes[k + 1] - out.slopes[k]) / (p[k + 1] - p[k]);
    at0 = out.values[k] + out.slopes[k] * dt + 0.5 * m * dt * dt;
  }
  for (double& vv : out.values) vv -= at0;
  return out;
}

double PwQuadratic::operator()(double r) const {
  if (r <= nodes.front())
    return values.front() + slopes.front() * (r - nodes.front());
  if (r >= nodes.back())
    return values.back() + slopes.back() * (r - nodes.back());
  const int k = segment_of(nodes, r);
  const double dt = r - nodes[k];
  const double m = (slopes[k + 1] - slopes[k]) / (nodes[k + 1] - nodes[k]);
  return values[k] + slopes[k] * dt + 0.5 * m * dt * dt;
}

ReconError reconstruction_error(const PwLinearFn& fn, const Potential& truth,
                                const StrainSamples& samples, double q_lo,
                                double q_hi) {
  if (!(q_lo >= 0.0 && q_hi <= 1.0 && q_lo < q_hi))
    throw std::invalid_argument("reconstruction_error: invalid quantile band");
  ReconError err;
  err.band_lo = weighted_quantile(samples, q_lo);
  err.band_hi = weighted_quantile(samples, q_hi);

  // sup over a dense sweep of the band plus the grid nodes inside it
  const int sweep = 2001;
  for (int i = 0; i < sweep; ++i) {
    const double r = err.band_lo + (err.band_hi - err.band_lo) * i / (sweep - 1);
    err.sup = std::max(err.sup, std::abs(fn(r) - truth.slope(r)));
  }
  for (double pnode : fn.grid.nodes)
    if (pnode >= err.band_lo && pnode <= err.band_hi)
      err.sup = std::max(err.sup, std::abs(fn(pnode) - truth.slope(pnode)));

  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < samples.values.size(); ++i) {
    const double s = samples.values[i];
    if (s < err.band_lo || s > err.band_hi) continue;
    const double dfit = fn(s) - truth.slope(s);
    acc += samples.weights[i] * dfit * dfit;
    wsum += samples.weights[i];
  }
  err.weighted_l2 = wsum > 0.0 ? std::sqrt(acc / wsum) : 0.0;
  return err;
}

}  // namespace rodlearn
