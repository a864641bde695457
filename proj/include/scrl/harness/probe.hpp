#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>

#include "scrl/diff/policy.hpp"
#include "scrl/num_format.hpp"
#include "scrl/sac/gbr.hpp"

namespace scrl::harness {

// Value changes on a 2-D slice through state space: delta(i, j) is the value
// at s + offsets_x[i]*x + offsets_y[j]*y minus the value at s itself.
template <typename Scalar = double>
struct ProbeGridT {
  VectorX<Scalar> offsets_x, offsets_y;
  MatrixX<Scalar> delta;
  Scalar baseline = Scalar(0);  // absolute value at offset (0, 0)
};

using ProbeGrid = ProbeGridT<double>;

namespace detail {

// E_delta[Q_min(p, f(delta; p))] over the given noise columns, in ascending
// column order.  Every probe point uses the same noise (common random
// numbers), so the offset-zero cell of the grid is exactly zero.
template <typename Scalar>
Scalar probe_value(const diff::MlpT<Scalar>& q1, const diff::MlpT<Scalar>& q2,
                   const diff::GaussianTanhPolicyT<Scalar>& policy,
                   const VectorX<Scalar>& point,
                   const MatrixX<Scalar>& noise) {
  const Eigen::Index k = noise.cols();
  const MatrixX<Scalar> states = point.replicate(1, k);
  diff::PolicyCacheT<Scalar> pc;
  diff::policy_sample_batch(policy, states, noise, pc);
  const auto mc =
      sac::min_critic_batch(q1, q2, states, pc.action, /*with_grads=*/false);
  Scalar sum = Scalar(0);
  for (Eigen::Index b = 0; b < k; ++b) sum += mc.q_min[b];
  return sum / Scalar(k);
}

}  // namespace detail

// Monte-Carlo value change over a grid_n x grid_n grid spanning
// [-half_width, half_width] along two orthonormal directions.  Directions are
// normalized internally; non-orthogonal inputs are rejected.  Pass a single
// zero noise column for the deterministic (mean action) panel.
template <typename Scalar>
ProbeGridT<Scalar> linearity_probe(const diff::MlpT<Scalar>& q1,
                                   const diff::MlpT<Scalar>& q2,
                                   const diff::GaussianTanhPolicyT<Scalar>& policy,
                                   const VectorX<Scalar>& s,
                                   const VectorX<Scalar>& x,
                                   const VectorX<Scalar>& y, Scalar half_width,
                                   int grid_n, const MatrixX<Scalar>& noise) {
  if (x.size() != s.size() || y.size() != s.size())
    throw std::invalid_argument("probe: direction dimensions must match state");
  if (!(half_width > Scalar(0)))
    throw std::invalid_argument("probe: half_width must be positive");
  if (grid_n < 2) throw std::invalid_argument("probe: grid_n must be >= 2");
  if (noise.cols() < 1)
    throw std::invalid_argument("probe: at least one noise column");
  const Scalar nx = x.norm(), ny = y.norm();
  if (!(nx > Scalar(0)) || !(ny > Scalar(0)))
    throw std::invalid_argument("probe: zero direction vector");
  const VectorX<Scalar> ux = x / nx, uy = y / ny;
  if (std::abs(ux.dot(uy)) >= Scalar(1e-8))
    throw std::invalid_argument("probe: directions are not orthogonal");

  ProbeGridT<Scalar> grid;
  grid.offsets_x.resize(grid_n);
  grid.offsets_y.resize(grid_n);
  const Scalar step = Scalar(2) * half_width / Scalar(grid_n - 1);
  for (int i = 0; i < grid_n; ++i) {
    grid.offsets_x[i] = -half_width + Scalar(i) * step;
    grid.offsets_y[i] = -half_width + Scalar(i) * step;
  }

  grid.baseline = detail::probe_value(q1, q2, policy, s, noise);
  grid.delta.resize(grid_n, grid_n);
  for (int i = 0; i < grid_n; ++i)
    for (int j = 0; j < grid_n; ++j) {
      const VectorX<Scalar> point =
          s + grid.offsets_x[i] * ux + grid.offsets_y[j] * uy;
      grid.delta(i, j) =
          detail::probe_value(q1, q2, policy, point, noise) - grid.baseline;
    }
  return grid;
}

// Least-squares plane through the probe grid, with the residual and R^2 that
// quantify how linear the value surface is at this width.
template <typename Scalar = double>
struct PlaneFitT {
  Scalar coef_x = Scalar(0), coef_y = Scalar(0), intercept = Scalar(0);
  Scalar max_residual = Scalar(0);
  Scalar r_squared = Scalar(0);
};

using PlaneFit = PlaneFitT<double>;

template <typename Scalar>
PlaneFitT<Scalar> plane_fit(const ProbeGridT<Scalar>& grid) {
  const Eigen::Index nx = grid.offsets_x.size(), ny = grid.offsets_y.size();
  const Eigen::Index n = nx * ny;
  MatrixX<Scalar> a(n, 3);
  VectorX<Scalar> b(n);
  Eigen::Index row = 0;
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j, ++row) {
      a(row, 0) = grid.offsets_x[i];
      a(row, 1) = grid.offsets_y[j];
      a(row, 2) = Scalar(1);
      b[row] = grid.delta(i, j);
    }
  const VectorX<Scalar> coef = a.colPivHouseholderQr().solve(b);

  PlaneFitT<Scalar> fit;
  fit.coef_x = coef[0];
  fit.coef_y = coef[1];
  fit.intercept = coef[2];
  const VectorX<Scalar> resid = b - a * coef;
  Scalar ss_res = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    ss_res += resid[i] * resid[i];
    fit.max_residual = std::max(fit.max_residual, std::abs(resid[i]));
  }
  Scalar mean = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i) mean += b[i];
  mean /= Scalar(n);
  Scalar ss_tot = Scalar(0);
  for (Eigen::Index i = 0; i < n; ++i)
    ss_tot += (b[i] - mean) * (b[i] - mean);
  fit.r_squared = ss_tot > Scalar(0) ? Scalar(1) - ss_res / ss_tot : Scalar(1);
  return fit;
}

// Matrix CSV with axis headers: first row carries the y offsets, first column
// the x offsets.
template <typename Scalar>
void write_probe_csv(std::ostream& os, const ProbeGridT<Scalar>& grid) {
  os << "dx\\dy";
  for (Eigen::Index j = 0; j < grid.offsets_y.size(); ++j)
    os << ',' << format_double(grid.offsets_y[j]);
  os << '\n';
  for (Eigen::Index i = 0; i < grid.offsets_x.size(); ++i) {
    os << format_double(grid.offsets_x[i]);
    for (Eigen::Index j = 0; j < grid.offsets_y.size(); ++j)
      os << ',' << format_double(grid.delta(i, j));
    os << '\n';
  }
}

}  // namespace scrl::harness
