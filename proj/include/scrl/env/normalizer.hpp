#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

#include "scrl/diff/checkpoint.hpp"
#include "scrl/mdp/finite_mdp.hpp"

namespace scrl::env {

// Componentwise observation whitening with statistics frozen at fit time.
// Stored and restored next to network checkpoints so a policy is never
// evaluated under a different scaling than it was trained with.
template <typename Scalar = double>
struct ObsNormalizerT {
  VectorX<Scalar> mean;
  VectorX<Scalar> std_dev;  // floored at 1e-6 per component when fitted

  // Throws std::invalid_argument naming the first violated requirement.
  void validate() const {
    if (mean.size() == 0)
      throw std::invalid_argument("normalizer: empty mean");
    if (std_dev.size() != mean.size())
      throw std::invalid_argument("normalizer: mean/std size mismatch");
    if (!mean.allFinite() || !std_dev.allFinite())
      throw std::invalid_argument("normalizer: statistics must be finite");
    for (Eigen::Index i = 0; i < std_dev.size(); ++i)
      if (!(std_dev[i] > Scalar(0)))
        throw std::invalid_argument("normalizer: std must be > 0");
  }

  template <typename Derived>
  VectorX<Scalar> normalize(const Eigen::MatrixBase<Derived>& obs) const {
    if (obs.size() != mean.size())
      throw std::invalid_argument("normalizer: observation dimension mismatch");
    return ((obs.reshaped(mean.size(), 1) - mean).array() / std_dev.array())
        .matrix();
  }

  // Columns are observations.
  template <typename Derived>
  MatrixX<Scalar> normalize_batch(const Eigen::MatrixBase<Derived>& obs) const {
    if (obs.rows() != mean.size())
      throw std::invalid_argument("normalizer: observation dimension mismatch");
    return (obs.colwise() - mean).array().colwise() / std_dev.array();
  }
};

using ObsNormalizer = ObsNormalizerT<double>;

// Two-pass mean and population standard deviation over a batch of
// observations stored one per column.  Plain ascending-index accumulation so
// the result is independent of expression evaluation order.
template <typename Derived>
ObsNormalizerT<typename Derived::Scalar> fit_normalizer(
    const Eigen::MatrixBase<Derived>& observations) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index dim = observations.rows();
  const Eigen::Index n = observations.cols();
  if (n < 2)
    throw std::invalid_argument("normalizer: need at least 2 observations");
  if (!observations.allFinite())
    throw std::invalid_argument("normalizer: observations must be finite");

  ObsNormalizerT<Scalar> out;
  out.mean.setZero(dim);
  out.std_dev.setZero(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    Scalar acc = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) acc += observations(d, i);
    out.mean[d] = acc / Scalar(n);
  }
  for (Eigen::Index d = 0; d < dim; ++d) {
    Scalar acc = Scalar(0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar delta = observations(d, i) - out.mean[d];
      acc += delta * delta;
    }
    out.std_dev[d] = std::max(std::sqrt(acc / Scalar(n)), Scalar(1e-6));
  }
  return out;
}

inline void write_normalizer(std::ostream& os, const std::string& name,
                             const ObsNormalizer& nrm) {
  diff::write_vector(os, name + ".mean", nrm.mean);
  diff::write_vector(os, name + ".std", nrm.std_dev);
}

inline ObsNormalizer read_normalizer(std::istream& is,
                                     const std::string& name) {
  ObsNormalizer nrm;
  nrm.mean = diff::read_vector(is, name + ".mean");
  nrm.std_dev = diff::read_vector(is, name + ".std");
  nrm.validate();
  return nrm;
}

}  // namespace scrl::env
