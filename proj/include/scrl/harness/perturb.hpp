#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrl/env/env.hpp"
#include "scrl/rng.hpp"

namespace scrl::harness {

// How one physical parameter is perturbed for evaluation or training.
//
// grid mode lists relative scales applied to the environment's base value
// (1.0 = unperturbed); truncated_gaussian mode draws a scale 1 + sigma_p * xi
// with xi standard normal truncated at +-3.
enum class PerturbMode { grid, truncated_gaussian };

template <typename Scalar = double>
struct PerturbationSpecT {
  std::string name;  // env parameter key, e.g. "mass"
  PerturbMode mode = PerturbMode::grid;
  std::vector<Scalar> grid;    // grid mode: relative scales
  Scalar sigma_p = Scalar(0);  // truncated_gaussian mode

  void validate() const {
    if (name.empty())
      throw std::invalid_argument("perturbation: parameter name is empty");
    if (mode == PerturbMode::grid) {
      if (grid.empty())
        throw std::invalid_argument("perturbation: grid of scales is empty");
      for (const Scalar s : grid)
        if (!(s > Scalar(0)))
          throw std::invalid_argument(
              "perturbation: grid scales must be positive");
    } else {
      if (!(sigma_p > Scalar(0)))
        throw std::invalid_argument("perturbation: sigma_p must be positive");
    }
  }
};

using PerturbationSpec = PerturbationSpecT<double>;

// Standard normal conditioned on |xi| <= cut, by rejection.  The loop almost
// never iterates (acceptance 99.7% at cut=3) and stays on one named stream,
// so a fixed seed gives a fixed draw sequence.
inline double truncated_normal(Rng& rng, double cut = 3.0) {
  if (!(cut > 0)) throw std::invalid_argument("truncated_normal: cut <= 0");
  double x;
  do {
    x = rng.normal();
  } while (std::abs(x) > cut);
  return x;
}

// Moments of the +-cut truncated standard normal, for calibration checks:
// mean 0 by symmetry, variance 1 - 2*cut*phi(cut) / (2*Phi(cut) - 1).
inline double truncated_normal_std(double cut = 3.0) {
  const double phi =
      std::exp(-0.5 * cut * cut) / std::sqrt(6.28318530717958647692);
  const double mass = std::erf(cut / std::sqrt(2.0));
  return std::sqrt(1.0 - 2.0 * cut * phi / mass);
}

// Base value of the named parameter, with a harness-grade error message.
template <typename Scalar>
Scalar base_param_value(const env::AnyEnvT<Scalar>& e,
                        const std::string& name) {
  const auto params = env::params_map(e);
  const auto it = params.find(name);
  if (it == params.end())
    throw std::invalid_argument("perturbation: environment " + env::env_name(e) +
                                " has no parameter '" + name + "'");
  return it->second;
}

// Fresh copy of the environment with the named parameters multiplied by the
// given relative scales.  The source is untouched; the copy needs a reset.
template <typename Scalar>
env::AnyEnvT<Scalar> scaled_env(
    const env::AnyEnvT<Scalar>& source,
    const std::map<std::string, Scalar>& scale_by_name) {
  std::map<std::string, Scalar> overrides;
  for (const auto& [name, scale] : scale_by_name)
    overrides[name] = base_param_value(source, name) * scale;
  return env::with_params(source, overrides);
}

}  // namespace scrl::harness
