#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "scrl/env/env.hpp"
#include "scrl/env/normalizer.hpp"
#include "scrl/harness/perturb.hpp"
#include "scrl/num_format.hpp"
#include "scrl/rng.hpp"
#include "scrl/sac/agent.hpp"

namespace scrl::harness {

// Whether evaluation acts with the policy mean (delta = 0) or with sampled
// actions.  Mean action is the default protocol; the flag exists because the
// alternative is a legitimate evaluation style, not a guess.
enum class ActionSelection { mean_action, sampled };

inline std::string to_string(ActionSelection a) {
  return a == ActionSelection::mean_action ? "mean_action" : "sampled";
}

// Checkpoints produced by one training seed, as files on disk: the candidate
// set is the surviving tail of the checkpoint ring (the last epochs).
template <typename Scalar = double>
struct CheckpointPoolT {
  std::uint64_t seed = 0;
  std::vector<std::string> paths;
  std::optional<env::ObsNormalizerT<Scalar>> normalizer;
};

using CheckpointPool = CheckpointPoolT<double>;

// The same pool after loading: a fixed, read-only set of policy snapshots.
// policy_ids index into the original path list so every evaluated episode can
// be traced back to its checkpoint file.
template <typename Scalar = double>
struct PolicyPoolT {
  std::uint64_t seed = 0;
  std::vector<int> policy_ids;
  std::vector<diff::GaussianTanhPolicyT<Scalar>> policies;
  std::optional<env::ObsNormalizerT<Scalar>> normalizer;
};

using PolicyPool = PolicyPoolT<double>;

// `count` distinct indices in [0, pool_size), chosen by partial Fisher-Yates
// on the given stream.  Selection order is the draw order.
inline std::vector<int> choose_policy_ids(Rng& rng, int pool_size, int count) {
  if (count < 1 || count > pool_size)
    throw std::invalid_argument(
        "sweep: policies_per_seed must lie in [1, pool size]");
  std::vector<int> ids(pool_size);
  for (int i = 0; i < pool_size; ++i) ids[i] = i;
  for (int k = 0; k < count; ++k) {
    const auto j = k + rng.uniform_int(pool_size - k);
    std::swap(ids[k], ids[j]);
  }
  ids.resize(count);
  return ids;
}

// Loads each pool's checkpoints and keeps `policies_per_seed` of them, chosen
// deterministically from the pool's seed on the evaluation stream.
template <typename Scalar>
std::vector<PolicyPoolT<Scalar>> load_policy_pools(
    const std::vector<CheckpointPoolT<Scalar>>& pools, int policies_per_seed) {
  if (pools.empty()) throw std::invalid_argument("sweep: no checkpoint pools");
  std::vector<PolicyPoolT<Scalar>> out;
  out.reserve(pools.size());
  for (const auto& pool : pools) {
    Rng rng(pool.seed, stream::kEval);
    PolicyPoolT<Scalar> loaded;
    loaded.seed = pool.seed;
    loaded.normalizer = pool.normalizer;
    loaded.policy_ids = choose_policy_ids(
        rng, static_cast<int>(pool.paths.size()), policies_per_seed);
    for (const int id : loaded.policy_ids) {
      std::ifstream is(pool.paths[id]);
      if (!is)
        throw std::runtime_error("sweep: cannot open checkpoint '" +
                                 pool.paths[id] + "'");
      loaded.policies.push_back(sac::read_agent(is).policy);
    }
    out.push_back(std::move(loaded));
  }
  return out;
}

// One evaluation episode on a fresh copy of the environment.  Returns the
// undiscounted sum of raw rewards; observations pass through the pool's
// normalizer (the policy was trained on normalized inputs).
template <typename Scalar>
Scalar run_episode(const env::AnyEnvT<Scalar>& env_template,
                   const diff::GaussianTanhPolicyT<Scalar>& policy,
                   const std::optional<env::ObsNormalizerT<Scalar>>& normalizer,
                   std::uint64_t env_seed, ActionSelection action_selection) {
  env::AnyEnvT<Scalar> e = env_template;
  VectorX<Scalar> obs = env::env_reset(e, env_seed);
  if (normalizer) obs = normalizer->normalize(obs);
  Rng action_rng(env_seed, stream::kPolicy);
  const int act_dim = env::action_dim(e);
  Scalar total = Scalar(0);
  while (true) {
    VectorX<Scalar> action;
    if (action_selection == ActionSelection::mean_action) {
      action = diff::policy_mean_action(policy, obs);
    } else {
      const MatrixX<Scalar> noise =
          diff::sample_noise<Scalar>(action_rng, act_dim, 1);
      action = diff::policy_sample(policy, obs, noise).action;
    }
    const auto result = env::env_step(e, action);
    total += result.reward;
    if (result.done || env::episode_over(e)) break;
    obs = normalizer ? normalizer->normalize(result.obs) : result.obs;
  }
  return total;
}

template <typename Scalar = double>
struct EpisodeRowT {
  Scalar param_x = Scalar(0);  // relative scale on the x parameter
  Scalar param_y = Scalar(0);  // relative scale on the y parameter
  std::uint64_t seed = 0;
  int policy_id = 0;
  int episode = 0;
  Scalar ret = Scalar(0);
};

template <typename Scalar = double>
struct SweepCellT {
  Scalar scale_x = Scalar(0), scale_y = Scalar(0);
  Scalar value_x = Scalar(0), value_y = Scalar(0);  // absolute parameter values
  long n_episodes = 0;
  Scalar mean = Scalar(0), std_dev = Scalar(0);
  Scalar min = Scalar(0), max = Scalar(0);
};

template <typename Scalar = double>
struct SweepResultT {
  std::string param_x_name, param_y_name;
  std::vector<std::uint64_t> seeds;          // one per pool
  std::vector<std::vector<int>> policy_ids;  // per pool, traced checkpoint ids
  int episodes_per_policy = 0;
  ActionSelection action_selection = ActionSelection::mean_action;
  std::vector<SweepCellT<Scalar>> cells;     // x-major: cell(ix, iy) = ix*ny+iy
  std::vector<EpisodeRowT<Scalar>> episodes; // concatenated in cell order
};

using SweepResult = SweepResultT<double>;

struct GridSweepConfig {
  int episodes_per_policy = 8;
  ActionSelection action_selection = ActionSelection::mean_action;
  int n_jobs = 1;
};

namespace detail {

// Population statistics in ascending index order, so recomputation from the
// stored rows reproduces the summary bit for bit.
template <typename Scalar>
void fill_cell_stats(SweepCellT<Scalar>& cell,
                     const std::vector<EpisodeRowT<Scalar>>& rows) {
  cell.n_episodes = static_cast<long>(rows.size());
  Scalar sum = Scalar(0);
  for (const auto& r : rows) sum += r.ret;
  cell.mean = sum / Scalar(rows.size());
  Scalar ss = Scalar(0);
  cell.min = rows.front().ret;
  cell.max = rows.front().ret;
  for (const auto& r : rows) {
    const Scalar d = r.ret - cell.mean;
    ss += d * d;
    if (r.ret < cell.min) cell.min = r.ret;
    if (r.ret > cell.max) cell.max = r.ret;
  }
  cell.std_dev = std::sqrt(ss / Scalar(rows.size()));
}

}  // namespace detail

// Heatmap evaluation over the cross product of two scale grids.  Episode
// seeds derive from (pool seed, policy slot, episode index) only, never from
// the cell, so every cell sees the same episode randomness (common random
// numbers) and a grid containing scale 1.0 reproduces a plain unperturbed
// evaluation of the same pools exactly.  Cells are independent read-only jobs;
// n_jobs > 1 runs them on a thread pool with per-cell result slots, and the
// outcome is bit-identical for any job count.
template <typename Scalar>
SweepResultT<Scalar> grid_sweep(const std::vector<PolicyPoolT<Scalar>>& pools,
                                const env::AnyEnvT<Scalar>& base_env,
                                const PerturbationSpecT<Scalar>& spec_x,
                                const PerturbationSpecT<Scalar>& spec_y,
                                const GridSweepConfig& cfg = {}) {
  spec_x.validate();
  spec_y.validate();
  if (spec_x.mode != PerturbMode::grid || spec_y.mode != PerturbMode::grid)
    throw std::invalid_argument("grid_sweep: both specs must be in grid mode");
  if (pools.empty()) throw std::invalid_argument("grid_sweep: no policy pools");
  for (const auto& pool : pools)
    if (pool.policies.empty())
      throw std::invalid_argument("grid_sweep: empty policy pool");
  if (cfg.episodes_per_policy < 1)
    throw std::invalid_argument("grid_sweep: episodes_per_policy must be >= 1");

  const Scalar base_x = base_param_value(base_env, spec_x.name);
  const Scalar base_y = base_param_value(base_env, spec_y.name);

  SweepResultT<Scalar> result;
  result.param_x_name = spec_x.name;
  result.param_y_name = spec_y.name;
  result.episodes_per_policy = cfg.episodes_per_policy;
  result.action_selection = cfg.action_selection;
  for (const auto& pool : pools) {
    result.seeds.push_back(pool.seed);
    result.policy_ids.push_back(pool.policy_ids);
  }

  const int nx = static_cast<int>(spec_x.grid.size());
  const int ny = static_cast<int>(spec_y.grid.size());
  const int n_cells = nx * ny;
  std::vector<SweepCellT<Scalar>> cells(n_cells);
  std::vector<std::vector<EpisodeRowT<Scalar>>> cell_rows(n_cells);

  std::atomic<int> next{0};
  std::mutex error_mu;
  std::exception_ptr first_error;

  const auto worker = [&] {
    while (true) {
      const int c = next.fetch_add(1);
      if (c >= n_cells) return;
      try {
        const int ix = c / ny, iy = c % ny;
        const Scalar sx = spec_x.grid[ix], sy = spec_y.grid[iy];
        const env::AnyEnvT<Scalar> cell_env = scaled_env<Scalar>(
            base_env, {{spec_x.name, sx}, {spec_y.name, sy}});
        auto& rows = cell_rows[c];
        for (const auto& pool : pools) {
          for (std::size_t p = 0; p < pool.policies.size(); ++p) {
            for (int e = 0; e < cfg.episodes_per_policy; ++e) {
              const std::uint64_t env_seed = derive_seed(
                  {pool.seed, static_cast<std::uint64_t>(p),
                   static_cast<std::uint64_t>(e)});
              EpisodeRowT<Scalar> row;
              row.param_x = sx;
              row.param_y = sy;
              row.seed = pool.seed;
              row.policy_id =
                  p < pool.policy_ids.size() ? pool.policy_ids[p] : static_cast<int>(p);
              row.episode = e;
              row.ret = run_episode(cell_env, pool.policies[p],
                                    pool.normalizer, env_seed,
                                    cfg.action_selection);
              rows.push_back(row);
            }
          }
        }
        auto& cell = cells[c];
        cell.scale_x = sx;
        cell.scale_y = sy;
        cell.value_x = base_x * sx;
        cell.value_y = base_y * sy;
        detail::fill_cell_stats(cell, rows);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (cfg.n_jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    const int n_threads = std::min(cfg.n_jobs, n_cells);
    threads.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  result.cells = std::move(cells);
  for (auto& rows : cell_rows)
    for (auto& row : rows) result.episodes.push_back(row);
  return result;
}

template <typename Scalar = double>
struct GaussianSweepResultT {
  std::vector<std::string> param_names;
  MatrixX<Scalar> scales;        // n_params x n_samples
  std::vector<Scalar> returns;   // n_samples
};

using GaussianSweepResult = GaussianSweepResultT<double>;

// Return distribution under simultaneous parameter noise: each sample draws
// one truncated-normal scale per spec (p = p_base * (1 + sigma_p * xi), xi
// truncated at +-3), one policy uniformly from the pools, and runs a single
// episode.  Sample k's randomness derives purely from (sweep_seed, k).
template <typename Scalar>
GaussianSweepResultT<Scalar> gaussian_sweep(
    const std::vector<PolicyPoolT<Scalar>>& pools,
    const env::AnyEnvT<Scalar>& base_env,
    const std::vector<PerturbationSpecT<Scalar>>& specs, long n_samples,
    std::uint64_t sweep_seed = 0,
    ActionSelection action_selection = ActionSelection::mean_action) {
  if (specs.empty())
    throw std::invalid_argument("gaussian_sweep: no perturbation specs");
  for (const auto& spec : specs) {
    spec.validate();
    if (spec.mode != PerturbMode::truncated_gaussian)
      throw std::invalid_argument(
          "gaussian_sweep: specs must be in truncated_gaussian mode");
  }
  if (pools.empty())
    throw std::invalid_argument("gaussian_sweep: no policy pools");
  for (const auto& pool : pools)
    if (pool.policies.empty())
      throw std::invalid_argument("gaussian_sweep: empty policy pool");
  if (n_samples < 1)
    throw std::invalid_argument("gaussian_sweep: n_samples must be >= 1");

  GaussianSweepResultT<Scalar> result;
  for (const auto& spec : specs) result.param_names.push_back(spec.name);
  result.scales.resize(static_cast<Eigen::Index>(specs.size()), n_samples);
  result.returns.reserve(n_samples);

  for (long k = 0; k < n_samples; ++k) {
    Rng rng(derive_seed({sweep_seed, static_cast<std::uint64_t>(k)}),
            stream::kEval);
    std::map<std::string, Scalar> scale_by_name;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const Scalar xi = static_cast<Scalar>(truncated_normal(rng));
      const Scalar scale = Scalar(1) + specs[i].sigma_p * xi;
      result.scales(static_cast<Eigen::Index>(i), k) = scale;
      scale_by_name[specs[i].name] = scale;
    }
    const auto& pool =
        pools[static_cast<std::size_t>(rng.uniform_int(pools.size()))];
    const auto& policy = pool.policies[static_cast<std::size_t>(
        rng.uniform_int(pool.policies.size()))];
    const env::AnyEnvT<Scalar> e = scaled_env(base_env, scale_by_name);
    const std::uint64_t env_seed = rng.next_u64();
    result.returns.push_back(
        run_episode(e, policy, pool.normalizer, env_seed, action_selection));
  }
  return result;
}

// Per-episode rows: one line per evaluated episode, parameters as relative
// scales (the summary carries the absolute values).
template <typename Scalar>
void write_sweep_episodes_csv(std::ostream& os,
                              const SweepResultT<Scalar>& result) {
  os << "param_x,param_y,seed,policy_id,episode,return\n";
  for (const auto& r : result.episodes)
    os << format_double(r.param_x) << ',' << format_double(r.param_y) << ','
       << r.seed << ',' << r.policy_id << ',' << r.episode << ','
       << format_double(r.ret) << '\n';
}

template <typename Scalar>
void write_sweep_summary_csv(std::ostream& os,
                             const SweepResultT<Scalar>& result) {
  os << "param_x,param_y,value_x,value_y,n_episodes,mean,std,min,max\n";
  for (const auto& c : result.cells)
    os << format_double(c.scale_x) << ',' << format_double(c.scale_y) << ','
       << format_double(c.value_x) << ',' << format_double(c.value_y) << ','
       << c.n_episodes << ',' << format_double(c.mean) << ','
       << format_double(c.std_dev) << ',' << format_double(c.min) << ','
       << format_double(c.max) << '\n';
}

// Distribution samples, one return per line, no header.
template <typename Scalar>
void write_returns_csv(std::ostream& os, const std::vector<Scalar>& returns) {
  for (const Scalar r : returns) os << format_double(r) << '\n';
}

}  // namespace scrl::harness
