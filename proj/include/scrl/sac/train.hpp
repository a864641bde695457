#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scrl/env/env.hpp"
#include "scrl/env/normalizer.hpp"
#include "scrl/sac/agent.hpp"

namespace scrl::sac {

template <typename Scalar = double>
struct TrainConfigT {
  int batch_size = 256;
  long start_steps = 1000;   // uniform random actions before this many steps
  long update_after = 1000;  // first gradient step once this many steps stored
  long epoch_steps = 1000;
  Eigen::Index buffer_capacity = 1000000;
  std::uint64_t seed = 0;
  std::string run_dir;  // empty: no files written
  int keep_checkpoints = 10;
  std::optional<env::ObsNormalizerT<Scalar>> normalizer;
  // Called right before every episode reset (including the first), free to
  // replace the environment in place.  Domain randomization hangs off this;
  // hooks must draw randomness from their own stream so the training streams
  // stay aligned with an unhooked run.
  std::function<void(env::AnyEnvT<Scalar>&)> on_episode_reset;
};

using TrainConfig = TrainConfigT<double>;

template <typename Scalar = double>
struct EpochRecordT {
  long epoch = 0;
  long env_steps = 0;
  Scalar mean_return = Scalar(0);
  Scalar critic_loss1 = Scalar(0);
  Scalar critic_loss2 = Scalar(0);
  Scalar actor_loss = Scalar(0);
  Scalar alpha = Scalar(0);
  Scalar gbr_fraction = Scalar(0);
  double wall_time_ms = 0;
};

using EpochRecord = EpochRecordT<double>;

// wall_time_ms is the one nondeterministic field; consumers comparing runs
// for reproducibility must ignore it and nothing else.
template <typename Scalar>
nlohmann::ordered_json to_json(const EpochRecordT<Scalar>& r) {
  return nlohmann::ordered_json{{"epoch", r.epoch},
                                {"env_steps", r.env_steps},
                                {"mean_return", r.mean_return},
                                {"critic_loss1", r.critic_loss1},
                                {"critic_loss2", r.critic_loss2},
                                {"actor_loss", r.actor_loss},
                                {"alpha", r.alpha},
                                {"gbr_fraction", r.gbr_fraction},
                                {"wall_time_ms", r.wall_time_ms}};
}

template <typename Scalar = double>
struct TrainingLogT {
  std::vector<EpochRecordT<Scalar>> records;

  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records) os << to_json(r).dump() << '\n';
  }
};

using TrainingLog = TrainingLogT<double>;

// Single-writer training loop: one environment step, then (once warm) one
// critic, actor, temperature, and Polyak update.  All stochastic choices are
// drawn from named streams in a fixed order per step — episode seeds and
// warmup actions from the env stream, action/update noise from the policy
// stream, batch indices from the buffer stream — so two loops with equal
// seeds consume identical randomness and an epsilon=0 agent can be compared
// bit-for-bit against a plain SAC reference.
template <typename Scalar = double>
class TrainLoopT {
 public:
  TrainLoopT(AgentStateT<Scalar> agent, env::AnyEnvT<Scalar> environment,
             TrainConfigT<Scalar> cfg)
      : agent_(std::move(agent)),
        env_(std::move(environment)),
        cfg_(std::move(cfg)),
        buffer_(agent_.obs_dim(), agent_.action_dim(), cfg_.buffer_capacity),
        rng_env_(cfg_.seed, stream::kEnv),
        rng_policy_(cfg_.seed, stream::kPolicy),
        rng_buffer_(cfg_.seed, stream::kBuffer) {
    agent_.validate();
    if (env::obs_dim(env_) != agent_.obs_dim() ||
        env::action_dim(env_) != agent_.action_dim())
      throw std::invalid_argument("train: agent/env dimension mismatch");
    if (cfg_.batch_size < 1 || cfg_.epoch_steps < 1 || cfg_.start_steps < 0 ||
        cfg_.update_after < 0 || cfg_.keep_checkpoints < 1)
      throw std::invalid_argument("train: bad loop configuration");
    if (cfg_.normalizer) cfg_.normalizer->validate();
    if (!cfg_.run_dir.empty()) {
      std::filesystem::create_directories(cfg_.run_dir);
      write_manifest();
      if (cfg_.normalizer) {
        std::ofstream os(std::filesystem::path(cfg_.run_dir) /
                         "normalizer.txt");
        env::write_normalizer(os, "obs", *cfg_.normalizer);
      }
    }
    epoch_clock_ = std::chrono::steady_clock::now();
  }

  void step_once() {
    if (!episode_open_) {
      if (cfg_.on_episode_reset) cfg_.on_episode_reset(env_);
      const std::uint64_t reset_seed = rng_env_.next_u64();
      obs_ = normalized(env::env_reset(env_, reset_seed));
      episode_return_ = Scalar(0);
      episode_open_ = true;
    }

    VectorX<Scalar> action(agent_.action_dim());
    if (total_steps_ < cfg_.start_steps) {
      for (int i = 0; i < agent_.action_dim(); ++i)
        action[i] = static_cast<Scalar>(rng_env_.uniform(-1.0, 1.0));
    } else {
      const MatrixX<Scalar> noise =
          diff::sample_noise<Scalar>(rng_policy_, agent_.action_dim(), 1);
      action = diff::policy_sample(agent_.policy, obs_, noise).action;
    }

    const auto result = env::env_step(env_, action);
    const VectorX<Scalar> next_obs = normalized(result.obs);
    buffer_.add({obs_, action, result.reward, next_obs, result.done});
    episode_return_ += result.reward;
    total_steps_ += 1;

    if (result.done || env::episode_over(env_)) {
      completed_returns_.push_back(episode_return_);
      episode_open_ = false;
    } else {
      obs_ = next_obs;
    }

    if (total_steps_ >= cfg_.update_after &&
        buffer_.size() >= cfg_.batch_size) {
      try {
        const auto batch = buffer_.sample(rng_buffer_, cfg_.batch_size);
        const auto critic = critic_update(agent_, batch, rng_policy_);
        const auto actor = actor_update(agent_, batch, rng_policy_);
        alpha_update(agent_, batch, rng_policy_);
        polyak_update(agent_, agent_.cfg.tau);
        acc_loss1_ += critic.loss1;
        acc_loss2_ += critic.loss2;
        acc_actor_ += actor.loss;
        acc_gbr_ += actor.gbr_fraction;
        n_updates_ += 1;
      } catch (const std::exception&) {
        // Divergence or a hard numeric failure: preserve the last consistent
        // parameters for postmortem, then let the caller see the error.
        if (!cfg_.run_dir.empty()) {
          std::ofstream os(std::filesystem::path(cfg_.run_dir) /
                           "checkpoint_diverged.txt");
          write_agent(os, agent_);
        }
        throw;
      }
    }

    if (total_steps_ % cfg_.epoch_steps == 0) finalize_epoch();
  }

  void run(long steps) {
    for (long i = 0; i < steps; ++i) step_once();
  }

  AgentStateT<Scalar>& agent() { return agent_; }
  const AgentStateT<Scalar>& agent() const { return agent_; }
  const env::AnyEnvT<Scalar>& environment() const { return env_; }
  const TrainingLogT<Scalar>& log() const { return log_; }
  const ReplayBufferT<Scalar>& buffer() const { return buffer_; }
  long total_steps() const { return total_steps_; }

  // Normalization applied to every observation the agent or buffer sees.
  VectorX<Scalar> normalized(const VectorX<Scalar>& raw_obs) const {
    return cfg_.normalizer ? cfg_.normalizer->normalize(raw_obs) : raw_obs;
  }

  static std::string checkpoint_name(long epoch) {
    std::ostringstream name;
    name << "checkpoint_" << std::setfill('0') << std::setw(6) << epoch
         << ".txt";
    return name.str();
  }

 private:
  void finalize_epoch() {
    const auto now = std::chrono::steady_clock::now();
    EpochRecordT<Scalar> rec;
    rec.epoch = ++epoch_;
    rec.env_steps = total_steps_;
    if (!completed_returns_.empty()) {
      Scalar sum = Scalar(0);
      for (const Scalar r : completed_returns_) sum += r;
      last_mean_return_ = sum / Scalar(completed_returns_.size());
    }
    rec.mean_return = last_mean_return_;
    if (n_updates_ > 0) {
      rec.critic_loss1 = acc_loss1_ / Scalar(n_updates_);
      rec.critic_loss2 = acc_loss2_ / Scalar(n_updates_);
      rec.actor_loss = acc_actor_ / Scalar(n_updates_);
      rec.gbr_fraction = acc_gbr_ / Scalar(n_updates_);
    }
    rec.alpha = agent_.alpha();
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(now - epoch_clock_).count();
    log_.records.push_back(rec);

    if (!cfg_.run_dir.empty()) {
      const std::filesystem::path dir(cfg_.run_dir);
      {
        std::ofstream os(dir / "train_log.jsonl", std::ios::app);
        os << to_json(rec).dump() << '\n';
      }
      const std::filesystem::path ckpt = dir / checkpoint_name(epoch_);
      {
        std::ofstream os(ckpt);
        write_agent(os, agent_);
      }
      checkpoint_ring_.push_back(ckpt);
      while (static_cast<int>(checkpoint_ring_.size()) >
             cfg_.keep_checkpoints) {
        std::filesystem::remove(checkpoint_ring_.front());
        checkpoint_ring_.pop_front();
      }
    }

    completed_returns_.clear();
    acc_loss1_ = acc_loss2_ = acc_actor_ = acc_gbr_ = Scalar(0);
    n_updates_ = 0;
    epoch_clock_ = now;
  }

  void write_manifest() const {
    nlohmann::ordered_json m;
    m["epsilon"] = agent_.cfg.epsilon;
    m["gamma"] = agent_.cfg.gamma;
    m["tau"] = agent_.cfg.tau;
    m["lr"] = agent_.cfg.lr;
    m["ablation"] = agent_.cfg.ablation == AblationMode::full ? "full"
                    : agent_.cfg.ablation == AblationMode::sce_only
                        ? "sce_only"
                        : "sci_only";
    m["gbr_grad"] =
        agent_.cfg.gbr_grad == GbrGradMode::full ? "full" : "truncated";
    m["seed"] = cfg_.seed;
    m["batch_size"] = cfg_.batch_size;
    m["start_steps"] = cfg_.start_steps;
    m["update_after"] = cfg_.update_after;
    m["epoch_steps"] = cfg_.epoch_steps;
    m["buffer_capacity"] = static_cast<long>(cfg_.buffer_capacity);
    m["entropy_target"] = agent_.entropy_target;
    m["normalized_observations"] = cfg_.normalizer.has_value();
    std::vector<int> hidden(agent_.policy.trunk.layer_sizes.begin() + 1,
                            agent_.policy.trunk.layer_sizes.end() - 1);
    m["hidden"] = hidden;
    m["env"]["name"] = env::env_name(env_);
    for (const auto& [key, value] : env::params_map(env_))
      m["env"]["params"][key] = value;
    std::ofstream os(std::filesystem::path(cfg_.run_dir) / "manifest.json");
    os << m.dump(2) << '\n';
  }

  AgentStateT<Scalar> agent_;
  env::AnyEnvT<Scalar> env_;
  TrainConfigT<Scalar> cfg_;
  ReplayBufferT<Scalar> buffer_;
  Rng rng_env_, rng_policy_, rng_buffer_;

  VectorX<Scalar> obs_;
  Scalar episode_return_ = Scalar(0);
  bool episode_open_ = false;
  long total_steps_ = 0;
  long epoch_ = 0;

  std::vector<Scalar> completed_returns_;
  Scalar last_mean_return_ = Scalar(0);
  Scalar acc_loss1_ = Scalar(0), acc_loss2_ = Scalar(0);
  Scalar acc_actor_ = Scalar(0), acc_gbr_ = Scalar(0);
  long n_updates_ = 0;
  std::chrono::steady_clock::time_point epoch_clock_;
  TrainingLogT<Scalar> log_;
  std::deque<std::filesystem::path> checkpoint_ring_;
};

using TrainLoop = TrainLoopT<double>;

template <typename Scalar>
TrainingLogT<Scalar> train(AgentStateT<Scalar>& agent,
                           const env::AnyEnvT<Scalar>& environment, long steps,
                           const TrainConfigT<Scalar>& cfg) {
  TrainLoopT<Scalar> loop(std::move(agent), environment, cfg);
  loop.run(steps);
  agent = loop.agent();
  return loop.log();
}

}  // namespace scrl::sac
