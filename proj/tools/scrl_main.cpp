// Command-line front end: tabular solving, agent training, robustness
// evaluation, value-surface probes, and overhead timing, all driven by a
// dotted-key config with flag overrides (command line > file > defaults).
// Every run writes its fully resolved config to <run_dir>/config.txt, and
// feeding that file back via --config reproduces the outputs bit for bit
// (wall-clock fields excepted).

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scrl/config.hpp"
#include "scrl/env/env.hpp"
#include "scrl/env/normalizer.hpp"
#include "scrl/harness/perturb.hpp"
#include "scrl/harness/probe.hpp"
#include "scrl/harness/sweep.hpp"
#include "scrl/harness/timing.hpp"
#include "scrl/mdp/mdp_io.hpp"
#include "scrl/mdp/sc_solver.hpp"
#include "scrl/num_format.hpp"
#include "scrl/sac/agent.hpp"
#include "scrl/sac/train.hpp"

namespace fs = std::filesystem;
using scrl::config::ConfigError;
using scrl::config::KeyValues;
using scrl::config::Resolved;

namespace {

struct CommonArgs {
  std::string config_file;
  std::string out_dir;
  std::vector<std::string> sets;
  KeyValues flag_overrides;
};

// Attaches the options every command shares and returns a setter the named
// flags use to land in the command-line override layer.
void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file,
                  "config file with 'key = value' lines");
  cmd->add_option("--out", args.out_dir,
                  "exact run directory (default: generated under the run root)");
  cmd->add_option("--set", args.sets,
                  "override any config key, e.g. --set agent.epsilon=0.01");
}

std::function<void(const std::string&)> store_key(CommonArgs& args,
                                                  const std::string& key) {
  return [&args, key](const std::string& value) {
    args.flag_overrides[key] = value;
  };
}

Resolved resolve(const std::string& command, KeyValues defaults,
                 const CommonArgs& args) {
  Resolved resolved(command, std::move(defaults));
  if (!args.config_file.empty())
    resolved.apply(scrl::config::parse_config_file(args.config_file),
                   args.config_file);
  KeyValues cli = args.flag_overrides;
  for (const auto& item : args.sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + item + "'");
    cli[scrl::config::detail::trim(item.substr(0, eq))] =
        scrl::config::detail::trim(item.substr(eq + 1));
  }
  resolved.apply(cli, "command line");
  return resolved;
}

std::string open_run_dir(const Resolved& resolved, const CommonArgs& args) {
  const std::string run_dir = scrl::config::make_run_dir(
      args.out_dir, resolved.command(), resolved.hash());
  scrl::config::write_config_echo(run_dir, resolved);
  return run_dir;
}

scrl::Metric parse_metric(const std::string& value) {
  if (value == "linf") return scrl::Metric::linf;
  if (value == "l2") return scrl::Metric::l2;
  throw ConfigError("solve.metric expects linf or l2, got '" + value + "'");
}

scrl::sac::AblationMode parse_ablation(const std::string& value) {
  if (value == "full") return scrl::sac::AblationMode::full;
  if (value == "sce_only") return scrl::sac::AblationMode::sce_only;
  if (value == "sci_only") return scrl::sac::AblationMode::sci_only;
  throw ConfigError("agent.ablation expects full, sce_only, or sci_only, got '" +
                    value + "'");
}

scrl::sac::GbrGradMode parse_gbr_grad(const std::string& value) {
  if (value == "full") return scrl::sac::GbrGradMode::full;
  if (value == "truncated") return scrl::sac::GbrGradMode::truncated;
  throw ConfigError("agent.gbr_grad expects full or truncated, got '" + value +
                    "'");
}

scrl::harness::ActionSelection parse_action_selection(const std::string& value) {
  if (value == "mean") return scrl::harness::ActionSelection::mean_action;
  if (value == "sampled") return scrl::harness::ActionSelection::sampled;
  throw ConfigError("eval.action expects mean or sampled, got '" + value + "'");
}

// env.params.* keys cover both environments; only the non-empty ones are
// applied, and a key the chosen environment does not have is an input error.
scrl::env::AnyEnv configured_env(const Resolved& resolved) {
  scrl::env::AnyEnv env = scrl::env::make_env(resolved.get_string("env.name"));
  std::map<std::string, double> overrides;
  for (const char* name :
       {"mass", "length", "damping_friction", "cart_mass", "pole_mass",
        "pole_length", "track_friction"}) {
    const std::string key = std::string("env.params.") + name;
    if (!resolved.get_string(key).empty())
      overrides[name] = resolved.get_double(key);
  }
  return overrides.empty() ? env : scrl::env::with_params(env, overrides);
}

// ---------------------------------------------------------------------------
// solve

KeyValues solve_defaults() {
  return {{"solve.mdp", ""},
          {"solve.epsilon", "0"},
          {"solve.metric", "linf"},
          {"solve.tol", "1e-10"},
          {"solve.max_iters", "1000"}};
}

int cmd_solve(const Resolved& resolved, const CommonArgs& args) {
  const std::string mdp_path = resolved.get_string("solve.mdp");
  if (mdp_path.empty()) throw ConfigError("solve.mdp is required (--mdp)");
  const scrl::FiniteMdp mdp = scrl::load_mdp(mdp_path);

  scrl::EpsilonBall ball;
  ball.epsilon = resolved.get_double("solve.epsilon");
  ball.metric = parse_metric(resolved.get_string("solve.metric"));

  const scrl::PiResult result = scrl::sc_policy_iteration(
      mdp, ball, resolved.get_double("solve.tol"),
      resolved.get_int("solve.max_iters"));

  const std::string run_dir = open_run_dir(resolved, args);
  {
    std::ofstream os(fs::path(run_dir) / "values.csv");
    scrl::write_values_csv(os, result.q);
  }
  {
    std::ofstream os(fs::path(run_dir) / "policy.csv");
    scrl::write_policy_csv(os, result.policy);
  }

  std::cout << "iterations " << result.iterations << '\n'
            << "residual " << scrl::format_double(result.final_residual) << '\n'
            << "converged " << (result.converged ? "true" : "false") << '\n'
            << "run_dir " << run_dir << '\n';
  if (!result.converged) {
    std::cerr << "error: policy iteration did not converge within "
              << resolved.get_string("solve.max_iters") << " iterations\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// train

KeyValues train_defaults() {
  return {{"env.name", "pendulum"},
          {"env.params.mass", ""},
          {"env.params.length", ""},
          {"env.params.damping_friction", ""},
          {"env.params.cart_mass", ""},
          {"env.params.pole_mass", ""},
          {"env.params.pole_length", ""},
          {"env.params.track_friction", ""},
          {"agent.epsilon", "0.005"},
          {"agent.gamma", "0.99"},
          {"agent.tau", "0.005"},
          {"agent.lr", "3e-4"},
          {"agent.hidden", "256,256"},
          {"agent.ablation", "full"},
          {"agent.gbr_grad", "full"},
          {"train.steps", "20000"},
          {"train.seeds", "0"},
          {"train.epoch_len", "1000"},
          {"train.batch", "256"},
          {"train.buffer", "1000000"},
          {"train.start_steps", "1000"},
          {"train.update_after", "1000"},
          {"train.keep_checkpoints", "10"},
          {"train.fit_normalizer", "false"},
          {"train.normalizer_steps", "1000"}};
}

// Stage one of --fit-normalizer: roll the untrained environment with uniform
// random actions and collect raw observations.  Draws come from the parameter
// stream so the training streams stay untouched and a normalized run remains
// comparable step-for-step with an unnormalized one.
scrl::MatrixXd collect_observations(const scrl::env::AnyEnv& base, long steps,
                                    std::uint64_t seed) {
  scrl::env::AnyEnv env = base;
  scrl::Rng rng(seed, scrl::stream::kParam);
  const int dim = scrl::env::obs_dim(env);
  const int act_dim = scrl::env::action_dim(env);
  scrl::MatrixXd obs(dim, steps);
  long t = 0;
  while (t < steps) {
    obs.col(t++) = scrl::env::env_reset(env, rng.next_u64());
    while (t < steps) {
      scrl::VectorXd action(act_dim);
      for (int i = 0; i < act_dim; ++i) action[i] = rng.uniform(-1.0, 1.0);
      const auto result = scrl::env::env_step(env, action);
      obs.col(t++) = result.obs;
      if (result.done || scrl::env::episode_over(env)) break;
    }
  }
  return obs;
}

int cmd_train(const Resolved& resolved, const CommonArgs& args) {
  const scrl::env::AnyEnv base = configured_env(resolved);

  scrl::sac::AgentConfig acfg;
  acfg.epsilon = resolved.get_double("agent.epsilon");
  acfg.gamma = resolved.get_double("agent.gamma");
  acfg.tau = resolved.get_double("agent.tau");
  acfg.lr = resolved.get_double("agent.lr");
  acfg.ablation = parse_ablation(resolved.get_string("agent.ablation"));
  acfg.gbr_grad = parse_gbr_grad(resolved.get_string("agent.gbr_grad"));

  const std::vector<int> hidden = resolved.get_int_list("agent.hidden");
  const std::vector<std::uint64_t> seeds = resolved.get_u64_list("train.seeds");
  if (seeds.empty()) throw ConfigError("train.seeds must list at least one seed");
  const long steps = resolved.get_long("train.steps");
  const bool fit_normalizer = resolved.get_bool("train.fit_normalizer");

  const std::string run_dir = open_run_dir(resolved, args);
  std::cout << "run_dir " << run_dir << '\n';

  for (const std::uint64_t seed : seeds) {
    scrl::sac::TrainConfig tcfg;
    tcfg.batch_size = resolved.get_int("train.batch");
    tcfg.start_steps = resolved.get_long("train.start_steps");
    tcfg.update_after = resolved.get_long("train.update_after");
    tcfg.epoch_steps = resolved.get_long("train.epoch_len");
    tcfg.buffer_capacity = resolved.get_long("train.buffer");
    tcfg.keep_checkpoints = resolved.get_int("train.keep_checkpoints");
    tcfg.seed = seed;
    tcfg.run_dir = (fs::path(run_dir) / ("seed_" + std::to_string(seed))).string();
    if (fit_normalizer)
      tcfg.normalizer = scrl::env::fit_normalizer(collect_observations(
          base, resolved.get_long("train.normalizer_steps"), seed));

    scrl::sac::AgentState agent =
        scrl::sac::init_agent(scrl::env::obs_dim(base),
                              scrl::env::action_dim(base), hidden, seed, acfg);
    scrl::sac::TrainLoop loop(std::move(agent), base, tcfg);
    loop.run(steps);

    const auto& records = loop.log().records;
    std::cout << "seed " << seed << ": epochs " << records.size();
    if (!records.empty())
      std::cout << ", final mean return "
                << scrl::format_double(records.back().mean_return);
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval

KeyValues eval_defaults() {
  return {{"eval.runs", ""},
          {"eval.mode", "grid"},
          {"eval.policies_per_seed", "4"},
          {"eval.episodes", "8"},
          {"eval.action", "mean"},
          {"eval.jobs", "1"},
          {"eval.param_x", "mass"},
          {"eval.scales_x", "0.7,0.85,1.0,1.15,1.3"},
          {"eval.param_y", "length"},
          {"eval.scales_y", "1.0"},
          {"eval.params", "mass"},
          {"eval.sigmas", "0.2"},
          {"eval.samples", "1000"},
          {"eval.sweep_seed", "0"}};
}

// One per-seed training directory: manifest for the seed and environment,
// the surviving checkpoint ring as the candidate set, and the normalizer the
// policies were trained under, if any.
scrl::harness::CheckpointPool read_run_dir(const std::string& dir,
                                           scrl::env::AnyEnv& base_env,
                                           bool first) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in)
    throw std::runtime_error("eval: cannot open manifest '" +
                             manifest_path.string() + "'");
  const nlohmann::json manifest = nlohmann::json::parse(manifest_in);

  const std::string env_name = manifest.at("env").at("name").get<std::string>();
  std::map<std::string, double> params;
  for (const auto& [key, value] : manifest.at("env").at("params").items())
    params[key] = value.get<double>();
  const scrl::env::AnyEnv run_env =
      scrl::env::with_params(scrl::env::make_env(env_name), params);
  if (first) {
    base_env = run_env;
  } else if (scrl::env::env_name(base_env) != env_name) {
    throw ConfigError("eval: run '" + dir + "' trained on " + env_name +
                      " but earlier runs used " +
                      scrl::env::env_name(base_env));
  }

  scrl::harness::CheckpointPool pool;
  pool.seed = manifest.at("seed").get<std::uint64_t>();
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != 21 || name.rfind("checkpoint_", 0) != 0 ||
        name.substr(17) != ".txt")
      continue;
    if (!std::all_of(name.begin() + 11, name.begin() + 17,
                     [](unsigned char c) { return std::isdigit(c); }))
      continue;
    pool.paths.push_back(entry.path().string());
  }
  std::sort(pool.paths.begin(), pool.paths.end());
  if (pool.paths.empty())
    throw std::runtime_error("eval: no checkpoints in '" + dir + "'");

  const fs::path nrm_path = fs::path(dir) / "normalizer.txt";
  if (fs::exists(nrm_path)) {
    std::ifstream is(nrm_path);
    pool.normalizer = scrl::env::read_normalizer(is, "obs");
  }
  return pool;
}

int cmd_eval(const Resolved& resolved, const CommonArgs& args) {
  const std::vector<std::string> runs = resolved.get_string_list("eval.runs");
  if (runs.empty())
    throw ConfigError("eval.runs must list at least one training run directory");

  scrl::env::AnyEnv base = scrl::env::make_env("pendulum");
  std::vector<scrl::harness::CheckpointPool> pools;
  for (std::size_t i = 0; i < runs.size(); ++i)
    pools.push_back(read_run_dir(runs[i], base, i == 0));

  const auto loaded = scrl::harness::load_policy_pools(
      pools, resolved.get_int("eval.policies_per_seed"));
  const auto action = parse_action_selection(resolved.get_string("eval.action"));
  const std::string mode = resolved.get_string("eval.mode");
  const std::string run_dir = open_run_dir(resolved, args);

  if (mode == "grid") {
    scrl::harness::PerturbationSpec spec_x, spec_y;
    spec_x.name = resolved.get_string("eval.param_x");
    spec_x.grid = resolved.get_double_list("eval.scales_x");
    spec_y.name = resolved.get_string("eval.param_y");
    spec_y.grid = resolved.get_double_list("eval.scales_y");

    scrl::harness::GridSweepConfig cfg;
    cfg.episodes_per_policy = resolved.get_int("eval.episodes");
    cfg.action_selection = action;
    cfg.n_jobs = resolved.get_int("eval.jobs");

    const auto result =
        scrl::harness::grid_sweep(loaded, base, spec_x, spec_y, cfg);
    {
      std::ofstream os(fs::path(run_dir) / "episodes.csv");
      scrl::harness::write_sweep_episodes_csv(os, result);
    }
    {
      std::ofstream os(fs::path(run_dir) / "summary.csv");
      scrl::harness::write_sweep_summary_csv(os, result);
    }
    for (const auto& cell : result.cells)
      std::cout << spec_x.name << "=" << scrl::format_double(cell.scale_x)
                << " " << spec_y.name << "=" << scrl::format_double(cell.scale_y)
                << " mean " << scrl::format_double(cell.mean) << " std "
                << scrl::format_double(cell.std_dev) << '\n';
  } else if (mode == "gaussian") {
    const auto names = resolved.get_string_list("eval.params");
    const auto sigmas = resolved.get_double_list("eval.sigmas");
    if (names.size() != sigmas.size() || names.empty())
      throw ConfigError("eval.params and eval.sigmas must be non-empty lists "
                        "of equal length");
    std::vector<scrl::harness::PerturbationSpec> specs;
    for (std::size_t i = 0; i < names.size(); ++i) {
      scrl::harness::PerturbationSpec spec;
      spec.name = names[i];
      spec.mode = scrl::harness::PerturbMode::truncated_gaussian;
      spec.sigma_p = sigmas[i];
      specs.push_back(spec);
    }

    const auto result = scrl::harness::gaussian_sweep(
        loaded, base, specs, resolved.get_long("eval.samples"),
        resolved.get_u64("eval.sweep_seed"), action);
    {
      std::ofstream os(fs::path(run_dir) / "returns.csv");
      scrl::harness::write_returns_csv(os, result.returns);
    }
    {
      std::ofstream os(fs::path(run_dir) / "scales.csv");
      for (std::size_t i = 0; i < result.param_names.size(); ++i)
        os << (i ? "," : "") << result.param_names[i];
      os << '\n';
      for (Eigen::Index k = 0; k < result.scales.cols(); ++k) {
        for (Eigen::Index i = 0; i < result.scales.rows(); ++i)
          os << (i ? "," : "") << scrl::format_double(result.scales(i, k));
        os << '\n';
      }
    }
    double sum = 0.0;
    for (const double r : result.returns) sum += r;
    const double mean = sum / static_cast<double>(result.returns.size());
    std::cout << "samples " << result.returns.size() << " mean return "
              << scrl::format_double(mean) << '\n';
  } else {
    throw ConfigError("eval.mode expects grid or gaussian, got '" + mode + "'");
  }

  std::cout << "run_dir " << run_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// probe

KeyValues probe_defaults() {
  return {{"probe.checkpoint", ""},
          {"probe.normalizer", ""},
          {"probe.state", ""},
          {"probe.dir_x", ""},
          {"probe.dir_y", ""},
          {"probe.half_width", "0.005"},
          {"probe.grid_n", "5"},
          {"probe.noise_draws", "1000"},
          {"probe.seed", "0"}};
}

int cmd_probe(const Resolved& resolved, const CommonArgs& args) {
  const std::string ckpt_path = resolved.get_string("probe.checkpoint");
  if (ckpt_path.empty())
    throw ConfigError("probe.checkpoint is required (--checkpoint)");
  std::ifstream ckpt_in(ckpt_path);
  if (!ckpt_in)
    throw std::runtime_error("probe: cannot open checkpoint '" + ckpt_path + "'");
  const scrl::sac::AgentState agent = scrl::sac::read_agent(ckpt_in);
  const int obs_dim = agent.obs_dim();

  const auto parse_vector = [&](const std::string& key,
                                const scrl::VectorXd& fallback) {
    if (resolved.get_string(key).empty()) return fallback;
    const auto values = resolved.get_double_list(key);
    if (static_cast<int>(values.size()) != obs_dim)
      throw ConfigError("config key '" + key + "' needs " +
                        std::to_string(obs_dim) + " components");
    scrl::VectorXd v(obs_dim);
    for (int i = 0; i < obs_dim; ++i) v[i] = values[i];
    return v;
  };

  scrl::VectorXd state =
      parse_vector("probe.state", scrl::VectorXd::Zero(obs_dim));
  const scrl::VectorXd dir_x =
      parse_vector("probe.dir_x", scrl::VectorXd::Unit(obs_dim, 0));
  const scrl::VectorXd dir_y =
      parse_vector("probe.dir_y", scrl::VectorXd::Unit(obs_dim, 1));

  // The critics see normalized observations, so the probe runs in that space;
  // a raw-coordinate state is translated on the way in.
  const std::string nrm_path = resolved.get_string("probe.normalizer");
  if (!nrm_path.empty()) {
    std::ifstream is(nrm_path);
    if (!is)
      throw std::runtime_error("probe: cannot open normalizer '" + nrm_path +
                               "'");
    state = scrl::env::read_normalizer(is, "obs").normalize(state);
  }

  scrl::Rng noise_rng(resolved.get_u64("probe.seed"), scrl::stream::kEval);
  const scrl::MatrixXd noise = scrl::diff::sample_noise<double>(
      noise_rng, agent.action_dim(), resolved.get_long("probe.noise_draws"));

  const auto grid = scrl::harness::linearity_probe(
      agent.q1, agent.q2, agent.policy, state, dir_x, dir_y,
      resolved.get_double("probe.half_width"), resolved.get_int("probe.grid_n"),
      noise);
  const auto fit = scrl::harness::plane_fit(grid);

  const std::string run_dir = open_run_dir(resolved, args);
  {
    std::ofstream os(fs::path(run_dir) / "probe.csv");
    scrl::harness::write_probe_csv(os, grid);
  }
  {
    nlohmann::ordered_json j;
    j["coef_x"] = fit.coef_x;
    j["coef_y"] = fit.coef_y;
    j["intercept"] = fit.intercept;
    j["max_residual"] = fit.max_residual;
    j["r_squared"] = fit.r_squared;
    std::ofstream os(fs::path(run_dir) / "probe_fit.json");
    os << j.dump(2) << '\n';
  }

  std::cout << "coef_x " << scrl::format_double(fit.coef_x) << '\n'
            << "coef_y " << scrl::format_double(fit.coef_y) << '\n'
            << "max_residual " << scrl::format_double(fit.max_residual) << '\n'
            << "r_squared " << scrl::format_double(fit.r_squared) << '\n'
            << "run_dir " << run_dir << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// timing

KeyValues timing_defaults() {
  return {{"timing.env", "pendulum"},
          {"timing.epsilons", "0,0.005"},
          {"timing.hidden", "256,256"},
          {"timing.batch", "256"},
          {"timing.window_steps", "1000"},
          {"timing.windows", "5"},
          {"timing.start_steps", "256"},
          {"timing.buffer", "100000"},
          {"timing.seed", "0"},
          {"timing.gamma", "0.99"},
          {"timing.tau", "0.005"},
          {"timing.lr", "3e-4"}};
}

int cmd_timing(const Resolved& resolved, const CommonArgs& args) {
  const scrl::env::AnyEnv env =
      scrl::env::make_env(resolved.get_string("timing.env"));
  const auto epsilon_tokens =
      scrl::config::detail::split_commas(resolved.get_string("timing.epsilons"));
  const auto epsilons = resolved.get_double_list("timing.epsilons");
  if (epsilons.empty())
    throw ConfigError("timing.epsilons must list at least one value");

  const std::vector<int> hidden = resolved.get_int_list("timing.hidden");
  const std::uint64_t seed = resolved.get_u64("timing.seed");

  std::vector<scrl::harness::TimingConfig> configs;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    scrl::harness::TimingConfig config;
    config.label = "eps=" + epsilon_tokens[i];
    scrl::sac::AgentConfig acfg;
    acfg.epsilon = epsilons[i];
    acfg.gamma = resolved.get_double("timing.gamma");
    acfg.tau = resolved.get_double("timing.tau");
    acfg.lr = resolved.get_double("timing.lr");
    config.agent = scrl::sac::init_agent(scrl::env::obs_dim(env),
                                         scrl::env::action_dim(env), hidden,
                                         seed, acfg);
    config.environment = env;
    config.train.batch_size = resolved.get_int("timing.batch");
    config.train.start_steps = resolved.get_long("timing.start_steps");
    config.train.update_after = resolved.get_long("timing.start_steps");
    config.train.epoch_steps = resolved.get_long("timing.window_steps");
    config.train.buffer_capacity = resolved.get_long("timing.buffer");
    config.train.seed = seed;
    configs.push_back(std::move(config));
  }

  const auto report = scrl::harness::timing_report(
      std::move(configs), resolved.get_long("timing.window_steps"),
      resolved.get_int("timing.windows"));

  const std::string run_dir = open_run_dir(resolved, args);
  {
    std::ofstream os(fs::path(run_dir) / "timing.csv");
    scrl::harness::write_timing_csv(os, report);
  }
  scrl::harness::format_timing_table(std::cout, report);
  std::cout << "run_dir " << run_dir << '\n';
  return 0;
}

int guarded(int (*body)(const Resolved&, const CommonArgs&),
            const std::string& command, KeyValues defaults,
            const CommonArgs& args) {
  try {
    return body(resolve(command, std::move(defaults), args), args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const scrl::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"State-conservative reinforcement learning toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  CLI::App* solve = app.add_subcommand(
      "solve", "solve a tabular MDP with state-conservative policy iteration");
  add_common_options(solve, solve_args);
  solve->add_option_function<std::string>("--mdp",
                                          store_key(solve_args, "solve.mdp"),
                                          "MDP description file");
  solve->add_option_function<std::string>(
      "--epsilon", store_key(solve_args, "solve.epsilon"),
      "disturbance ball radius");
  solve->add_option_function<std::string>(
      "--metric", store_key(solve_args, "solve.metric"), "ball metric: linf or l2");
  solve->add_option_function<std::string>(
      "--tol", store_key(solve_args, "solve.tol"), "evaluation tolerance");

  CommonArgs train_args;
  CLI::App* train = app.add_subcommand(
      "train", "train a state-conservative SAC agent, one run per seed");
  add_common_options(train, train_args);
  train->add_option_function<std::string>(
      "--env", store_key(train_args, "env.name"), "environment name");
  train->add_option_function<std::string>(
      "--epsilon", store_key(train_args, "agent.epsilon"),
      "gradient penalty radius (0 recovers plain SAC)");
  train->add_option_function<std::string>(
      "--seed", store_key(train_args, "train.seeds"), "single training seed");
  train->add_option_function<std::string>(
      "--seeds", store_key(train_args, "train.seeds"),
      "comma-separated training seeds");
  train->add_option_function<std::string>(
      "--steps", store_key(train_args, "train.steps"),
      "environment steps per seed");
  train->add_option_function<std::string>(
      "--ablation", store_key(train_args, "agent.ablation"),
      "full, sce_only, or sci_only");
  train->add_flag_callback(
      "--fit-normalizer",
      [&train_args] { train_args.flag_overrides["train.fit_normalizer"] = "true"; },
      "fit an observation normalizer on random rollouts before training");

  CommonArgs eval_args;
  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate trained checkpoints under physics perturbations");
  add_common_options(eval, eval_args);
  eval->add_option_function<std::string>(
      "--runs", store_key(eval_args, "eval.runs"),
      "comma-separated per-seed training run directories");
  eval->add_option_function<std::string>(
      "--mode", store_key(eval_args, "eval.mode"), "grid or gaussian");
  eval->add_option_function<std::string>(
      "--jobs", store_key(eval_args, "eval.jobs"), "parallel sweep workers");
  eval->add_option_function<std::string>(
      "--param-x", store_key(eval_args, "eval.param_x"), "x-axis parameter");
  eval->add_option_function<std::string>(
      "--scales-x", store_key(eval_args, "eval.scales_x"),
      "comma-separated x-axis scales");
  eval->add_option_function<std::string>(
      "--param-y", store_key(eval_args, "eval.param_y"), "y-axis parameter");
  eval->add_option_function<std::string>(
      "--scales-y", store_key(eval_args, "eval.scales_y"),
      "comma-separated y-axis scales");
  eval->add_option_function<std::string>(
      "--samples", store_key(eval_args, "eval.samples"),
      "gaussian-mode sample count");

  CommonArgs probe_args;
  CLI::App* probe = app.add_subcommand(
      "probe", "probe local linearity of the learned value surface");
  add_common_options(probe, probe_args);
  probe->add_option_function<std::string>(
      "--checkpoint", store_key(probe_args, "probe.checkpoint"),
      "agent checkpoint file");
  probe->add_option_function<std::string>(
      "--normalizer", store_key(probe_args, "probe.normalizer"),
      "normalizer file; the probe state is given in raw coordinates");
  probe->add_option_function<std::string>(
      "--half-width", store_key(probe_args, "probe.half_width"),
      "probe grid half width");
  probe->add_option_function<std::string>(
      "--draws", store_key(probe_args, "probe.noise_draws"),
      "action noise draws per grid point");

  CommonArgs timing_args;
  CLI::App* timing = app.add_subcommand(
      "timing", "measure per-step overhead of the gradient penalty");
  add_common_options(timing, timing_args);
  timing->add_option_function<std::string>(
      "--epsilons", store_key(timing_args, "timing.epsilons"),
      "comma-separated penalty radii; first is the baseline");
  timing->add_option_function<std::string>(
      "--windows", store_key(timing_args, "timing.windows"),
      "timed windows per configuration");
  timing->add_option_function<std::string>(
      "--window-steps", store_key(timing_args, "timing.window_steps"),
      "steps per timed window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*solve) return guarded(cmd_solve, "solve", solve_defaults(), solve_args);
  if (*train) return guarded(cmd_train, "train", train_defaults(), train_args);
  if (*eval) return guarded(cmd_eval, "eval", eval_defaults(), eval_args);
  if (*probe) return guarded(cmd_probe, "probe", probe_defaults(), probe_args);
  return guarded(cmd_timing, "timing", timing_defaults(), timing_args);
}
