#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cocosched/neural.hpp"
#include "cocosched/pidlag.hpp"
#include "cocosched/power.hpp"
#include "cocosched/rng.hpp"
#include "cocosched/simenv.hpp"
#include "cocosched/util.hpp"
#include "cocosched/workload.hpp"

namespace cocosched {

struct EpisodeSlice {
  std::size_t start = 0;
  std::size_t length = 0;
  double return_sum = 0.0;  // undiscounted episodic return J
  double cost_sum = 0.0;    // undiscounted episodic cost J_C
};

struct TrajectoryBatch {
  int obs_dim = 0;
  int actions = 0;
  std::vector<double> obs;         // size * obs_dim
  std::vector<std::uint8_t> mask;  // size * actions
  std::vector<int> action;
  std::vector<double> logprob;
  std::vector<double> reward;
  std::vector<double> cost;
  std::vector<double> v_r;
  std::vector<double> v_c;
  std::vector<std::uint8_t> done;
  std::vector<EpisodeSlice> episodes;

  std::size_t size() const { return action.size(); }
};

struct TrainConfig {
  EnvConfig env;
  WorkloadConfig workload;
  PowerModelConfig power_model;
  PowerKind power_kind = PowerKind::constant;
  double power_peak = 1000.0;
  Tick power_period = 24;

  int batch_size = 2048;
  double learning_rate = 3e-4;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  int epochs = 4;
  int minibatch_size = 256;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double cost_value_coef = 0.5;
  int iterations = 100;
  double cost_limit = std::numeric_limits<double>::infinity();
  PidGains pid_gains{2.0, 1.0, 1.0};
  bool compat_double_gain = false;
  bool discounted_cost_estimate = false;  // J_C fed to the PID controller
  std::uint64_t seed = 1;
  int hidden1 = 64;
  int hidden2 = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int checkpoint_every = 50;

  double discount() const { return env.discount; }
};

inline void validate(const TrainConfig& cfg) {
  validate(cfg.env);
  validate(cfg.workload);
  validate(cfg.power_model);
  if (cfg.workload.horizon < cfg.env.episode_length)
    throw ConfigError("workload.horizon must cover env.episode_length");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (cfg.minibatch_size < 1 || cfg.minibatch_size > cfg.batch_size)
    throw ConfigError("train.minibatch_size must be in [1, batch_size]");
  if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0))
    throw ConfigError("train.gae_lambda must be in [0,1]");
  if (cfg.clip_ratio <= 0) throw ConfigError("train.clip_ratio must be > 0");
  if (cfg.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (cfg.iterations < 0) throw ConfigError("train.iterations must be >= 0");
  if (std::isnan(cfg.cost_limit) || cfg.cost_limit < 0)
    throw ConfigError("train.cost_limit must be >= 0");
  if (cfg.hidden1 < 1 || cfg.hidden2 < 1)
    throw ConfigError("train.hidden sizes must be >= 1");
  if (std::isfinite(cfg.cost_limit)) validate(cfg.pid_gains);
}

// Canonical field dump; its FNV-1a hash is the config digest embedded in
// checkpoints and reports.
inline std::string canonical_string(const TrainConfig& c) {
  std::string s;
  auto kv = [&s](const char* key, const std::string& val) {
    s += key;
    s += '=';
    s += val;
    s += '\n';
  };
  kv("env.max_nodes", std::to_string(c.env.max_nodes));
  kv("env.horizon_window", std::to_string(c.env.horizon_window));
  kv("env.ready_slots", std::to_string(c.env.ready_slots));
  kv("env.wait_capacity", std::to_string(c.env.wait_capacity));
  kv("env.episode_length", std::to_string(c.env.episode_length));
  kv("env.delay_penalty", dtos(c.env.delay_penalty));
  kv("env.decisions_per_step", std::to_string(c.env.decisions_per_step));
  kv("env.discount", dtos(c.env.discount));
  kv("workload.arrival_rate", dtos(c.workload.arrival_rate));
  kv("workload.short_fraction", dtos(c.workload.short_fraction));
  kv("workload.short_duration_min", std::to_string(c.workload.short_duration_min));
  kv("workload.short_duration_max", std::to_string(c.workload.short_duration_max));
  kv("workload.long_duration_min", std::to_string(c.workload.long_duration_min));
  kv("workload.long_duration_max", std::to_string(c.workload.long_duration_max));
  kv("workload.req_min", std::to_string(c.workload.req_min));
  kv("workload.req_max", std::to_string(c.workload.req_max));
  {
    std::string q;
    for (double v : c.workload.qos_choices) {
      if (!q.empty()) q += ',';
      q += dtos(v);
    }
    kv("workload.qos_choices", q);
  }
  kv("workload.horizon", std::to_string(c.workload.horizon));
  kv("node_power", dtos(c.power_model.node_power));
  kv("max_nodes", std::to_string(c.power_model.max_nodes));
  kv("min_nodes", std::to_string(c.power_model.min_nodes));
  kv("battery.capacity", dtos(c.power_model.battery.capacity));
  kv("battery.charge", dtos(c.power_model.battery.charge));
  kv("battery.max_rate", dtos(c.power_model.battery.max_rate));
  kv("power.kind", c.power_kind == PowerKind::solar
                       ? "solar"
                       : (c.power_kind == PowerKind::wind ? "wind" : "constant"));
  kv("power.peak", dtos(c.power_peak));
  kv("power.period", std::to_string(c.power_period));
  kv("train.batch_size", std::to_string(c.batch_size));
  kv("train.learning_rate", dtos(c.learning_rate));
  kv("train.gae_lambda", dtos(c.gae_lambda));
  kv("train.clip_ratio", dtos(c.clip_ratio));
  kv("train.epochs", std::to_string(c.epochs));
  kv("train.minibatch_size", std::to_string(c.minibatch_size));
  kv("train.entropy_coef", dtos(c.entropy_coef));
  kv("train.value_coef", dtos(c.value_coef));
  kv("train.cost_value_coef", dtos(c.cost_value_coef));
  kv("train.iterations", std::to_string(c.iterations));
  kv("train.cost_limit", dtos(c.cost_limit));
  kv("train.pid_kp", dtos(c.pid_gains.kp));
  kv("train.pid_ki", dtos(c.pid_gains.ki));
  kv("train.pid_kd", dtos(c.pid_gains.kd));
  kv("train.compat_double_gain", c.compat_double_gain ? "1" : "0");
  kv("train.discounted_cost_estimate", c.discounted_cost_estimate ? "1" : "0");
  kv("train.seed", std::to_string(c.seed));
  kv("train.hidden1", std::to_string(c.hidden1));
  kv("train.hidden2", std::to_string(c.hidden2));
  kv("train.adam_beta1", dtos(c.adam_beta1));
  kv("train.adam_beta2", dtos(c.adam_beta2));
  kv("train.adam_eps", dtos(c.adam_eps));
  kv("train.checkpoint_every", std::to_string(c.checkpoint_every));
  return s;
}

inline std::string config_digest(const TrainConfig& cfg) {
  return hex64(fnv1a(canonical_string(cfg)));
}

using EnvFactory = std::function<SimEnv(std::uint64_t episode_seed)>;

// Fresh synthetic workload and power trace per episode, seeds forked from
// the rollout stream so training never reuses one fixed trace.
inline EnvFactory make_env_factory(const TrainConfig& cfg) {
  return [cfg](std::uint64_t episode_seed) {
    Rng fork(episode_seed);
    const std::uint64_t trace_seed = fork.fork_seed();
    const std::uint64_t power_seed = fork.fork_seed();
    JobTrace trace = generate_synthetic(cfg.workload, trace_seed);
    // Forecast rows peek past the episode end, so generate that far.
    const Tick power_horizon = cfg.env.episode_length + cfg.env.horizon_window;
    PowerTrace power = generate_power_trace(cfg.power_kind, power_horizon,
                                            cfg.power_peak, power_seed,
                                            cfg.power_period);
    return SimEnv(cfg.env, std::move(trace), std::move(power), cfg.power_model,
                  episode_seed);
  };
}

// Complete episodes until at least min_steps decision steps are recorded.
inline TrajectoryBatch collect_rollouts(const EnvFactory& factory,
                                        const NetParams& params, int min_steps,
                                        Rng& rng) {
  TrajectoryBatch batch;
  batch.obs_dim = params.in_dim;
  batch.actions = params.actions;
  while (batch.size() < static_cast<std::size_t>(min_steps)) {
    SimEnv env = factory(rng.fork_seed());
    EpisodeSlice ep;
    ep.start = batch.size();
    Observation obs = env.reset();
    bool done = false;
    while (!done) {
      const auto mask_bits = env.valid_actions();
      std::vector<std::uint8_t> mask(mask_bits.size());
      for (std::size_t i = 0; i < mask_bits.size(); ++i)
        mask[i] = mask_bits[i] ? 1 : 0;
      const ForwardOut fwd = forward(params, obs, mask);
      const auto [action, logprob] = sample_action(fwd, rng);
      const StepOutcome out = env.step(action);
      batch.obs.insert(batch.obs.end(), obs.begin(), obs.end());
      batch.mask.insert(batch.mask.end(), mask.begin(), mask.end());
      batch.action.push_back(action);
      batch.logprob.push_back(logprob);
      batch.reward.push_back(out.reward);
      batch.cost.push_back(out.cost);
      batch.v_r.push_back(fwd.v_r);
      batch.v_c.push_back(fwd.v_c);
      batch.done.push_back(out.done ? 1 : 0);
      ep.return_sum += out.reward;
      ep.cost_sum += out.cost;
      obs = out.observation;
      done = out.done;
    }
    ep.length = batch.size() - ep.start;
    batch.episodes.push_back(ep);
  }
  return batch;
}

struct GaeResult {
  std::vector<double> adv_r;  // normalized to zero mean / unit variance
  std::vector<double> adv_c;  // raw; its scale carries constraint meaning
  std::vector<double> target_r;
  std::vector<double> target_c;
};

// Generalized advantage estimation per complete episode (terminal value 0),
// run independently for the reward stream against v_r and the cost stream
// against v_c. Targets are advantage + value, taken before normalization.
inline GaeResult compute_gae(const TrajectoryBatch& batch, double gamma,
                             double gae_lambda) {
  const std::size_t n = batch.size();
  GaeResult out;
  out.adv_r.assign(n, 0.0);
  out.adv_c.assign(n, 0.0);
  out.target_r.assign(n, 0.0);
  out.target_c.assign(n, 0.0);
  for (const EpisodeSlice& ep : batch.episodes) {
    double carry_r = 0.0, carry_c = 0.0;
    for (std::size_t k = ep.length; k-- > 0;) {
      const std::size_t i = ep.start + k;
      const bool last = k + 1 == ep.length;
      const double next_vr = last ? 0.0 : batch.v_r[i + 1];
      const double next_vc = last ? 0.0 : batch.v_c[i + 1];
      const double delta_r = batch.reward[i] + gamma * next_vr - batch.v_r[i];
      const double delta_c = batch.cost[i] + gamma * next_vc - batch.v_c[i];
      carry_r = delta_r + gamma * gae_lambda * (last ? 0.0 : carry_r);
      carry_c = delta_c + gamma * gae_lambda * (last ? 0.0 : carry_c);
      out.adv_r[i] = carry_r;
      out.adv_c[i] = carry_c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.target_r[i] = out.adv_r[i] + batch.v_r[i];
    out.target_c[i] = out.adv_c[i] + batch.v_c[i];
  }
  double mean = 0.0;
  for (double a : out.adv_r) mean += a;
  mean /= std::max<std::size_t>(n, 1);
  double var = 0.0;
  for (double a : out.adv_r) var += (a - mean) * (a - mean);
  var /= std::max<std::size_t>(n, 1);
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : out.adv_r) a = (a - mean) * scale;
  return out;
}

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double cost_value_loss = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
  double lambda = 0.0;
};

// Clipped-surrogate update on the combined advantage
// (adv_r - lambda * adv_c) / (1 + lambda); one optimizer step per minibatch.
inline UpdateStats cppo_update(NetParams& params, const TrajectoryBatch& batch,
                               const GaeResult& gae, double lambda,
                               const TrainConfig& cfg, AdamState& adam,
                               Rng& rng) {
  if (lambda < 0) throw ConfigError("lambda must be >= 0");
  const std::size_t n = batch.size();
  std::vector<double> advantage(n);
  for (std::size_t i = 0; i < n; ++i)
    advantage[i] = (gae.adv_r[i] - lambda * gae.adv_c[i]) / (1.0 + lambda);
  LossSpec spec;
  spec.clip_ratio = cfg.clip_ratio;
  spec.entropy_coef = cfg.entropy_coef;
  spec.value_coef_r = cfg.value_coef;
  spec.value_coef_c = cfg.cost_value_coef;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  UpdateStats stats;
  stats.lambda = lambda;
  std::size_t updates = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(cfg.minibatch_size)) {
      const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.minibatch_size));
      Minibatch mb;
      mb.size = hi - lo;
      mb.obs.reserve(mb.size * static_cast<std::size_t>(batch.obs_dim));
      mb.mask.reserve(mb.size * static_cast<std::size_t>(batch.actions));
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t i = order[k];
        mb.obs.insert(mb.obs.end(),
                      batch.obs.begin() + static_cast<std::ptrdiff_t>(i * batch.obs_dim),
                      batch.obs.begin() + static_cast<std::ptrdiff_t>((i + 1) * batch.obs_dim));
        mb.mask.insert(mb.mask.end(),
                       batch.mask.begin() + static_cast<std::ptrdiff_t>(i * batch.actions),
                       batch.mask.begin() + static_cast<std::ptrdiff_t>((i + 1) * batch.actions));
        mb.actions.push_back(batch.action[i]);
        mb.logprob_old.push_back(batch.logprob[i]);
        mb.advantage.push_back(advantage[i]);
        mb.target_r.push_back(gae.target_r[i]);
        mb.target_c.push_back(gae.target_c[i]);
      }
      auto [grads, loss] = backward(params, mb, spec);
      if (!std::isfinite(loss.total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           " offset " + std::to_string(lo));
      adam_step(params, grads, cfg.learning_rate, cfg.adam_beta1,
                cfg.adam_beta2, cfg.adam_eps, adam);
      stats.policy_loss += loss.policy;
      stats.value_loss += loss.value_r;
      stats.cost_value_loss += loss.value_c;
      stats.entropy += loss.entropy;
      stats.clip_frac += loss.clip_frac;
      stats.approx_kl += loss.approx_kl;
      ++updates;
    }
  }
  if (updates > 0) {
    const double inv = 1.0 / static_cast<double>(updates);
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.cost_value_loss *= inv;
    stats.entropy *= inv;
    stats.clip_frac *= inv;
    stats.approx_kl *= inv;
  }
  return stats;
}

struct CurveRow {
  std::int64_t iteration = 0;
  double mean_return = 0.0;
  double mean_cost = 0.0;
  double lambda = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double cost_value_loss = 0.0;
  double clip_frac = 0.0;
};

inline constexpr const char* kCurveHeader =
    "iteration,mean_return,mean_cost,lambda,policy_loss,value_loss,"
    "cost_value_loss,clip_frac";

inline std::string serialize_curves(const std::vector<CurveRow>& rows,
                                    const std::string& digest) {
  std::string out = "# config " + digest + "\n";
  out += kCurveHeader;
  out += '\n';
  for (const CurveRow& r : rows) {
    out += std::to_string(r.iteration);
    out += ',';
    out += dtos(r.mean_return);
    out += ',';
    out += dtos(r.mean_cost);
    out += ',';
    out += dtos(r.lambda);
    out += ',';
    out += dtos(r.policy_loss);
    out += ',';
    out += dtos(r.value_loss);
    out += ',';
    out += dtos(r.cost_value_loss);
    out += ',';
    out += dtos(r.clip_frac);
    out += '\n';
  }
  return out;
}

inline constexpr const char* kCheckpointMagic = "COCOSCHED-CKPT";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string config_digest;
  std::int64_t iteration = 0;
  NetParams params;
  AdamState adam;
  PidState pid;
  Rng rollout_rng;
  Rng update_rng;
};

inline std::string serialize(const Checkpoint& c) {
  std::string out;
  out += kCheckpointMagic;
  out += ' ';
  out += std::to_string(c.version);
  out += '\n';
  out += "digest " + c.config_digest + '\n';
  out += "iteration " + std::to_string(c.iteration) + '\n';
  out += "activation ";
  out += (c.params.activation == Activation::tanh_fn ? "tanh" : "identity");
  out += '\n';
  out += "net " + std::to_string(c.params.in_dim) + ' ' +
         std::to_string(c.params.hidden1) + ' ' +
         std::to_string(c.params.hidden2) + ' ' +
         std::to_string(c.params.actions) + '\n';
  auto dump = [&out](const char* name, const std::vector<double>& v) {
    out += name;
    out += ' ';
    out += std::to_string(v.size());
    for (double x : v) {
      out += ' ';
      out += dtos(x);
    }
    out += '\n';
  };
  dump("params", c.params.values);
  out += "adam_step " + std::to_string(c.adam.step) + '\n';
  dump("adam_m", c.adam.m);
  dump("adam_v", c.adam.v);
  out += "pid " + cocosched::serialize(c.pid) + '\n';
  out += "rng_rollout " + c.rollout_rng.serialize() + '\n';
  out += "rng_update " + c.update_rng.serialize() + '\n';
  out += "end\n";
  return out;
}

inline Checkpoint parse_checkpoint(std::istream& in) {
  Checkpoint c;
  std::string magic;
  in >> magic >> c.version;
  if (magic != kCheckpointMagic) throw ParseError("not a checkpoint file");
  if (c.version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(c.version));
  auto expect = [&in](const char* key) {
    std::string tok;
    in >> tok;
    if (tok != key)
      throw ParseError("checkpoint: expected '" + std::string(key) + "', got '" + tok + "'");
  };
  expect("digest");
  in >> c.config_digest;
  expect("iteration");
  in >> c.iteration;
  expect("activation");
  std::string act;
  in >> act;
  c.params.activation = act == "identity" ? Activation::identity : Activation::tanh_fn;
  expect("net");
  in >> c.params.in_dim >> c.params.hidden1 >> c.params.hidden2 >> c.params.actions;
  auto slurp = [&in, &expect](const char* key, std::vector<double>& v) {
    expect(key);
    std::size_t count = 0;
    in >> count;
    v.resize(count);
    std::string tok;
    for (std::size_t i = 0; i < count; ++i) {
      in >> tok;
      v[i] = parse_double(tok, key);
    }
  };
  slurp("params", c.params.values);
  if (c.params.values.size() != c.params.count())
    throw ParseError("checkpoint: parameter count mismatch");
  expect("adam_step");
  in >> c.adam.step;
  slurp("adam_m", c.adam.m);
  slurp("adam_v", c.adam.v);
  expect("pid");
  {
    std::string fields[8];
    std::string joined;
    for (auto& f : fields) {
      in >> f;
      if (!joined.empty()) joined += ' ';
      joined += f;
    }
    c.pid = deserialize_pid(joined);
  }
  expect("rng_rollout");
  {
    std::string a, b, cc, d;
    in >> a >> b >> cc >> d;
    c.rollout_rng = Rng::deserialize(a + ' ' + b + ' ' + cc + ' ' + d);
  }
  expect("rng_update");
  {
    std::string a, b, cc, d;
    in >> a >> b >> cc >> d;
    c.update_rng = Rng::deserialize(a + ' ' + b + ' ' + cc + ' ' + d);
  }
  expect("end");
  if (!in) throw ParseError("truncated checkpoint");
  return c;
}

inline Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  return parse_checkpoint(in);
}

// expected_digest empty skips the provenance check.
inline void check_digest(const Checkpoint& c, const std::string& expected_digest) {
  if (!expected_digest.empty() && c.config_digest != expected_digest)
    throw IntegrityError("checkpoint config digest " + c.config_digest +
                         " does not match expected " + expected_digest);
}

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<CurveRow> curves;
  bool aborted = false;
  std::string abort_reason;
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

// The training loop: collect a batch, feed mean episodic cost to the PID
// controller, then run the constrained clipped update with the controller's
// lambda. An infinite cost limit disables the constraint (lambda = 0).
inline TrainResult train(const TrainConfig& cfg,
                         std::optional<Checkpoint> resume = std::nullopt,
                         const CheckpointSink& sink = {}) {
  validate(cfg);
  const std::string digest = config_digest(cfg);
  const EnvFactory factory = make_env_factory(cfg);

  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  if (resume) {
    check_digest(*resume, digest);
    ck = std::move(*resume);
  } else {
    // Probe env for dimensions.
    SimEnv probe = factory(0);
    ck.config_digest = digest;
    ck.iteration = 0;
    ck.params = init_params(probe.observation_size(), cfg.hidden1, cfg.hidden2,
                            probe.action_count(), cfg.seed);
    ck.pid = std::isfinite(cfg.cost_limit)
                 ? pid_init(cfg.pid_gains, cfg.cost_limit, cfg.compat_double_gain)
                 : PidState{cfg.pid_gains, cfg.cost_limit, 0.0, 0.0, 0.0,
                            cfg.compat_double_gain};
    Rng master(cfg.seed);
    ck.rollout_rng = Rng(master.fork_seed());
    ck.update_rng = Rng(master.fork_seed());
  }

  while (ck.iteration < cfg.iterations) {
    TrajectoryBatch batch;
    double jc_hat = 0.0;
    double mean_return = 0.0;
    UpdateStats stats;
    const Checkpoint last_good = ck;
    try {
      batch = collect_rollouts(factory, ck.params, cfg.batch_size, ck.rollout_rng);
      for (const EpisodeSlice& ep : batch.episodes) {
        mean_return += ep.return_sum;
        if (cfg.discounted_cost_estimate) {
          double disc = 0.0, g = 1.0;
          for (std::size_t k = 0; k < ep.length; ++k) {
            disc += g * batch.cost[ep.start + k];
            g *= cfg.discount();
          }
          jc_hat += disc;
        } else {
          jc_hat += ep.cost_sum;
        }
      }
      mean_return /= static_cast<double>(batch.episodes.size());
      jc_hat /= static_cast<double>(batch.episodes.size());

      double lambda = 0.0;
      if (std::isfinite(cfg.cost_limit)) {
        auto [next_pid, lam] = pid_update(ck.pid, jc_hat);
        ck.pid = next_pid;
        lambda = lam;
      }
      const GaeResult gae = compute_gae(batch, cfg.discount(), cfg.gae_lambda);
      stats = cppo_update(ck.params, batch, gae, lambda, cfg, ck.adam,
                          ck.update_rng);
    } catch (const NumericError& err) {
      ck = last_good;  // a partially applied update is not a usable state
      result.aborted = true;
      result.abort_reason = err.what();
      break;
    }
    ck.iteration += 1;
    result.curves.push_back({ck.iteration, mean_return, jc_hat, stats.lambda,
                             stats.policy_loss, stats.value_loss,
                             stats.cost_value_loss, stats.clip_frac});
    if (sink && cfg.checkpoint_every > 0 &&
        ck.iteration % cfg.checkpoint_every == 0 &&
        ck.iteration < cfg.iterations)
      sink(ck);
  }
  if (sink) sink(ck);
  return result;
}

}  // namespace cocosched
