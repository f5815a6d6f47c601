#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cocosched/rng.hpp"
#include "cocosched/util.hpp"

namespace cocosched {

enum class Activation { tanh_fn, identity };

// Two hidden layers, a masked categorical policy head and two scalar critic
// heads (reward and cost), stored as one flat parameter vector so the
// optimizer, checkpoints and the finite-difference checker can treat the net
// as a plain array of coordinates.
//
// Layout: W1[h1 x in] b1[h1] W2[h2 x h1] b2[h2] Wp[act x h2] bp[act]
//         Wv[h2] bv[1] Wc[h2] bc[1], matrices row-major.
struct NetParams {
  int in_dim = 0;
  int hidden1 = 0;
  int hidden2 = 0;
  int actions = 0;
  Activation activation = Activation::tanh_fn;
  std::vector<double> values;

  std::size_t off_w1() const { return 0; }
  std::size_t off_b1() const { return off_w1() + static_cast<std::size_t>(hidden1) * in_dim; }
  std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(hidden1); }
  std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(hidden2) * hidden1; }
  std::size_t off_wp() const { return off_b2() + static_cast<std::size_t>(hidden2); }
  std::size_t off_bp() const { return off_wp() + static_cast<std::size_t>(actions) * hidden2; }
  std::size_t off_wv() const { return off_bp() + static_cast<std::size_t>(actions); }
  std::size_t off_bv() const { return off_wv() + static_cast<std::size_t>(hidden2); }
  std::size_t off_wc() const { return off_bv() + 1; }
  std::size_t off_bc() const { return off_wc() + static_cast<std::size_t>(hidden2); }
  std::size_t count() const { return off_bc() + 1; }
};

inline NetParams init_params(int in_dim, int hidden1, int hidden2, int actions,
                             std::uint64_t seed,
                             Activation activation = Activation::tanh_fn) {
  if (in_dim < 1 || hidden1 < 1 || hidden2 < 1 || actions < 1)
    throw ConfigError("network dimensions must be >= 1");
  NetParams p;
  p.in_dim = in_dim;
  p.hidden1 = hidden1;
  p.hidden2 = hidden2;
  p.actions = actions;
  p.activation = activation;
  p.values.assign(p.count(), 0.0);
  Rng rng(seed);
  auto xavier = [&](std::size_t off, int rows, int cols) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i)
      p.values[off + i] = rng.uniform(-bound, bound);
  };
  xavier(p.off_w1(), hidden1, in_dim);
  xavier(p.off_w2(), hidden2, hidden1);
  xavier(p.off_wp(), actions, hidden2);
  xavier(p.off_wv(), 1, hidden2);
  xavier(p.off_wc(), 1, hidden2);
  return p;
}

struct ForwardOut {
  std::vector<double> logits;    // pre-mask
  std::vector<double> logprobs;  // -inf on masked entries
  std::vector<double> probs;     // exactly 0 on masked entries
  double v_r = 0.0;
  double v_c = 0.0;
  std::vector<double> h1;  // post-activation, cached for backprop
  std::vector<double> h2;
};

namespace detail {

inline double activate(double x, Activation a) {
  return a == Activation::tanh_fn ? std::tanh(x) : x;
}

// Derivative expressed through the activation output.
inline double activate_grad(double y, Activation a) {
  return a == Activation::tanh_fn ? 1.0 - y * y : 1.0;
}

}  // namespace detail

inline ForwardOut forward(const NetParams& p, std::span<const double> obs,
                          std::span<const std::uint8_t> mask) {
  if (static_cast<int>(obs.size()) != p.in_dim)
    throw NumericError("observation length " + std::to_string(obs.size()) +
                       " != input dim " + std::to_string(p.in_dim));
  if (static_cast<int>(mask.size()) != p.actions)
    throw NumericError("mask length mismatch");
  ForwardOut out;
  out.h1.resize(static_cast<std::size_t>(p.hidden1));
  for (int i = 0; i < p.hidden1; ++i) {
    double z = p.values[p.off_b1() + static_cast<std::size_t>(i)];
    const double* row = &p.values[p.off_w1() + static_cast<std::size_t>(i) * p.in_dim];
    for (int j = 0; j < p.in_dim; ++j) z += row[j] * obs[static_cast<std::size_t>(j)];
    out.h1[static_cast<std::size_t>(i)] = detail::activate(z, p.activation);
  }
  out.h2.resize(static_cast<std::size_t>(p.hidden2));
  for (int i = 0; i < p.hidden2; ++i) {
    double z = p.values[p.off_b2() + static_cast<std::size_t>(i)];
    const double* row = &p.values[p.off_w2() + static_cast<std::size_t>(i) * p.hidden1];
    for (int j = 0; j < p.hidden1; ++j) z += row[j] * out.h1[static_cast<std::size_t>(j)];
    out.h2[static_cast<std::size_t>(i)] = detail::activate(z, p.activation);
  }
  out.logits.resize(static_cast<std::size_t>(p.actions));
  for (int k = 0; k < p.actions; ++k) {
    double z = p.values[p.off_bp() + static_cast<std::size_t>(k)];
    const double* row = &p.values[p.off_wp() + static_cast<std::size_t>(k) * p.hidden2];
    for (int j = 0; j < p.hidden2; ++j) z += row[j] * out.h2[static_cast<std::size_t>(j)];
    out.logits[static_cast<std::size_t>(k)] = z;
  }
  out.v_r = p.values[p.off_bv()];
  out.v_c = p.values[p.off_bc()];
  for (int j = 0; j < p.hidden2; ++j) {
    out.v_r += p.values[p.off_wv() + static_cast<std::size_t>(j)] * out.h2[static_cast<std::size_t>(j)];
    out.v_c += p.values[p.off_wc() + static_cast<std::size_t>(j)] * out.h2[static_cast<std::size_t>(j)];
  }
  // Masked log-softmax: invalid logits excluded from normalization entirely.
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any_valid = false;
  for (int k = 0; k < p.actions; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    any_valid = true;
    max_logit = std::max(max_logit, out.logits[static_cast<std::size_t>(k)]);
  }
  if (!any_valid) throw NumericError("action mask has no valid entry");
  double sum = 0.0;
  for (int k = 0; k < p.actions; ++k)
    if (mask[static_cast<std::size_t>(k)])
      sum += std::exp(out.logits[static_cast<std::size_t>(k)] - max_logit);
  const double lse = max_logit + std::log(sum);
  out.logprobs.assign(static_cast<std::size_t>(p.actions),
                      -std::numeric_limits<double>::infinity());
  out.probs.assign(static_cast<std::size_t>(p.actions), 0.0);
  for (int k = 0; k < p.actions; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const double lp = out.logits[static_cast<std::size_t>(k)] - lse;
    out.logprobs[static_cast<std::size_t>(k)] = lp;
    out.probs[static_cast<std::size_t>(k)] = std::exp(lp);
  }
  return out;
}

inline std::pair<int, double> sample_action(const ForwardOut& out, Rng& rng) {
  const auto idx = rng.categorical(out.probs);
  return {static_cast<int>(idx), out.logprobs[idx]};
}

// One gradient/evaluation unit: rows of observations with per-sample masks,
// taken actions, behavior log-probs, combined advantages and critic targets.
struct Minibatch {
  std::vector<double> obs;         // size * in_dim, row-major
  std::vector<std::uint8_t> mask;  // size * actions
  std::vector<int> actions;
  std::vector<double> logprob_old;
  std::vector<double> advantage;
  std::vector<double> target_r;
  std::vector<double> target_c;
  std::size_t size = 0;
};

struct LossSpec {
  double clip_ratio = 0.2;
  double entropy_coef = 0.0;
  double value_coef_r = 0.5;
  double value_coef_c = 0.5;
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value_r = 0.0;
  double value_c = 0.0;
  double entropy = 0.0;
  double clip_frac = 0.0;
  double approx_kl = 0.0;
};

namespace detail {

// Shared forward/backward walk over a minibatch. `grads` may be null for a
// pure loss evaluation.
inline LossStats run_batch(const NetParams& p, const Minibatch& mb,
                           const LossSpec& spec, std::vector<double>* grads) {
  if (mb.size == 0) throw NumericError("empty minibatch");
  if (grads) grads->assign(p.count(), 0.0);
  LossStats stats;
  const double inv_n = 1.0 / static_cast<double>(mb.size);
  for (std::size_t s = 0; s < mb.size; ++s) {
    std::span<const double> obs(&mb.obs[s * static_cast<std::size_t>(p.in_dim)],
                                static_cast<std::size_t>(p.in_dim));
    std::span<const std::uint8_t> mask(&mb.mask[s * static_cast<std::size_t>(p.actions)],
                                       static_cast<std::size_t>(p.actions));
    const ForwardOut out = forward(p, obs, mask);
    const int action = mb.actions[s];
    const double lp_new = out.logprobs[static_cast<std::size_t>(action)];
    const double ratio = std::exp(lp_new - mb.logprob_old[s]);
    const double adv = mb.advantage[s];
    const double unclipped = ratio * adv;
    const double clipped =
        std::clamp(ratio, 1.0 - spec.clip_ratio, 1.0 + spec.clip_ratio) * adv;
    const double surrogate = std::min(unclipped, clipped);
    double entropy = 0.0;
    for (int k = 0; k < p.actions; ++k)
      if (out.probs[static_cast<std::size_t>(k)] > 0.0)
        entropy -= out.probs[static_cast<std::size_t>(k)] *
                   out.logprobs[static_cast<std::size_t>(k)];
    const double err_r = out.v_r - mb.target_r[s];
    const double err_c = out.v_c - mb.target_c[s];
    stats.policy += -surrogate * inv_n;
    stats.entropy += entropy * inv_n;
    stats.value_r += err_r * err_r * inv_n;
    stats.value_c += err_c * err_c * inv_n;
    stats.approx_kl += (mb.logprob_old[s] - lp_new) * inv_n;
    if (std::abs(ratio - 1.0) > spec.clip_ratio) stats.clip_frac += inv_n;
    if (!grads) continue;

    // d(total)/d(logprob of taken action); the clipped branch is flat.
    const double g_lp = unclipped <= clipped ? -ratio * adv * inv_n : 0.0;
    std::vector<double> g_logits(static_cast<std::size_t>(p.actions), 0.0);
    for (int k = 0; k < p.actions; ++k) {
      if (!mask[static_cast<std::size_t>(k)]) continue;
      const double pk = out.probs[static_cast<std::size_t>(k)];
      const double lpk = out.logprobs[static_cast<std::size_t>(k)];
      double g = g_lp * ((k == action ? 1.0 : 0.0) - pk);
      // d(-entropy_coef * H)/d logit_k = entropy_coef * p_k (lp_k + H)
      g += spec.entropy_coef * pk * (lpk + entropy) * inv_n;
      g_logits[static_cast<std::size_t>(k)] = g;
    }
    const double g_vr = spec.value_coef_r * 2.0 * err_r * inv_n;
    const double g_vc = spec.value_coef_c * 2.0 * err_c * inv_n;

    std::vector<double> g_h2(static_cast<std::size_t>(p.hidden2), 0.0);
    for (int k = 0; k < p.actions; ++k) {
      const double gz = g_logits[static_cast<std::size_t>(k)];
      if (gz == 0.0) continue;
      double* wrow = &(*grads)[p.off_wp() + static_cast<std::size_t>(k) * p.hidden2];
      const double* prow = &p.values[p.off_wp() + static_cast<std::size_t>(k) * p.hidden2];
      for (int j = 0; j < p.hidden2; ++j) {
        wrow[j] += gz * out.h2[static_cast<std::size_t>(j)];
        g_h2[static_cast<std::size_t>(j)] += gz * prow[j];
      }
      (*grads)[p.off_bp() + static_cast<std::size_t>(k)] += gz;
    }
    for (int j = 0; j < p.hidden2; ++j) {
      const double h2j = out.h2[static_cast<std::size_t>(j)];
      (*grads)[p.off_wv() + static_cast<std::size_t>(j)] += g_vr * h2j;
      (*grads)[p.off_wc() + static_cast<std::size_t>(j)] += g_vc * h2j;
      g_h2[static_cast<std::size_t>(j)] +=
          g_vr * p.values[p.off_wv() + static_cast<std::size_t>(j)] +
          g_vc * p.values[p.off_wc() + static_cast<std::size_t>(j)];
    }
    (*grads)[p.off_bv()] += g_vr;
    (*grads)[p.off_bc()] += g_vc;

    std::vector<double> g_h1(static_cast<std::size_t>(p.hidden1), 0.0);
    for (int i = 0; i < p.hidden2; ++i) {
      const double gz = g_h2[static_cast<std::size_t>(i)] *
                        activate_grad(out.h2[static_cast<std::size_t>(i)], p.activation);
      if (gz == 0.0) continue;
      double* wrow = &(*grads)[p.off_w2() + static_cast<std::size_t>(i) * p.hidden1];
      const double* prow = &p.values[p.off_w2() + static_cast<std::size_t>(i) * p.hidden1];
      for (int j = 0; j < p.hidden1; ++j) {
        wrow[j] += gz * out.h1[static_cast<std::size_t>(j)];
        g_h1[static_cast<std::size_t>(j)] += gz * prow[j];
      }
      (*grads)[p.off_b2() + static_cast<std::size_t>(i)] += gz;
    }
    for (int i = 0; i < p.hidden1; ++i) {
      const double gz = g_h1[static_cast<std::size_t>(i)] *
                        activate_grad(out.h1[static_cast<std::size_t>(i)], p.activation);
      if (gz == 0.0) continue;
      double* wrow = &(*grads)[p.off_w1() + static_cast<std::size_t>(i) * p.in_dim];
      for (int j = 0; j < p.in_dim; ++j) wrow[j] += gz * obs[static_cast<std::size_t>(j)];
      (*grads)[p.off_b1() + static_cast<std::size_t>(i)] += gz;
    }
  }
  stats.total = stats.policy - spec.entropy_coef * stats.entropy +
                spec.value_coef_r * stats.value_r +
                spec.value_coef_c * stats.value_c;
  return stats;
}

}  // namespace detail

inline LossStats compute_loss(const NetParams& p, const Minibatch& mb,
                              const LossSpec& spec) {
  return detail::run_batch(p, mb, spec, nullptr);
}

inline std::pair<std::vector<double>, LossStats> backward(const NetParams& p,
                                                          const Minibatch& mb,
                                                          const LossSpec& spec) {
  std::vector<double> grads;
  LossStats stats = detail::run_batch(p, mb, spec, &grads);
  return {std::move(grads), stats};
}

// Central-difference validation of backward() on a deterministic coordinate
// subsample. Relative error is |a - n| / max(1, |a|, |n|).
inline double finite_diff_check(const NetParams& p, const Minibatch& mb,
                                const LossSpec& spec, double epsilon = 1e-4,
                                std::size_t max_coords = 200) {
  if (epsilon < 1e-6 || epsilon > 1e-3)
    throw ConfigError("finite-diff epsilon must be in [1e-6, 1e-3]");
  const auto [grads, stats] = backward(p, mb, spec);
  NetParams probe = p;
  const std::size_t total = p.count();
  const std::size_t stride = std::max<std::size_t>(1, total / max_coords);
  double worst = 0.0;
  for (std::size_t i = 0; i < total; i += stride) {
    const double saved = probe.values[i];
    probe.values[i] = saved + epsilon;
    const double up = compute_loss(probe, mb, spec).total;
    probe.values[i] = saved - epsilon;
    const double down = compute_loss(probe, mb, spec).total;
    probe.values[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double analytic = grads[i];
    const double rel = std::abs(analytic - numeric) /
                       std::max({1.0, std::abs(analytic), std::abs(numeric)});
    worst = std::max(worst, rel);
  }
  return worst;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// Adam with bias correction; betas (0,0) degrades to plain SGD p -= lr * g.
inline void adam_step(NetParams& p, std::span<const double> grads, double lr,
                      double beta1, double beta2, double eps, AdamState& state) {
  if (grads.size() != p.count()) throw NumericError("gradient shape mismatch");
  if (state.m.size() != p.count()) {
    state.m.assign(p.count(), 0.0);
    state.v.assign(p.count(), 0.0);
    state.step = 0;
  }
  state.step += 1;
  if (beta1 == 0.0 && beta2 == 0.0) {
    for (std::size_t i = 0; i < p.count(); ++i) p.values[i] -= lr * grads[i];
    return;
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < p.count(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    p.values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace cocosched
