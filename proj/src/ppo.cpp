#include "jsrl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "jsrl/rng.hpp"

namespace jsrl {

AgentNets init_agent_nets(int obs_dim, int action_count, int hidden, Activation activation,
                          uint64_t seed) {
  AgentNets nets;
  nets.policy = init_dense({obs_dim, hidden, action_count}, activation, derive_seed(seed, 0x70));
  nets.value = init_dense({obs_dim, hidden, 1}, activation, derive_seed(seed, 0x71));
  return nets;
}

Vec masked_softmax(std::span<const double> logits, std::span<const uint8_t> mask) {
  if (logits.size() != mask.size())
    throw std::invalid_argument("masked_softmax: logits/mask size mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i] && logits[i] > best) best = logits[i];
  if (!std::isfinite(best)) throw std::invalid_argument("masked_softmax: no legal action");
  Vec probs(logits.size(), 0.0);
  double denom = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - best);
    denom += probs[i];
  }
  for (double& p : probs) p /= denom;
  return probs;
}

int sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
  const double r = unit_uniform(rng);
  double cum = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cum += probs[i];
    last_positive = static_cast<int>(i);
    if (r < cum) return last_positive;
  }
  if (last_positive < 0) throw std::invalid_argument("sample_categorical: no positive mass");
  return last_positive;  // guards against round-off when r ~ 1
}

int argmax_masked(std::span<const double> logits, std::span<const uint8_t> mask) {
  int best = -1;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || logits[i] > logits[best]) best = static_cast<int>(i);
  }
  if (best < 0) throw std::invalid_argument("argmax_masked: no legal action");
  return best;
}

static ActionSample act_common(const AgentNets& nets, std::span<const double> obs,
                               std::span<const uint8_t> mask, std::mt19937_64* rng) {
  const Vec logits = forward(nets.policy, obs);
  const Vec probs = masked_softmax(logits, mask);
  ActionSample out;
  out.action = rng ? sample_categorical(probs, *rng) : argmax_masked(logits, mask);
  out.log_prob = std::log(probs[out.action]);
  out.value = forward(nets.value, obs)[0];
  return out;
}

ActionSample sample_action(const AgentNets& nets, std::span<const double> obs,
                           std::span<const uint8_t> mask, std::mt19937_64& rng) {
  return act_common(nets, obs, mask, &rng);
}

ActionSample greedy_action(const AgentNets& nets, std::span<const double> obs,
                           std::span<const uint8_t> mask) {
  return act_common(nets, obs, mask, nullptr);
}

Vec discounted_returns(std::span<const double> rewards, std::span<const uint8_t> dones,
                       double gamma) {
  if (rewards.size() != dones.size())
    throw std::invalid_argument("discounted_returns: size mismatch");
  Vec g(rewards.size());
  double acc = 0.0;
  for (int t = static_cast<int>(rewards.size()) - 1; t >= 0; --t) {
    acc = rewards[t] + gamma * (dones[t] ? 0.0 : acc);
    g[t] = acc;
  }
  return g;
}

GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const uint8_t> dones, double gamma, double lambda) {
  const size_t n = rewards.size();
  if (dones.size() != n || values.size() != n + 1)
    throw std::invalid_argument("gae_advantages: values must have one bootstrap entry");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.value_targets.assign(n, 0.0);
  double acc = 0.0;
  for (int t = static_cast<int>(n) - 1; t >= 0; --t) {
    const double not_done = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * not_done - values[t];
    acc = delta + gamma * lambda * not_done * acc;
    out.advantages[t] = acc;
    out.value_targets[t] = acc + values[t];
  }
  return out;
}

void prepare_advantages(TrajectoryBatch& batch, double gamma, double lambda) {
  const size_t n = batch.steps.size();
  Vec rewards(n), values(n + 1);
  std::vector<uint8_t> dones(n);
  for (size_t t = 0; t < n; ++t) {
    rewards[t] = batch.steps[t].reward;
    values[t] = batch.steps[t].value;
    dones[t] = batch.steps[t].done ? 1 : 0;
  }
  values[n] = batch.bootstrap_value;
  GaeResult g = gae_advantages(rewards, values, dones, gamma, lambda);
  batch.advantages = std::move(g.advantages);
  batch.value_targets = std::move(g.value_targets);
}

namespace {

// Per-transition gradient slot; slots are reduced in transition order so the
// parallel path reproduces the serial result bit for bit.
struct GradSlot {
  NetGrads policy, value;
  EncoderGrads enc;
  double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
  int clipped = 0;
};

}  // namespace

UpdateStats ppo_update(AgentNets& nets, AdamState& policy_opt, AdamState& value_opt,
                       const TrajectoryBatch& batch, const PPOConfig& cfg,
                       std::mt19937_64& shuffle_rng, EncoderTraining* enc) {
  const int n = static_cast<int>(batch.steps.size());
  if (n == 0) throw std::invalid_argument("ppo_update: empty batch");
  if (static_cast<int>(batch.advantages.size()) != n ||
      static_cast<int>(batch.value_targets.size()) != n)
    throw std::invalid_argument("ppo_update: call prepare_advantages first");
  if (enc && (!enc->encoder || !enc->message_opt || !enc->update_opt))
    throw std::invalid_argument("ppo_update: incomplete encoder training context");
  if (enc)
    for (const Transition& tr : batch.steps)
      if (!tr.graph) throw std::invalid_argument("ppo_update: transition without graph");

  Vec adv = batch.advantages;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= n;
  if (var >= 1e-8) {
    const double inv_sd = 1.0 / std::sqrt(var);
    for (double& a : adv) a = (a - mean) * inv_sd;
  }

  UpdateStats stats;
  double loss_count = 0.0;
  const int mb = std::max(1, cfg.minibatch_size);
  const bool par = cfg.exec == ExecMode::kParallel;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, shuffle_rng);
    for (int start = 0; start < n; start += mb) {
      const int count = std::min(mb, n - start);
      std::vector<GradSlot> slots(count);

#ifdef JSRL_HAS_OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
      for (int k = 0; k < count; ++k) {
        const Transition& tr = batch.steps[order[start + k]];
        const double a_norm = adv[order[start + k]];
        GradSlot& slot = slots[k];
        slot.policy = make_zero_grads(nets.policy);
        slot.value = make_zero_grads(nets.value);

        Vec obs;
        EncodeCache ecache;
        if (enc) {
          NodeEmbeddings emb = encode(*tr.graph, *enc->encoder, ExecMode::kSerial, &ecache);
          obs = readout(emb, enc->readout);
        } else {
          obs = tr.observation;
        }

        ForwardCache pol_cache, val_cache;
        const Vec logits = forward(nets.policy, obs, &pol_cache);
        const Vec probs = masked_softmax(logits, tr.mask);
        const double logp_new = std::log(probs[tr.action]);
        const double ratio = std::exp(logp_new - tr.log_prob);
        const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        const double surr1 = ratio * a_norm;
        const double surr2 = clipped_ratio * a_norm;
        slot.policy_loss = -std::min(surr1, surr2);
        slot.clipped = (ratio < 1.0 - cfg.clip_eps || ratio > 1.0 + cfg.clip_eps) ? 1 : 0;
        const double dlogp = surr1 <= surr2 ? -a_norm * ratio : 0.0;

        double entropy = 0.0;
        for (double p : probs)
          if (p > 0.0) entropy -= p * std::log(p);
        slot.entropy = entropy;

        // d/dz of -min(surr) - entropy_coef*H through the masked softmax:
        // illegal entries stay exactly zero.
        Vec dz(probs.size(), 0.0);
        for (size_t i = 0; i < probs.size(); ++i) {
          if (!tr.mask[i] || probs[i] <= 0.0) continue;
          const double onehot = static_cast<int>(i) == tr.action ? 1.0 : 0.0;
          dz[i] = dlogp * (onehot - probs[i]) +
                  cfg.entropy_coef * probs[i] * (std::log(probs[i]) + entropy);
        }
        backward_into(nets.policy, pol_cache, dz, slot.policy);

        const double v = forward(nets.value, obs, &val_cache)[0];
        const double target = batch.value_targets[order[start + k]];
        slot.value_loss = (v - target) * (v - target);
        const Vec dv{cfg.value_coef * 2.0 * (v - target)};
        backward_into(nets.value, val_cache, dv, slot.value);

        if (enc) {
          slot.enc = make_zero_encoder_grads(*enc->encoder);
          Mat upstream(tr.graph->num_nodes(), enc->encoder->node_dim());
          add_readout_grad(enc->readout, slot.policy.input, upstream);
          add_readout_grad(enc->readout, slot.value.input, upstream);
          encoder_backward_into(*tr.graph, *enc->encoder, ecache, upstream, slot.enc);
        }
      }

      NetGrads pol_g = make_zero_grads(nets.policy);
      NetGrads val_g = make_zero_grads(nets.value);
      EncoderGrads enc_g;
      if (enc) enc_g = make_zero_encoder_grads(*enc->encoder);
      for (int k = 0; k < count; ++k) {
        pol_g.add(slots[k].policy);
        val_g.add(slots[k].value);
        if (enc) {
          enc_g.message.add(slots[k].enc.message);
          enc_g.update.add(slots[k].enc.update);
        }
        stats.policy_loss += slots[k].policy_loss;
        stats.value_loss += slots[k].value_loss;
        stats.entropy += slots[k].entropy;
        stats.clip_fraction += slots[k].clipped;
        loss_count += 1.0;
      }
      const double inv = 1.0 / count;
      pol_g.scale(inv);
      val_g.scale(inv);
      if (enc) {
        enc_g.message.scale(inv);
        enc_g.update.scale(inv);
      }

      double sq = pol_g.squared_norm() + val_g.squared_norm();
      if (enc) sq += enc_g.message.squared_norm() + enc_g.update.squared_norm();
      const double norm = std::sqrt(sq);
      if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / norm;
        pol_g.scale(s);
        val_g.scale(s);
        if (enc) {
          enc_g.message.scale(s);
          enc_g.update.scale(s);
        }
      }

      apply_update(nets.policy, pol_g, policy_opt, cfg.lr, cfg.update_mode);
      apply_update(nets.value, val_g, value_opt, cfg.lr, cfg.update_mode);
      if (enc) {
        apply_update(enc->encoder->message_net, enc_g.message, *enc->message_opt, cfg.lr,
                     cfg.update_mode);
        apply_update(enc->encoder->update_net, enc_g.update, *enc->update_opt, cfg.lr,
                     cfg.update_mode);
      }
    }
  }

  stats.policy_loss /= loss_count;
  stats.value_loss /= loss_count;
  stats.entropy /= loss_count;
  stats.clip_fraction /= loss_count;
  stats.transitions = n;
  return stats;
}

}  // namespace jsrl
