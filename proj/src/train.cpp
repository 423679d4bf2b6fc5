#include "dgnpp/train.hpp"

#include <cmath>
#include <stdexcept>

namespace dgnpp {

ModelOptions TrainConfig::model_options() const {
  ModelOptions o;
  o.num_snapshots = num_snapshots;
  o.layers = layers;
  o.history_cap = history_cap;
  o.ablate_nal = ablate_nal;
  o.ablate_sal = ablate_sal;
  return o;
}

ModelDims TrainConfig::dims(std::size_t num_users, std::size_t num_items) const {
  ModelDims d;
  d.num_users = num_users;
  d.num_items = num_items;
  d.dim = dim;
  d.attn_dim = attn_dim;
  d.sal_blocks = sal_blocks;
  return d;
}

void TrainConfig::validate() const {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("dim must be even and >= 2");
  if (attn_dim == 0) throw std::invalid_argument("attn_dim must be positive");
  if (sal_blocks == 0) throw std::invalid_argument("sal_blocks must be positive");
  if (num_snapshots == 0) throw std::invalid_argument("num_snapshots must be positive");
  if (history_cap == 0) throw std::invalid_argument("history_cap must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be non-negative");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw std::invalid_argument("weight_decay must be non-negative");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (mc_samples_per_gap == 0) throw std::invalid_argument("mc_samples must be positive");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
}

AdamW::AdamW(const ModelParams& like, double learning_rate, double weight_decay,
             double beta1, double beta2, double epsilon)
    : lr_(learning_rate),
      wd_(weight_decay),
      beta1_(beta1),
      beta2_(beta2),
      eps_(epsilon),
      m_(zeros_like(like)),
      v_(zeros_like(like)) {}

void AdamW::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto p = tensors(params);
  const auto g = tensors(grads);
  auto m = tensors(m_);
  auto v = tensors(v_);
  if (p.size() != g.size()) throw std::invalid_argument("AdamW: shape mismatch");
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto pk = p[k].flat();
    const auto gk = g[k].flat();
    auto mk = m[k].flat();
    auto vk = v[k].flat();
    mk = beta1_ * mk + (1.0 - beta1_) * gk;
    vk = beta2_ * vk + (1.0 - beta2_) * gk.cwiseProduct(gk);
    if (p[k].decayed && wd_ > 0.0) pk *= 1.0 - lr_ * wd_;
    pk.array() -= lr_ * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps_);
  }
}

TrainResult train(const EventStream& stream, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  return train_from(stream, config,
                    init_model_params(config.dims(stream.num_users, stream.num_items),
                                      config.seed),
                    on_epoch);
}

TrainResult train_from(const EventStream& stream, const TrainConfig& config,
                       ModelParams initial, const EpochCallback& on_epoch) {
  config.validate();
  if (stream.empty()) throw std::invalid_argument("train: empty event stream");
  TrainResult result;
  result.params = std::move(initial);
  if (!(result.params.dims() == config.dims(stream.num_users, stream.num_items))) {
    throw std::invalid_argument("train: initial parameters do not match the config");
  }
  const TrainingContext ctx(stream, config.model_options());
  AdamW opt(result.params, config.learning_rate, config.weight_decay);
  ModelParams grads = zeros_like(result.params);
  ModelParams last_good = result.params;

  ObjectiveConfig oc;
  oc.negatives = config.negatives;
  oc.mc_samples_per_gap = config.mc_samples_per_gap;
  oc.dropout = config.dropout;
  oc.seed = config.seed;
  oc.threads = config.threads;

  const std::size_t n = stream.size();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    oc.salt = epoch;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      set_zero(grads);
      const ObjectiveResult r =
          window_objective(ctx, result.params, oc, begin, end, &grads);
      const double loss = -r.log_likelihood;
      if (!std::isfinite(loss) || !all_finite(grads)) {
        result.diverged = true;
        result.message = "non-finite loss at epoch " + std::to_string(epoch);
        result.params = std::move(last_good);
        return result;
      }
      result.batch_losses.push_back(loss);
      stats.loss += loss;
      stats.log_sum_term += r.log_sum_term;
      stats.integral_term += r.integral_term;
      stats.clamped_events += r.clamped_events;
      opt.step(result.params, grads);
      if (!all_finite(result.params)) {
        result.diverged = true;
        result.message = "non-finite parameters at epoch " + std::to_string(epoch);
        result.params = std::move(last_good);
        return result;
      }
      last_good = result.params;
    }
    result.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

}  // namespace dgnpp
