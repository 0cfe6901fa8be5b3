#include "mdml/ml/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mdml/ml/nn_math.hpp"
#include "mdml/ml/rng.hpp"

namespace mdml::ml {

namespace {

struct AdamState {
  MlpModel m;
  MlpModel v;
  std::size_t t = 0;
  double beta1_t = 1.0;
  double beta2_t = 1.0;
};

void adam_step(MlpModel& model, const MlpModel& grads, double inv_batch, AdamState& st,
               const TrainConfig& cfg) {
  ++st.t;
  st.beta1_t *= cfg.beta1;
  st.beta2_t *= cfg.beta2;
  double mc = 1.0 / (1.0 - st.beta1_t);
  double vc = 1.0 / (1.0 - st.beta2_t);

  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    auto update = [&](std::vector<float>& w, const std::vector<float>& g, std::vector<float>& m,
                      std::vector<float>& v) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        double gi = static_cast<double>(g[i]) * inv_batch;
        double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
        double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        w[i] -= static_cast<float>(cfg.learning_rate * (mi * mc) /
                                   (std::sqrt(vi * vc) + cfg.epsilon));
      }
    };
    update(model.layers[l].weights, grads.layers[l].weights, st.m.layers[l].weights,
           st.v.layers[l].weights);
    update(model.layers[l].biases, grads.layers[l].biases, st.m.layers[l].biases,
           st.v.layers[l].biases);
  }
}

void one_hot(int label, std::vector<float>& target) {
  target.assign(2, 0.0f);
  target[label ? 1 : 0] = 1.0f;
}

double mean_loss(const MlpModel& model, const Dataset& data, std::size_t begin, std::size_t end) {
  ForwardTrace<float> trace;
  std::vector<float> target;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    forward(model, data.row(i), trace);
    one_hot(data.y[i], target);
    sum += bce_loss(trace.activations.back(), target);
  }
  return end > begin ? sum / static_cast<double>(end - begin) : 0.0;
}

}  // namespace

TrainResult train(const MlpArchitecture& arch, const Dataset& data, const TrainConfig& cfg) {
  TrainResult result;
  if (!arch.valid() || arch.dims.back() != 2) {
    result.history.error = "invalid architecture: expected >= 2 layers with a 2-unit output";
    return result;
  }
  if (data.rows == 0 || data.cols != arch.dims.front()) {
    result.history.error = "dataset width does not match the architecture input width";
    return result;
  }

  result.model = init_model(arch, cfg.seed);

  std::size_t val_n = static_cast<std::size_t>(
      static_cast<double>(data.rows) * cfg.validation_fraction);
  if (val_n >= data.rows) val_n = data.rows - 1;
  std::size_t train_n = data.rows - val_n;
  bool early = cfg.patience > 0 && val_n > 0;

  AdamState adam;
  adam.m = zeros_like(result.model);
  adam.v = zeros_like(result.model);
  MlpModel grads = zeros_like(result.model);

  std::vector<std::size_t> order(train_n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);

  MlpModel best = result.model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t streak = 0;

  ForwardTrace<float> trace;
  std::vector<float> target;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order.begin(), order.end());

    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < train_n; start += cfg.batch_size) {
      std::size_t stop = start + cfg.batch_size < train_n ? start + cfg.batch_size : train_n;
      std::size_t batch_n = stop - start;

      grads = zeros_like(grads);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        std::size_t i = order[k];
        forward(result.model, data.row(i), trace);
        one_hot(data.y[i], target);
        batch_loss += bce_loss(trace.activations.back(), target);

        const auto& out = trace.activations.back();
        int label = out[1] > out[0] ? 1 : 0;
        if (label == (data.y[i] ? 1 : 0)) ++correct;

        backward(result.model, trace, target, grads);
      }
      loss_sum += batch_loss;
      batch_loss /= static_cast<double>(batch_n);

      if (std::isnan(batch_loss)) {
        std::ostringstream msg;
        msg << "NaN loss at epoch " << epoch << ", batch " << (start / cfg.batch_size + 1);
        result.history.error = msg.str();
        result.history.stop_reason = "nan_loss";
        result.history.stopped_epoch = epoch;
        return result;
      }

      adam_step(result.model, grads, 1.0 / static_cast<double>(batch_n), adam, cfg);
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_n);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_n);
    stats.val_loss = val_n > 0 ? mean_loss(result.model, data, train_n, data.rows) : 0.0;
    result.history.epochs.push_back(stats);
    result.history.stopped_epoch = epoch;

    if (early) {
      if (stats.val_loss < best_val) {
        best_val = stats.val_loss;
        best = result.model;
        streak = 0;
      } else if (++streak >= cfg.patience) {
        result.model = best;
        result.history.stop_reason = "early_stopping";
        return result;
      }
    }
  }

  result.history.stop_reason = "max_epochs";
  return result;
}

}  // namespace mdml::ml
