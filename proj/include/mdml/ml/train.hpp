#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdml/ml/data.hpp"
#include "mdml/ml/mlp.hpp"

namespace mdml::ml {

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 100;
  std::size_t epochs = 200;
  std::size_t patience = 3;          // 0 disables early stopping
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  bool shuffle = false;              // stationary data may shuffle, sequential must not
  double validation_fraction = 0.1;  // chronologically last slice of the train set
  std::uint64_t seed = 1;
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::size_t stopped_epoch = 0;  // 1-based index of the last epoch that ran
  std::string stop_reason;        // "early_stopping", "max_epochs" or "nan_loss"
  std::string error;              // set only for nan_loss
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

// Mini-batch Adam with early stopping on validation loss. The validation
// slice is the chronologically last floor(validation_fraction * rows) rows;
// if it is empty, early stopping is disabled and val_loss reads 0. On early
// stop the best-validation weights are restored; a run that exhausts all
// epochs keeps the final weights.
TrainResult train(const MlpArchitecture& arch, const Dataset& data, const TrainConfig& cfg);

}  // namespace mdml::ml
