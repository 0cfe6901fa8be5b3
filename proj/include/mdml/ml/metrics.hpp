#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdml/ml/data.hpp"
#include "mdml/ml/mlp.hpp"

namespace mdml::ml {

enum class Averaging { Weighted, Macro, Positive };

const char* averaging_name(Averaging a);

struct Metrics {
  // confusion[actual][predicted]
  std::array<std::array<std::uint64_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  Averaging averaging = Averaging::Weighted;

  std::uint64_t total() const {
    return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1];
  }
};

Metrics metrics_from_confusion(const std::array<std::array<std::uint64_t, 2>, 2>& m,
                               Averaging averaging = Averaging::Weighted);

Metrics compute_metrics(const std::vector<int>& actual, const std::vector<int>& predicted,
                        Averaging averaging = Averaging::Weighted);

// Runs the model over every row and derives metrics from the confusion matrix.
Metrics evaluate(const MlpModel& model, const Dataset& test,
                 Averaging averaging = Averaging::Weighted);

}  // namespace mdml::ml
