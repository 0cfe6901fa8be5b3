#include "mdml/ml/metrics.hpp"

namespace mdml::ml {

const char* averaging_name(Averaging a) {
  switch (a) {
    case Averaging::Weighted: return "weighted";
    case Averaging::Macro: return "macro";
    case Averaging::Positive: return "positive";
  }
  return "weighted";
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics metrics_from_confusion(const std::array<std::array<std::uint64_t, 2>, 2>& m,
                               Averaging averaging) {
  Metrics out;
  out.confusion = m;
  out.averaging = averaging;

  std::uint64_t total = out.total();
  std::uint64_t correct = m[0][0] + m[1][1];
  out.accuracy = ratio(correct, total);

  double precision[2];
  double recall[2];
  std::uint64_t support[2];
  for (int c = 0; c < 2; ++c) {
    std::uint64_t col = m[0][c] + m[1][c];
    std::uint64_t row = m[c][0] + m[c][1];
    precision[c] = ratio(m[c][c], col);
    recall[c] = ratio(m[c][c], row);
    support[c] = row;
  }

  switch (averaging) {
    case Averaging::Weighted: {
      double w0 = ratio(support[0], total);
      double w1 = ratio(support[1], total);
      out.precision = w0 * precision[0] + w1 * precision[1];
      out.recall = w0 * recall[0] + w1 * recall[1];
      break;
    }
    case Averaging::Macro:
      out.precision = (precision[0] + precision[1]) / 2.0;
      out.recall = (recall[0] + recall[1]) / 2.0;
      break;
    case Averaging::Positive:
      out.precision = precision[1];
      out.recall = recall[1];
      break;
  }
  return out;
}

Metrics compute_metrics(const std::vector<int>& actual, const std::vector<int>& predicted,
                        Averaging averaging) {
  std::array<std::array<std::uint64_t, 2>, 2> m{{{0, 0}, {0, 0}}};
  std::size_t n = actual.size() < predicted.size() ? actual.size() : predicted.size();
  for (std::size_t i = 0; i < n; ++i) {
    int a = actual[i] ? 1 : 0;
    int p = predicted[i] ? 1 : 0;
    ++m[a][p];
  }
  return metrics_from_confusion(m, averaging);
}

Metrics evaluate(const MlpModel& model, const Dataset& test, Averaging averaging) {
  std::array<std::array<std::uint64_t, 2>, 2> m{{{0, 0}, {0, 0}}};
  for (std::size_t i = 0; i < test.rows; ++i) {
    auto pred = predict(model, test.row(i), test.cols);
    if (!pred) continue;
    int a = test.y[i] ? 1 : 0;
    ++m[a][pred->label ? 1 : 0];
  }
  return metrics_from_confusion(m, averaging);
}

}  // namespace mdml::ml
