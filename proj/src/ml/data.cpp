#include "mdml/ml/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mdml/ml/rng.hpp"

namespace mdml::ml {

std::optional<Standardizer> fit_standardizer(const Dataset& train) {
  if (train.rows < 2 || train.cols == 0) return std::nullopt;
  Standardizer s;
  s.fitted_on = train.rows;
  s.mean.assign(train.cols, 0.0);
  s.std_dev.assign(train.cols, 0.0);
  for (std::size_t i = 0; i < train.rows; ++i) {
    const float* r = train.row(i);
    for (std::size_t j = 0; j < train.cols; ++j) s.mean[j] += r[j];
  }
  for (std::size_t j = 0; j < train.cols; ++j) s.mean[j] /= double(train.rows);
  for (std::size_t i = 0; i < train.rows; ++i) {
    const float* r = train.row(i);
    for (std::size_t j = 0; j < train.cols; ++j) {
      double d = r[j] - s.mean[j];
      s.std_dev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < train.cols; ++j) {
    s.std_dev[j] = std::sqrt(s.std_dev[j] / double(train.rows));
    if (s.std_dev[j] == 0.0) s.std_dev[j] = 1.0;
  }
  return s;
}

void transform(const Standardizer& s, Dataset& data) {
  for (std::size_t i = 0; i < data.rows; ++i) {
    float* r = data.row(i);
    for (std::size_t j = 0; j < data.cols; ++j)
      r[j] = static_cast<float>((r[j] - s.mean[j]) / s.std_dev[j]);
  }
}

void inverse_transform(const Standardizer& s, Dataset& data) {
  for (std::size_t i = 0; i < data.rows; ++i) {
    float* r = data.row(i);
    for (std::size_t j = 0; j < data.cols; ++j)
      r[j] = static_cast<float>(r[j] * s.std_dev[j] + s.mean[j]);
  }
}

std::string standardizer_to_json(const Standardizer& s) {
  nlohmann::json j;
  j["mean"] = s.mean;
  j["std"] = s.std_dev;
  j["fitted_on"] = s.fitted_on;
  return j.dump(2) + "\n";
}

std::optional<Standardizer> standardizer_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("mean") || !j.contains("std")) return std::nullopt;
  Standardizer s;
  s.mean = j["mean"].get<std::vector<double>>();
  s.std_dev = j["std"].get<std::vector<double>>();
  s.fitted_on = j.value("fitted_on", std::size_t{0});
  if (s.mean.size() != s.std_dev.size()) return std::nullopt;
  return s;
}

std::optional<std::pair<Dataset, Dataset>> chronological_split(const Dataset& data,
                                                               double train_fraction) {
  if (data.rows < 2 || train_fraction <= 0.0 || train_fraction >= 1.0)
    return std::nullopt;
  std::size_t n_train = static_cast<std::size_t>(double(data.rows) * train_fraction);
  if (n_train == 0 || n_train == data.rows) return std::nullopt;

  Dataset train, test;
  train.cols = test.cols = data.cols;
  train.chronological = test.chronological = data.chronological;
  train.rows = n_train;
  test.rows = data.rows - n_train;
  train.x.assign(data.x.begin(), data.x.begin() + n_train * data.cols);
  test.x.assign(data.x.begin() + n_train * data.cols, data.x.end());
  train.y.assign(data.y.begin(), data.y.begin() + n_train);
  test.y.assign(data.y.begin() + n_train, data.y.end());
  return std::make_pair(std::move(train), std::move(test));
}

namespace {

bool set_error(std::string* error, const std::string& message) {
  if (error) *error = message;
  return false;
}

}  // namespace

std::optional<Dataset> load_csv(const std::string& path, std::string* error) {
  std::ifstream in(path);
  if (!in) {
    set_error(error, "cannot open '" + path + "'");
    return std::nullopt;
  }
  std::string header;
  if (!std::getline(in, header)) {
    set_error(error, "'" + path + "' is empty");
    return std::nullopt;
  }
  std::size_t cols = 0;
  {
    std::stringstream ss(header);
    std::string cell;
    std::vector<std::string> names;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
    if (names.size() < 2 || names.back() != "label") {
      set_error(error, "'" + path + "': header must end with 'label'");
      return std::nullopt;
    }
    cols = names.size() - 1;
  }

  Dataset data;
  data.cols = cols;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (std::size_t j = 0; j < cols; ++j) {
      float v = 0.0f;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{} || next == end || *next != ',') {
        set_error(error, "'" + path + "' line " + std::to_string(line_no) +
                             ": bad value in column " + std::to_string(j));
        return std::nullopt;
      }
      data.x.push_back(v);
      p = next + 1;
    }
    int label = 0;
    auto [next, ec] = std::from_chars(p, end, label);
    if (ec != std::errc{} || (label != 0 && label != 1)) {
      set_error(error,
                "'" + path + "' line " + std::to_string(line_no) + ": label must be 0 or 1");
      return std::nullopt;
    }
    data.y.push_back(label);
    ++data.rows;
  }
  if (data.rows == 0) {
    set_error(error, "'" + path + "' has no data rows");
    return std::nullopt;
  }
  return data;
}

bool save_csv(const Dataset& data, const std::string& path, std::string* error) {
  std::ofstream out(path);
  if (!out) return set_error(error, "cannot write '" + path + "'");
  for (std::size_t j = 0; j < data.cols; ++j) out << "f" << j << ",";
  out << "label\n";
  char buf[48];
  for (std::size_t i = 0; i < data.rows; ++i) {
    const float* r = data.row(i);
    for (std::size_t j = 0; j < data.cols; ++j) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), r[j]);
      out.write(buf, end - buf);
      out.put(',');
    }
    out << data.y[i] << "\n";
  }
  out.flush();
  if (!out) return set_error(error, "write to '" + path + "' failed");
  return true;
}

const SynthProfile& synth_profile() {
  static const SynthProfile profile;
  return profile;
}

Dataset synth_hydraulic_dataset(std::uint64_t seed, std::size_t n,
                                double negative_share) {
  const SynthProfile& prof = synth_profile();
  const std::size_t d = prof.total_channels();

  Dataset data;
  data.rows = n;
  data.cols = d;
  data.chronological = true;
  data.x.resize(n * d);
  data.y.assign(n, 1);

  Rng rng(seed);

  // Class assignment: exact negative count, order permuted by seed so labels
  // are stationary over the chronological axis.
  std::size_t negatives = static_cast<std::size_t>(std::llround(double(n) * negative_share));
  if (negatives > n) negatives = n;
  for (std::size_t i = 0; i < negatives; ++i) data.y[i] = 0;
  rng.shuffle(data.y.begin(), data.y.end());

  // Per-channel parameters, jittered so columns are not clones.
  struct Channel {
    double base, coef, noise;
  };
  std::vector<Channel> channels(d);
  auto fill = [&](std::size_t lo, std::size_t count, double base, double coef,
                  double noise) {
    for (std::size_t j = lo; j < lo + count; ++j) {
      channels[j].base = base * (1.0 + 0.05 * (rng.uniform() - 0.5));
      channels[j].coef = coef * (1.0 + 0.2 * (rng.uniform() - 0.5));
      channels[j].noise = noise * (1.0 + 0.2 * (rng.uniform() - 0.5));
    }
  };
  fill(0, prof.vs1_channels, prof.vs1_base, prof.vs1_coef, prof.vs1_noise);
  fill(prof.vs1_channels, prof.eps1_channels, prof.eps1_base, prof.eps1_coef,
       prof.eps1_noise);
  fill(prof.vs1_channels + prof.eps1_channels, prof.se_channels, prof.se_base,
       prof.se_coef, prof.se_noise);

  // One latent health factor per cycle carries all class information, so the
  // Bayes rate stays pinned at Phi(shift/2) no matter how many channels exist.
  for (std::size_t i = 0; i < n; ++i) {
    bool leak = data.y[i] == 1;
    double z = rng.gaussian() + (leak ? prof.shift : 0.0);
    double noise_scale = leak ? prof.leak_noise_factor : 1.0;
    float* row = data.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const Channel& c = channels[j];
      double v = c.base + c.coef * z + c.noise * noise_scale * rng.gaussian();
      row[j] = static_cast<float>(v);
    }
  }
  return data;
}

}  // namespace mdml::ml
