#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mdml::ml {

struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> x;  // rows x cols, row-major
  std::vector<int> y;    // 0/1 labels
  bool chronological = true;

  const float* row(std::size_t i) const { return x.data() + i * cols; }
  float* row(std::size_t i) { return x.data() + i * cols; }
};

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std_dev;  // population std; zero variance guarded to 1
  std::size_t fitted_on = 0;
};

// Population-variance z-score parameters per column. Empty for rows < 2.
std::optional<Standardizer> fit_standardizer(const Dataset& train);
void transform(const Standardizer& s, Dataset& data);
void inverse_transform(const Standardizer& s, Dataset& data);

std::string standardizer_to_json(const Standardizer& s);
std::optional<Standardizer> standardizer_from_json(const std::string& text);

// First floor(fraction*n) rows train, rest test, order preserved.
std::optional<std::pair<Dataset, Dataset>> chronological_split(const Dataset& data,
                                                               double train_fraction = 0.8);

// CSV with header f0,...,f{d-1},label.
std::optional<Dataset> load_csv(const std::string& path, std::string* error = nullptr);
bool save_csv(const Dataset& data, const std::string& path, std::string* error = nullptr);

// Channel layout and class-separation parameters of the synthetic set.
struct SynthProfile {
  std::size_t vs1_channels = 60;
  std::size_t eps1_channels = 6000;
  std::size_t se_channels = 60;
  double shift = 3.5;  // latent-factor mean gap between classes, in latent sigmas
  double vs1_base = 0.62, vs1_coef = 0.05, vs1_noise = 0.08;
  double eps1_base = 2450.0, eps1_coef = 40.0, eps1_noise = 60.0;
  double se_base = 60.0, se_coef = -2.5, se_noise = 1.5;
  double leak_noise_factor = 1.5;  // leaky cycles are noisier

  std::size_t total_channels() const {
    return vs1_channels + eps1_channels + se_channels;
  }
};

const SynthProfile& synth_profile();

// Hydraulic-condition-like binary classification set: d = 6120 channels driven
// by one latent health factor per cycle. Deterministic by seed; exactly
// llround(n * negative_share) class-0 rows.
Dataset synth_hydraulic_dataset(std::uint64_t seed, std::size_t n = 2205,
                                double negative_share = 0.5537);

}  // namespace mdml::ml
