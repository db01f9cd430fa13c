#pragma once

#include "bonnet/core.hpp"
#include "bonnet/regularizers.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bonnet {

/// Unweighted sum of squared pixel errors.
double mse(const Image& u, const Image& u_true);

/// Value returned by psnr() when the images agree exactly.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / (mse / N^2)), peak = max(u_true).
double psnr(const Image& u, const Image& u_true);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean local SSIM over every full window position, with dynamic range
/// max(u_true) - min(u_true). Requires n >= window.
double ssim(const Image& u, const Image& u_true, const SsimOptions& opts = {});
/// Same with an explicit dynamic range; symmetric in (a, b).
double ssim(const Image& a, const Image& b, double data_range, const SsimOptions& opts = {});

struct SampleMetrics {
  std::string id;
  double mse = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  int n_theta = 0;
  RegKind reg = RegKind::none;
  RegParams mu;
  std::vector<SampleMetrics> samples;
  SampleMetrics average;  // arithmetic mean of the rows above, id "average"
};

/// Per-sample metrics plus their means. ids may be empty (then "0", "1", ...).
MetricsReport evaluate_metrics(std::span<const Image> recon, std::span<const Image> truth,
                               std::span<const std::string> ids = {});

}  // namespace bonnet
