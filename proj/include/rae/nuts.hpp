#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rae/rng.hpp"

namespace rae {

/// Log density with gradient. Writes d log p / d theta into `grad` and
/// returns log p (up to a constant). May return -inf or NaN outside support.
using LogDensityFn = std::function<double(std::span<const double> theta, std::span<double> grad)>;

enum class MetricKind { Diagonal, Dense };

struct NutsConfig {
  MetricKind metric = MetricKind::Dense;
  int warmup = 1000;
  int draws = 2000;
  int max_depth = 10;
  double target_accept = 0.8;
  double max_delta_h = 1000.0;
};

struct ChainOutput {
  std::vector<std::vector<double>> draws;  // iteration x dimension
  int divergences = 0;  // post-warmup only
  double step_size = 0.0;
  /// Adapted inverse metric, row-major dim x dim (diagonal kinds fill the diagonal only).
  std::vector<double> inv_metric;
  double mean_accept = 0.0;  // post-warmup mean acceptance statistic
  double mean_tree_depth = 0.0;
};

/// One chain of the multinomial No-U-Turn sampler with a Euclidean metric.
/// Warmup adapts the step size by dual averaging and the metric over doubling
/// windows (initial buffer 75, base window 25, terminal buffer 50; shrunk
/// proportionally for short warmups). Draws are returned on the sampler's
/// unconstrained scale. Everything random comes from `rng`.
ChainOutput run_nuts_chain(const LogDensityFn& log_density, std::vector<double> init,
                           const NutsConfig& config, Rng& rng);

}  // namespace rae
