#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace clab {

// Deterministic random stream. Every consumer derives its own stream from
// (master seed, stream index) so that adding a consumer never perturbs the
// draws seen by existing ones.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits. Sampling goes through this value
  // rather than std::discrete_distribution, whose output is not pinned down
  // by the standard and varies across library implementations.
  double next_unit();

  // Inverse-CDF draw from a categorical distribution. Weights must be
  // nonnegative; they are normalized by their sum.
  int sample_index(std::span<const double> weights);

  // Uniform double in [low, high).
  double next_in_range(double low, double high);

 private:
  std::mt19937_64 engine_;
};

}  // namespace clab
