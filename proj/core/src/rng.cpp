#include "clab/rng.hpp"

#include "clab/errors.hpp"

namespace clab {

namespace {

// splitmix64 finalizer, used to spread (seed, stream) pairs over the full
// 64-bit state space before seeding mt19937_64.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : engine_(mix64(mix64(master_seed) ^ mix64(stream_index ^ 0x5851f42d4c957f2dULL))) {}

std::uint64_t RngStream::next_u64() {
  return engine_();
}

double RngStream::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int RngStream::sample_index(std::span<const double> weights) {
  if (weights.empty()) throw Error("sample_index: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("sample_index: negative or NaN weight");
    total += w;
  }
  if (total <= 0.0) throw Error("sample_index: weights sum to zero");
  double u = next_unit() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

double RngStream::next_in_range(double low, double high) {
  return low + (high - low) * next_unit();
}

}  // namespace clab
