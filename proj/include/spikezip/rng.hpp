#pragma once

#include <cstdint>
#include <string>

#include "spikezip/tensor.hpp"

namespace spikezip {

// Counter-based split-mix stream: draw(i) = mix64(seed + (i+1) * golden-ratio
// increment), so every value is a pure function of (seed, index) and any
// substream can be regenerated independently of draw order. Substreams are
// derived by hashing a label into the seed. Gaussians come from Box-Muller on
// two indexed uniforms; std::normal_distribution is avoided because its
// output is implementation-defined.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  CounterRng stream(const std::string& label) const;

  std::uint64_t bits(std::uint64_t index) const;
  double uniform(std::uint64_t index) const;   // [0, 1)
  double gaussian(std::uint64_t index) const;  // standard normal

  void fill_gaussian(Tensor& t, double stddev, double mean = 0.0) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace spikezip
