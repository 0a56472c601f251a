#include "spikezip/rng.hpp"

#include <cmath>
#include <numbers>

namespace spikezip {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

CounterRng CounterRng::stream(const std::string& label) const {
  return CounterRng(mix64(seed_ ^ fnv1a(label)));
}

std::uint64_t CounterRng::bits(std::uint64_t index) const {
  return mix64(seed_ + (index + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t index) const {
  return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
}

double CounterRng::gaussian(std::uint64_t index) const {
  // 1-u1 keeps the log argument in (0, 1]
  const double u1 = uniform(2 * index);
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void CounterRng::fill_gaussian(Tensor& t, double stddev, double mean) const {
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = mean + stddev * gaussian(i);
}

}  // namespace spikezip
