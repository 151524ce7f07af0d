#include "sthcm/rng.hpp"

#include <cmath>
#include <numbers>

namespace sthcm {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      key_(mix64(mix64(seed) ^ (mix64(stream_id ^ 0x5851f42d4c957f2dULL) + 0x2545f4914f6cdd1dULL))) {}

std::uint64_t RngStream::next_u64() {
  // Two rounds over (key, counter) decorrelate adjacent counters and keys.
  const std::uint64_t c = counter_++;
  return mix64(mix64(key_ + c * 0x9e3779b97f4a7c15ULL) ^ key_);
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view experiment_id,
                          std::uint64_t trial_index) {
  return mix64(mix64(base_seed ^ hash_label(experiment_id)) + mix64(trial_index));
}

}  // namespace sthcm
