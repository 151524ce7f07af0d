#pragma once

#include <cstdint>
#include <string_view>

namespace sthcm {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream: value k of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, k), so streams never share state and the
/// sequence is identical on every platform. Normals use Box-Muller.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a over the bytes of a label.
std::uint64_t hash_label(std::string_view label);

/// Trial seed as a pure function of (base seed, experiment label, trial index).
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view experiment_id,
                          std::uint64_t trial_index);

}  // namespace sthcm
