#pragma once

#include <cstdint>
#include <string_view>

namespace adaptlab {

// Counter-based splittable random stream.
//
// Each draw is splitmix64_mix(key + counter * GOLDEN), where key is derived
// from (seed, stream_id) by the same mixing function. The generator is pure
// integer arithmetic, so identical (seed, stream_id) parameters reproduce
// identical sequences on every platform. Child streams derived via split()
// depend only on the parent key and the split label, never on how many
// draws the parent has consumed.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  RngStream split(std::uint64_t index) const;
  RngStream split(std::string_view name) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit();

  // Standard normal via Box-Muller; the spare value is cached.
  double next_gaussian();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  explicit RngStream(std::uint64_t derived_key);

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace adaptlab
