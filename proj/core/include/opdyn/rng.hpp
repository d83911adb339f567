#pragma once

#include <cstdint>

namespace opdyn {

// Counter-based random stream. Every draw is a pure function of
// (seed, stream, domain, step, index), so results do not depend on the order
// in which replicas or samples are evaluated, nor on the number of workers.
class CounterRng {
 public:
  enum class Domain : std::uint64_t {
    kAction = 1,
    kInitial = 2,
    kSample = 3,
    kAux = 4,
  };

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc908ULL) ^ (stream + kGamma))) {}

  /// 64 random bits for the given coordinates.
  constexpr std::uint64_t bits(Domain domain, std::uint64_t step,
                               std::uint64_t index) const noexcept {
    std::uint64_t h = mix(key_ ^ (static_cast<std::uint64_t>(domain) * kGamma));
    h = mix(h ^ (step + kGamma));
    return mix(h ^ (index * 0xd1342543de82ef95ULL + kGamma));
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform(Domain domain, std::uint64_t step,
                           std::uint64_t index) const noexcept {
    return static_cast<double>(bits(domain, step, index) >> 11) * 0x1.0p-53;
  }

  /// 1 with probability p (p clamped to [0, 1] by the comparison itself).
  constexpr int bernoulli(double p, Domain domain, std::uint64_t step,
                          std::uint64_t index) const noexcept {
    return uniform(domain, step, index) < p ? 1 : 0;
  }

  /// Derived stream, e.g. one per diagnostic or per Monte Carlo shard.
  constexpr CounterRng substream(std::uint64_t id) const noexcept {
    return CounterRng(key_, id, 0);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  constexpr CounterRng(std::uint64_t key, std::uint64_t id, int) noexcept
      : key_(mix(key ^ mix(id + kGamma))) {}

  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += kGamma;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace opdyn
