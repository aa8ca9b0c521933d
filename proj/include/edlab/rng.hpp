#pragma once
// Counter-based randomness for the trajectory sampler. Every variate is a pure
// function of (seed, chain, step, slot), so ensembles are reproducible and
// independent of thread scheduling. The generator chains the SplitMix64
// finalizer over the key words; that finalizer has full avalanche, which is
// what the per-chain stream separation relies on.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace edlab {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(detail::mix64(seed)) {}

  // 64 random bits for the (chain, step, slot) counter triple.
  std::uint64_t bits(std::uint64_t chain, std::uint64_t step,
                     std::uint64_t slot) const {
    std::uint64_t h = detail::mix64(key_ ^ (chain * 0xd1342543de82ef95ULL));
    h = detail::mix64(h ^ (step * 0xaf251af3b0f025b5ULL));
    return detail::mix64(h ^ (slot * 0x9e3779b97f4a7c15ULL));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform(std::uint64_t chain, std::uint64_t step,
                 std::uint64_t slot) const {
    return static_cast<double>(bits(chain, step, slot) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes uniform slots 2*slot, 2*slot+1.
  double normal(std::uint64_t chain, std::uint64_t step,
                std::uint64_t slot) const {
    const double u1 = 1.0 - uniform(chain, step, 2 * slot);      // (0, 1]
    const double u2 = uniform(chain, step, 2 * slot + 1);        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace edlab
