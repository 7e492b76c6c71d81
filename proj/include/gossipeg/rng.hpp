#ifndef GOSSIPEG_RNG_HPP_
#define GOSSIPEG_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace gossipeg {

namespace detail {

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Hashes an ordered tuple of words into one 64-bit seed.
template <typename... Words>
constexpr std::uint64_t derive_seed(std::uint64_t root, Words... words) noexcept {
  std::uint64_t h = detail::splitmix_finalize(root + 0x9e3779b97f4a7c15ULL);
  ((h = detail::splitmix_finalize(h ^ (static_cast<std::uint64_t>(words) + 0x9e3779b97f4a7c15ULL))),
   ...);
  return h;
}

/// SplitMix64 engine. Cheap to construct, so one can be created per oracle call.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return detail::splitmix_finalize(state_);
  }

 private:
  std::uint64_t state_;
};

/// Stream of standard normal variates.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return dist_(engine_); }

  SplitMix64& engine() noexcept { return engine_; }

 private:
  SplitMix64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Stream for the oracle call of `machine` at `iteration`, half-step 0 or 1.
/// Depends only on its arguments, never on evaluation order.
inline NormalStream oracle_stream(std::uint64_t master_seed, std::uint64_t machine,
                                  std::uint64_t iteration, std::uint64_t half_step) {
  return NormalStream(derive_seed(master_seed, machine, iteration, half_step));
}

}  // namespace gossipeg

#endif  // GOSSIPEG_RNG_HPP_
