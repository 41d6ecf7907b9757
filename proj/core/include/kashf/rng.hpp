#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace kashf {

/// Mixes a parent seed with a stream index into an independent child seed
/// (splitmix64 finalizer over the combined words).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

/// 64-bit FNV-1a, used to turn names into stable stream tags.
std::uint64_t fnv1a(std::string_view bytes) noexcept;

/// Seeded random stream. Every consumer gets its own instance; nothing in the
/// library touches a global or time-seeded generator.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer on [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  double normal();

  /// k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kashf
