#ifndef EPIPLAN_RNG_HPP_
#define EPIPLAN_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace epiplan {

// Seeded generator with hand-rolled distributions, so trajectories are
// reproducible bit-for-bit from a seed regardless of standard-library
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only; stateless).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      std::swap(first[i - 1], first[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// One master seed per run fans out into independent streams (environment,
// parameter init, action sampling). splitmix64 over seed ^ hash(role).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view role) {
  std::uint64_t h = 14695981039346656037ull;
  for (char c : role) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::uint64_t z = master ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace epiplan

#endif  // EPIPLAN_RNG_HPP_
