#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace lulc {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; the mixing step of every seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Key derivation for independent random streams.
///
/// One master seed fans out into named streams ("split", "shuffle", "init",
/// "augment", "uuid", "synth") and each stream can be further indexed (epoch,
/// sample position, scene number). A stream can be replayed in isolation by
/// calling derive_seed with the same arguments.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) noexcept {
  std::uint64_t s = mix64(master ^ hash_tag(stream));
  s = mix64(s ^ mix64(a + 0x51ed2701ULL));
  s = mix64(s ^ mix64(b + 0x7a3c9b1dULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(master, stream, a, b));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Standard normal draw (Box-Muller, one value per pair of uniforms).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Uniform integer in [0, n), n >= 1. Rejection sampling keeps the sequence
/// identical across standard libraries, unlike std::uniform_int_distribution.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
  std::uint64_t x;
  do x = rng();
  while (x > limit);
  return x % n;
}

/// Version-4 UUID generator. Seeded instances are deterministic; the default
/// constructor draws its seed from OS entropy.
class UuidGenerator {
 public:
  UuidGenerator() : rng_(entropy_seed()) {}
  explicit UuidGenerator(std::uint64_t seed) : rng_(seed) {}

  std::string next() {
    std::array<unsigned char, 16> b{};
    const std::uint64_t hi = rng_();
    const std::uint64_t lo = rng_();
    for (int i = 0; i < 8; ++i) {
      b[i] = static_cast<unsigned char>(hi >> (56 - 8 * i));
      b[8 + i] = static_cast<unsigned char>(lo >> (56 - 8 * i));
    }
    b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);
    b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (int i = 0; i < 16; ++i) {
      if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
      out.push_back(hex[b[i] >> 4]);
      out.push_back(hex[b[i] & 0xf]);
    }
    return out;
  }

 private:
  static std::uint64_t entropy_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  Rng rng_;
};

}  // namespace lulc
