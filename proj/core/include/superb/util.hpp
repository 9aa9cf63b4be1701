#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace superb {

// Shortest decimal form that round-trips the exact double value. Used for
// every score and metric we serialize so that write/load is an identity and
// repeated runs are byte-identical.
std::string format_double(double v);

std::string trim(std::string_view s);

// Maximal whitespace-delimited substrings, in order.
std::vector<std::string> split_ws(std::string_view s);

// True iff the token is an optionally-signed run of digits.
bool is_integer_token(std::string_view tok);

std::string to_lower(std::string_view s);

// splitmix64; stable across platforms, unlike the std distributions.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform-enough draw in [0, n); bias is irrelevant here, determinism is not.
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  std::uint64_t state_;
};

// Deterministic Fisher-Yates over [first, last).
template <typename It>
void seeded_shuffle(It first, It last, SplitMix64& rng) {
  auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    auto j = rng.below(i);
    std::swap(*(first + static_cast<std::ptrdiff_t>(i - 1)),
              *(first + static_cast<std::ptrdiff_t>(j)));
  }
}

std::uint64_t fnv1a64(std::string_view s);

}  // namespace superb
