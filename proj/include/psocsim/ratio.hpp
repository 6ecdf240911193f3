#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

namespace psocsim {

/// Exact non-negative rational used for every rate and per-byte cost so that
/// simulated timings stay integer-exact (no float drift between runs).
///
/// As a bandwidth it reads "bytes per ns"; as a cost it reads "ns per byte".
class Ratio {
 public:
  constexpr Ratio() = default;
  constexpr Ratio(std::uint64_t num, std::uint64_t den = 1) : num_(num), den_(den) {
    if (den_ == 0) {
      num_ = 0;
      den_ = 1;
    }
    const auto g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::uint64_t num() const { return num_; }
  constexpr std::uint64_t den() const { return den_; }
  constexpr bool is_zero() const { return num_ == 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// ceil(n * this)
  constexpr std::uint64_t ceil_times(std::uint64_t n) const {
    const unsigned __int128 p = static_cast<unsigned __int128>(n) * num_;
    return static_cast<std::uint64_t>((p + den_ - 1) / den_);
  }

  /// floor(n * this)
  constexpr std::uint64_t floor_times(std::uint64_t n) const {
    const unsigned __int128 p = static_cast<unsigned __int128>(n) * num_;
    return static_cast<std::uint64_t>(p / den_);
  }

  /// ceil(n / this). Rate must be non-zero.
  constexpr std::uint64_t ceil_over(std::uint64_t n) const {
    const unsigned __int128 p = static_cast<unsigned __int128>(n) * den_;
    return static_cast<std::uint64_t>((p + num_ - 1) / num_);
  }

  /// Time to move bytes [from, to) of a stream that started at byte 0 at this
  /// rate. Sums telescope, so any chunking of a transfer totals ceil(L / rate).
  constexpr std::uint64_t span(std::uint64_t from, std::uint64_t to) const {
    return ceil_over(to) - ceil_over(from);
  }

  friend constexpr std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    const unsigned __int128 l = static_cast<unsigned __int128>(a.num_) * b.den_;
    const unsigned __int128 r = static_cast<unsigned __int128>(b.num_) * a.den_;
    return l <=> r;
  }
  friend constexpr bool operator==(const Ratio& a, const Ratio& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

  friend constexpr Ratio operator*(const Ratio& a, const Ratio& b) {
    return Ratio(a.num_ * b.num_, a.den_ * b.den_);
  }

  /// Parses a plain non-negative decimal ("4", "0.17", "12.500"). Returns
  /// nullopt on anything else; exponents and signs are rejected.
  static std::optional<Ratio> parse_decimal(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::uint64_t num = 0;
    std::uint64_t den = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : text) {
      if (c == '.') {
        if (seen_dot) return std::nullopt;
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') return std::nullopt;
      if (num > (UINT64_MAX - 9) / 10 || (seen_dot && den > UINT64_MAX / 10)) return std::nullopt;
      num = num * 10 + static_cast<std::uint64_t>(c - '0');
      if (seen_dot) den *= 10;
      seen_digit = true;
    }
    if (!seen_digit) return std::nullopt;
    return Ratio(num, den);
  }

  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    // Exact decimal when the denominator only has factors 2 and 5.
    std::uint64_t d = den_;
    int twos = 0, fives = 0;
    while (d % 2 == 0) d /= 2, ++twos;
    while (d % 5 == 0) d /= 5, ++fives;
    if (d == 1) {
      const int digits = twos > fives ? twos : fives;
      std::uint64_t scale = 1;
      for (int i = 0; i < digits; ++i) scale *= 10;
      const std::uint64_t scaled = num_ * (scale / den_);
      std::string whole = std::to_string(scaled / scale);
      std::string frac = std::to_string(scaled % scale);
      frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
      while (!frac.empty() && frac.back() == '0') frac.pop_back();
      return frac.empty() ? whole : whole + "." + frac;
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

constexpr Ratio min_rate(const Ratio& a, const Ratio& b) { return (a < b) ? a : b; }

}  // namespace psocsim
