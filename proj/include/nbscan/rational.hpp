#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nbscan {

/// Exact non-negative-denominator fraction; comparisons widen to 128 bits
/// so byte totals of any realistic capture cannot overflow.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) {
    if (den == 0) throw std::domain_error("zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    num_ = g ? num / g : 0;
    den_ = g ? den / g : 1;
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// Parses "12", "4.0", "-0.25" or "3/83".
  static std::optional<Rational> parse(std::string_view s) {
    if (s.empty()) return std::nullopt;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
      auto n = parse_int(s.substr(0, slash));
      auto d = parse_int(s.substr(slash + 1));
      if (!n || !d || *d == 0) return std::nullopt;
      return Rational(*n, *d);
    }
    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    const std::string_view whole = s.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty() && frac.empty()) return std::nullopt;
    if (frac.size() > 12 || whole.size() > 15) return std::nullopt;
    std::int64_t n = 0, d = 1;
    for (char c : whole) {
      if (c < '0' || c > '9') return std::nullopt;
      n = n * 10 + (c - '0');
    }
    for (char c : frac) {
      if (c < '0' || c > '9') return std::nullopt;
      n = n * 10 + (c - '0');
      d *= 10;
    }
    return Rational(neg ? -n : n, d);
  }

  /// Decimal rendering rounded half away from zero to `places` digits.
  std::string to_decimal(int places) const {
    __int128 scale = 1;
    for (int i = 0; i < places; ++i) scale *= 10;
    const bool neg = num_ < 0;
    const __int128 a = neg ? -static_cast<__int128>(num_) : num_;
    const __int128 scaled = (a * scale * 2 + den_) / (2 * static_cast<__int128>(den_));
    std::string digits = to_string128(scaled);
    if (places > 0) {
      if (digits.size() <= static_cast<std::size_t>(places))
        digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
      digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
    }
    return (neg && scaled != 0 ? "-" : "") + digits;
  }

  std::string to_fraction() const { return std::to_string(num_) + "/" + std::to_string(den_); }

  friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend auto operator<=>(const Rational& a, const Rational& b) {
    const __int128 l = static_cast<__int128>(a.num_) * b.den_;
    const __int128 r = static_cast<__int128>(b.num_) * a.den_;
    return l <=> r;
  }

 private:
  static std::optional<std::int64_t> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    if (s.front() == '-') {
      neg = true;
      s.remove_prefix(1);
    }
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::int64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    return neg ? -v : v;
  }

  static std::string to_string128(__int128 v) {
    if (v == 0) return "0";
    std::string s;
    while (v > 0) {
      s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return s;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A ratio of two non-negative totals: finite, +infinity (x/0 with x > 0)
/// or undefined (0/0).
class Ratio {
 public:
  enum class State { finite, infinite, undefined };

  static Ratio of(std::int64_t numerator, std::int64_t denominator) {
    Ratio r;
    if (denominator == 0) {
      r.state_ = numerator == 0 ? State::undefined : State::infinite;
    } else {
      r.value_ = Rational(numerator, denominator);
    }
    return r;
  }
  static Ratio finite(Rational v) {
    Ratio r;
    r.value_ = v;
    return r;
  }
  static Ratio infinity() {
    Ratio r;
    r.state_ = State::infinite;
    return r;
  }
  static Ratio undefined() {
    Ratio r;
    r.state_ = State::undefined;
    return r;
  }

  State state() const { return state_; }
  bool is_finite() const { return state_ == State::finite; }
  bool is_infinite() const { return state_ == State::infinite; }
  bool is_undefined() const { return state_ == State::undefined; }
  const Rational& value() const {
    if (!is_finite()) throw std::logic_error("ratio has no finite value");
    return value_;
  }

  /// "12.5000", "inf" or "undefined".
  std::string to_string(int places = 4) const {
    switch (state_) {
      case State::finite: return value_.to_decimal(places);
      case State::infinite: return "inf";
      case State::undefined: return "undefined";
    }
    return "undefined";
  }

  /// Percentage with two decimals, e.g. "3.61%".
  std::string to_percent() const {
    if (!is_finite()) return to_string();
    return Rational(value_.num() * 100, value_.den()).to_decimal(2) + "%";
  }

  bool operator==(const Ratio&) const = default;

 private:
  State state_ = State::finite;
  Rational value_;
};

}  // namespace nbscan
