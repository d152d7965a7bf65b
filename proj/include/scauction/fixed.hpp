#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace scauction {

class ArithmeticError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Integer division rounding half away from zero. den must be positive.
constexpr std::int64_t div_round(std::int64_t num, std::int64_t den)
{
  const std::int64_t half = den / 2;
  return num >= 0 ? (num + half) / den : -((-num + half) / den);
}

/// 4-byte signed fixed point with six decimal places. Prices, quantities and
/// economy parameters all use it so that every party derives bit-identical
/// states.
class Fixed
{
public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Fixed() = default;

  static constexpr Fixed from_raw(std::int32_t raw) { return Fixed(raw); }

  /// Throws ArithmeticError when the value leaves the 32-bit range.
  static Fixed from_wide(std::int64_t raw)
  {
    if (raw < std::numeric_limits<std::int32_t>::min() || raw > std::numeric_limits<std::int32_t>::max())
      throw ArithmeticError("fixed-point overflow: raw value " + std::to_string(raw));
    return Fixed(static_cast<std::int32_t>(raw));
  }

  static Fixed from_double(double v)
  {
    if (!std::isfinite(v))
      throw ArithmeticError("non-finite value");
    const double scaled = std::round(v * static_cast<double>(kScale));
    if (scaled < static_cast<double>(std::numeric_limits<std::int32_t>::min()) ||
        scaled > static_cast<double>(std::numeric_limits<std::int32_t>::max()))
      throw ArithmeticError("fixed-point overflow: " + std::to_string(v));
    return Fixed(static_cast<std::int32_t>(scaled));
  }

  constexpr std::int32_t raw() const { return raw_; }
  constexpr std::int64_t wide() const { return raw_; }
  double to_double() const { return static_cast<double>(raw_) / static_cast<double>(kScale); }

  friend constexpr auto operator<=>(Fixed, Fixed) = default;

private:
  constexpr explicit Fixed(std::int32_t raw) : raw_(raw) {}

  std::int32_t raw_ = 0;
};

/// Ledger currency in nano-units.
struct Amount
{
  static constexpr std::int64_t kScale = 1'000'000'000;

  std::int64_t units = 0;

  static Amount from_double(double v)
  {
    if (!std::isfinite(v))
      throw ArithmeticError("non-finite amount");
    return Amount{static_cast<std::int64_t>(std::llround(v * static_cast<double>(kScale)))};
  }

  double to_double() const { return static_cast<double>(units) / static_cast<double>(kScale); }

  friend constexpr auto operator<=>(Amount, Amount) = default;
  friend constexpr Amount operator+(Amount a, Amount b) { return Amount{a.units + b.units}; }
  friend constexpr Amount operator-(Amount a, Amount b) { return Amount{a.units - b.units}; }
  constexpr Amount operator-() const { return Amount{-units}; }
  Amount& operator+=(Amount o)
  {
    units += o.units;
    return *this;
  }
  Amount& operator-=(Amount o)
  {
    units -= o.units;
    return *this;
  }
};

} // namespace scauction
