#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kashf {

using OrgId = std::uint32_t;

/// Error raised for invalid inputs and failed preconditions.
///
/// `code` is a short machine-readable tag (e.g. "bidder_not_found") that the
/// command-line front end prints alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Site and persona categories. The first sixteen are the persona
/// categories in alphabetical order; that order is also the tie-break order
/// used when picking a dominant category.
enum class Category : std::uint8_t {
  Adult,
  Arts,
  Business,
  Computers,
  Games,
  Health,
  Home,
  Kids,
  News,
  Recreation,
  Reference,
  Regional,
  Science,
  Shopping,
  Society,
  Sports,
  Control,
  Intent,
  HBPublisher,
};

inline constexpr std::size_t kPersonaCategoryCount = 16;
inline constexpr std::size_t kCategoryCount = 19;

constexpr bool is_persona_category(Category c) noexcept {
  return static_cast<std::size_t>(c) < kPersonaCategoryCount;
}

constexpr std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view name) noexcept;
const std::array<Category, kPersonaCategoryCount>& persona_categories() noexcept;

/// A CPM amount held as integer micro-USD so sums and comparisons are exact.
class Money {
 public:
  constexpr Money() = default;
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}

  static Money from_cpm(double cpm);

  constexpr std::int64_t micros() const noexcept { return micros_; }
  constexpr double cpm() const noexcept { return static_cast<double>(micros_) / 1e6; }
  constexpr bool is_zero() const noexcept { return micros_ == 0; }

  /// Multiplies by a real factor, rounding to the nearest micro-USD.
  Money scaled(double factor) const;

  constexpr Money operator+(Money o) const noexcept { return Money(micros_ + o.micros_); }
  constexpr Money operator-(Money o) const noexcept { return Money(micros_ - o.micros_); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  std::int64_t micros_ = 0;
};

enum class BidClass : std::uint8_t { Low, Medium, High };
inline constexpr std::size_t kBidClassCount = 3;

std::string_view to_string(BidClass c) noexcept;

enum class Channel : std::uint8_t { ClientSide, ServerSide };

std::string_view to_string(Channel c) noexcept;
std::optional<Channel> parse_channel(std::string_view name) noexcept;

/// Lower-case alphanumeric slug of an organization or category name.
std::string slugify(std::string_view name);

}  // namespace kashf
