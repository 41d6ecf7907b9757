#include "kashf/types.hpp"

#include <cctype>
#include <cmath>

namespace kashf {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Adult",      "Arts",      "Business", "Computers", "Games",    "Health",  "Home",
    "Kids",       "News",      "Recreation", "Reference", "Regional", "Science", "Shopping",
    "Society",    "Sports",    "Control",  "Intent",    "HBPublisher",
};

}  // namespace

std::string_view to_string(Category c) noexcept { return kCategoryNames[index_of(c)]; }

std::optional<Category> parse_category(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  return std::nullopt;
}

const std::array<Category, kPersonaCategoryCount>& persona_categories() noexcept {
  static const auto all = [] {
    std::array<Category, kPersonaCategoryCount> out{};
    for (std::size_t i = 0; i < kPersonaCategoryCount; ++i) out[i] = static_cast<Category>(i);
    return out;
  }();
  return all;
}

Money Money::from_cpm(double cpm) { return Money(std::llround(cpm * 1e6)); }

Money Money::scaled(double factor) const {
  return Money(std::llround(static_cast<double>(micros_) * factor));
}

std::string_view to_string(BidClass c) noexcept {
  switch (c) {
    case BidClass::Low: return "Low";
    case BidClass::Medium: return "Medium";
    case BidClass::High: return "High";
  }
  return "?";
}

std::string_view to_string(Channel c) noexcept {
  return c == Channel::ClientSide ? "ClientSide" : "ServerSide";
}

std::optional<Channel> parse_channel(std::string_view name) noexcept {
  if (name == "ClientSide") return Channel::ClientSide;
  if (name == "ServerSide") return Channel::ServerSide;
  return std::nullopt;
}

std::string slugify(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char ch : name) {
    auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

}  // namespace kashf
