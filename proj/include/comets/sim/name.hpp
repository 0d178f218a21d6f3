// Hierarchical names in canonical slash-delimited form.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace comets::sim {

class Name {
 public:
  Name() = default;
  /// Throws std::invalid_argument for an empty component list.
  explicit Name(std::vector<std::string> components);

  /// "/a/b/c" -> {a, b, c}. Empty components ("/a//c") are kept.
  static Name parse(std::string_view text);

  static Name range_interest(std::string_view title, std::uint64_t seq,
                             std::optional<std::uint64_t> nonce = std::nullopt);
  static Name video(std::string_view title, std::string_view resolution, std::uint64_t seq);
  static Name report(std::uint32_t forwarder, std::uint64_t version);
  static Name config(std::uint32_t forwarder, std::uint64_t version);
  static Name state(std::uint32_t node, std::string_view var, std::size_t level, std::uint64_t t);

  std::size_t size() const { return parts_.size(); }
  const std::string& operator[](std::size_t i) const { return parts_.at(i); }
  const std::vector<std::string>& components() const { return parts_; }
  std::string to_string() const;

  bool starts_with(const Name& prefix) const;
  /// Value of the first component of the form "<key>=<value>".
  std::optional<std::string> field(std::string_view key) const;
  std::optional<std::uint64_t> number(std::string_view key) const;

  bool is_range_interest() const;
  bool is_video() const;  // /ndn/video/<title>/<res>/chunk=<n>

  auto operator<=>(const Name&) const = default;

 private:
  std::vector<std::string> parts_;
};

}  // namespace comets::sim
