#include "comets/sim/name.hpp"

#include <charconv>

namespace comets::sim {

Name::Name(std::vector<std::string> components) : parts_(std::move(components)) {
  if (parts_.empty()) throw std::invalid_argument("Name: empty component list");
}

Name Name::parse(std::string_view text) {
  if (text.empty() || text.front() != '/')
    throw std::invalid_argument("Name: expected a leading '/' in '" + std::string(text) + "'");
  std::vector<std::string> parts;
  std::size_t pos = 1;
  while (true) {
    const std::size_t next = text.find('/', pos);
    parts.emplace_back(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  if (parts.size() == 1 && parts.front().empty())
    throw std::invalid_argument("Name: no components");
  return Name(std::move(parts));
}

Name Name::range_interest(std::string_view title, std::uint64_t seq,
                          std::optional<std::uint64_t> nonce) {
  std::vector<std::string> p{"ndn", "video", std::string(title), "RangeInterest",
                             "chunk=" + std::to_string(seq)};
  if (nonce) p.push_back("nonce=" + std::to_string(*nonce));
  return Name(std::move(p));
}

Name Name::video(std::string_view title, std::string_view resolution, std::uint64_t seq) {
  return Name({"ndn", "video", std::string(title), std::string(resolution),
               "chunk=" + std::to_string(seq)});
}

Name Name::report(std::uint32_t forwarder, std::uint64_t version) {
  return Name({"ndn", "opt", "report", "forwarder=" + std::to_string(forwarder),
               "v=" + std::to_string(version)});
}

Name Name::config(std::uint32_t forwarder, std::uint64_t version) {
  return Name({"ndn", "opt", "config", "forwarder=" + std::to_string(forwarder),
               "v=" + std::to_string(version)});
}

Name Name::state(std::uint32_t node, std::string_view var, std::size_t level, std::uint64_t t) {
  return Name({"ndn", "comets", "state", "node", std::to_string(node), std::string(var),
               std::to_string(level), "v=" + std::to_string(t)});
}

std::string Name::to_string() const {
  std::string out;
  for (const auto& p : parts_) {
    out += '/';
    out += p;
  }
  return out;
}

bool Name::starts_with(const Name& prefix) const {
  if (prefix.size() > size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (parts_[i] != prefix.parts_[i]) return false;
  return true;
}

std::optional<std::string> Name::field(std::string_view key) const {
  for (const auto& p : parts_)
    if (p.size() > key.size() && p.compare(0, key.size(), key) == 0 && p[key.size()] == '=')
      return p.substr(key.size() + 1);
  return std::nullopt;
}

std::optional<std::uint64_t> Name::number(std::string_view key) const {
  auto f = field(key);
  if (!f) return std::nullopt;
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(f->data(), f->data() + f->size(), v);
  if (ec != std::errc() || end != f->data() + f->size()) return std::nullopt;
  return v;
}

bool Name::is_range_interest() const {
  return size() >= 5 && parts_[0] == "ndn" && parts_[1] == "video" && parts_[3] == "RangeInterest";
}

bool Name::is_video() const {
  return size() == 5 && parts_[0] == "ndn" && parts_[1] == "video" &&
         parts_[3] != "RangeInterest" && number("chunk").has_value();
}

}  // namespace comets::sim
