#include "comets/sim/packet.hpp"

#include <stdexcept>

namespace comets::sim {

namespace {
constexpr std::uint64_t kInterestBytes = 100;
constexpr std::uint64_t kDataHeaderBytes = 200;
constexpr std::uint64_t kNackBytes = 120;
constexpr std::uint64_t kRequestBytes = 24;  // id, weight, next chunk
}  // namespace

std::string_view to_string(NackReason r) {
  switch (r) {
    case NackReason::Congestion: return "CONGESTION";
    case NackReason::VersionOutdated: return "VERSION_OUTDATED";
    case NackReason::RecommendResolution: return "RECOMMEND_RESOLUTION";
  }
  return "?";
}

const Name& name_of(const Packet& p) {
  return std::visit([](const auto& v) -> const Name& { return v.name; }, p);
}

std::string_view kind_of(const Packet& p) {
  struct {
    std::string_view operator()(const RangeInterest&) const { return "range_interest"; }
    std::string_view operator()(const Interest&) const { return "interest"; }
    std::string_view operator()(const Data&) const { return "data"; }
    std::string_view operator()(const Nack&) const { return "nack"; }
  } v;
  return std::visit(v, p);
}

std::uint64_t wire_size(const Packet& p) {
  struct {
    std::uint64_t operator()(const RangeInterest& r) const {
      return kInterestBytes + kRequestBytes + r.request.levels.size();
    }
    std::uint64_t operator()(const Interest& i) const {
      std::uint64_t n = kInterestBytes;
      for (const auto& r : i.report) n += kRequestBytes + r.levels.size();
      return n;
    }
    std::uint64_t operator()(const Data& d) const {
      return kDataHeaderBytes + d.payload_bytes + 16 * d.assignments.size();
    }
    std::uint64_t operator()(const Nack&) const { return kNackBytes; }
  } v;
  return std::visit(v, p);
}

Nack make_nack(Name name, NackReason reason, std::optional<Name> recommended,
               std::optional<std::uint64_t> latest_version) {
  if ((reason == NackReason::RecommendResolution) != recommended.has_value())
    throw std::invalid_argument("make_nack: only RECOMMEND_RESOLUTION carries a recommended name");
  return Nack{std::move(name), reason, std::move(recommended), latest_version};
}

}  // namespace comets::sim
