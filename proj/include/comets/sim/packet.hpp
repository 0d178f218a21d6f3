// Packets exchanged by the simulated protocol.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "comets/network_model.hpp"
#include "comets/sim/name.hpp"

namespace comets::sim {

/// One client's request as carried by a Range Interest or a report.
struct ClientRequest {
  NodeId client = 0;
  std::vector<std::size_t> levels;  // 0-based, sorted
  double weight = 1.0;
  std::uint64_t next_chunk = 0;
};

/// Resolution decision for one client; no level means unserved.
struct Assignment {
  NodeId client = 0;
  std::optional<std::size_t> level;
  std::uint64_t next_chunk = 0;
};

struct RangeInterest {
  Name name;
  ClientRequest request;
};

struct Interest {
  Name name;
  std::vector<ClientRequest> report;  // optimizer reports only
};

struct Data {
  Name name;
  std::uint64_t payload_bytes = 0;
  bool authentic = true;
  std::optional<std::size_t> level;      // video data
  std::vector<Assignment> assignments;   // optimizer config
  std::optional<std::uint64_t> version;  // report acknowledgement / config version
};

enum class NackReason { Congestion, VersionOutdated, RecommendResolution };
std::string_view to_string(NackReason r);

struct Nack {
  Name name;  // the Interest being answered
  NackReason reason = NackReason::Congestion;
  std::optional<Name> recommended;              // RecommendResolution only
  std::optional<std::uint64_t> latest_version;  // VersionOutdated only
};

using Packet = std::variant<RangeInterest, Interest, Data, Nack>;

const Name& name_of(const Packet& p);
std::string_view kind_of(const Packet& p);

/// Bytes on the wire, headers included.
std::uint64_t wire_size(const Packet& p);

/// Throws std::invalid_argument unless reason and recommended name agree.
Nack make_nack(Name name, NackReason reason, std::optional<Name> recommended = std::nullopt,
               std::optional<std::uint64_t> latest_version = std::nullopt);

}  // namespace comets::sim
