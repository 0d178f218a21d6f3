// Client transport state and the forwarder backpressure rule.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "comets/metrics.hpp"
#include "comets/sim/packet.hpp"

namespace comets::sim {

inline constexpr int kMaxRetransmissions = 2;

struct Outstanding {
  double first_send = 0.0;
  double last_send = 0.0;
  int attempts = 0;  // retransmissions so far
  std::size_t level = 0;
  std::uint64_t timer = 0;  // id of the live timeout event
};

struct ClientRuntime {
  NodeId node = 0;
  std::vector<std::size_t> supported;  // 0-based, sorted
  double weight = 1.0;
  std::uint64_t total_chunks = 0;

  std::optional<std::size_t> level;  // current assignment
  int cwnd = 1;
  int acked_in_window = 0;
  bool window_limited = false;
  std::map<std::uint64_t, Outstanding> outstanding;
  std::uint64_t next_seq = 0;
  std::vector<bool> done;  // delivered or skipped, per chunk

  bool downgrade_pending = false;
  std::size_t downgrades = 0;
  bool unserved = false;
  std::optional<double> srtt;
  double rttvar = 0.0;

  ClientTrace trace;

  /// Levels advertised in the next Range Interest: everything supported, or
  /// only levels below the current one while a downgrade is pending.
  std::vector<std::size_t> advertised() const;
  /// max(min_timeout, 4 * SRTT), doubled for each retransmission already made.
  double timeout(double initial_rtt, double min_timeout, int attempts = 0) const;
  void on_rtt_sample(double rtt);
  bool finished() const;
};

enum class TimeoutAction { Retransmit, Suppress };

/// Halves the window, then retransmits while attempts < 2 or gives the chunk
/// up and marks a downgrade for the next interval. Throws std::logic_error if
/// the chunk is not outstanding.
TimeoutAction client_on_timeout(ClientRuntime& c, std::uint64_t seq, const AimdParams& aimd,
                                double now);

/// Additive increase: one more Interest per fully acknowledged window, only
/// when the window was the limiting factor during that window.
void client_on_data(ClientRuntime& c, const AimdParams& aimd);

/// Multiplicative decrease.
void client_on_congestion(ClientRuntime& c, const AimdParams& aimd);

struct FaceQueue {
  double queued_bytes = 0.0;
  double drain_rate_mbps = 0.0;
  std::optional<std::size_t> level;    // current assignment on this face
  std::vector<std::size_t> supported;  // client's levels, sorted
};

/// Nack for a face whose queue delay exceeds the threshold: a recommendation
/// for the highest supported level below the current one, or CONGESTION when
/// there is none. `interest` is the Interest being answered.
std::optional<Nack> backpressure_check(const FaceQueue& face, double threshold_s,
                                       const ResolutionCatalog& catalog, std::string_view title,
                                       std::uint64_t next_chunk, const Name& interest);

}  // namespace comets::sim
