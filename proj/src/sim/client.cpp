#include "comets/sim/client.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace comets::sim {

std::vector<std::size_t> ClientRuntime::advertised() const {
  if (!downgrade_pending || !level) return supported;
  std::vector<std::size_t> lower;
  for (std::size_t l : supported)
    if (l < *level) lower.push_back(l);
  return lower.empty() ? supported : lower;
}

double ClientRuntime::timeout(double initial_rtt, double min_timeout, int attempts) const {
  return std::ldexp(std::max(min_timeout, 4.0 * srtt.value_or(initial_rtt)), attempts);
}

void ClientRuntime::on_rtt_sample(double rtt) {
  if (!srtt) {
    srtt = rtt;
    rttvar = rtt / 2.0;
    return;
  }
  rttvar = 0.75 * rttvar + 0.25 * std::abs(*srtt - rtt);
  srtt = 0.875 * *srtt + 0.125 * rtt;
}

bool ClientRuntime::finished() const {
  return std::all_of(done.begin(), done.end(), [](bool d) { return d; });
}

void client_on_congestion(ClientRuntime& c, const AimdParams& aimd) {
  c.cwnd = std::max(aimd.min_window,
                    static_cast<int>(std::floor(c.cwnd * aimd.decrease_factor)));
  c.acked_in_window = 0;
  c.window_limited = false;
}

TimeoutAction client_on_timeout(ClientRuntime& c, std::uint64_t seq, const AimdParams& aimd,
                                double now) {
  auto it = c.outstanding.find(seq);
  if (it == c.outstanding.end())
    throw std::logic_error("client_on_timeout: chunk " + std::to_string(seq) + " not outstanding");
  client_on_congestion(c, aimd);
  if (it->second.attempts < kMaxRetransmissions) {
    ++it->second.attempts;
    it->second.last_send = now;
    return TimeoutAction::Retransmit;
  }
  c.outstanding.erase(it);
  if (seq < c.done.size()) c.done[seq] = true;
  c.trace.chunks.push_back({seq, now, true});
  c.downgrade_pending = true;
  return TimeoutAction::Suppress;
}

void client_on_data(ClientRuntime& c, const AimdParams& aimd) {
  if (++c.acked_in_window < c.cwnd) return;
  if (c.window_limited) c.cwnd = std::min(aimd.max_window, c.cwnd + 1);
  c.acked_in_window = 0;
  c.window_limited = false;
}

std::optional<Nack> backpressure_check(const FaceQueue& face, double threshold_s,
                                       const ResolutionCatalog& catalog, std::string_view title,
                                       std::uint64_t next_chunk, const Name& interest) {
  if (face.drain_rate_mbps <= 0.0) return std::nullopt;
  const double delay = face.queued_bytes * 8.0 / (face.drain_rate_mbps * 1e6);
  if (!(delay > threshold_s)) return std::nullopt;
  std::optional<std::size_t> lower;
  if (face.level)
    for (std::size_t l : face.supported)
      if (l < *face.level) lower = l;
  if (!lower) return make_nack(interest, NackReason::Congestion);
  return make_nack(interest, NackReason::RecommendResolution,
                   Name::video(title, catalog.level(*lower).name, next_chunk));
}

}  // namespace comets::sim
