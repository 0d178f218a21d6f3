#include "comets/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <stdexcept>

namespace comets {

double vmaf_for_level(const ResolutionCatalog& catalog, std::string_view level, std::uint64_t seed,
                      std::uint64_t chunk) {
  auto l = catalog.find(level);
  if (!l) throw std::invalid_argument("vmaf_for_level: unknown level " + std::string(level));
  const auto& range = catalog.level(*l).vmaf;
  if (!range) throw std::invalid_argument("vmaf_for_level: no VMAF range for " + std::string(level));
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(*l), static_cast<std::uint32_t>(chunk),
                    static_cast<std::uint32_t>(chunk >> 32)};
  std::mt19937_64 rng(seq);
  return std::uniform_real_distribution<double>(range->lo, range->hi)(rng);
}

std::vector<double> transit_deviations(std::span<const double> send, std::span<const double> recv) {
  if (send.size() != recv.size())
    throw std::invalid_argument("transit_deviations: size mismatch");
  std::vector<double> d;
  for (std::size_t j = 1; j < send.size(); ++j)
    d.push_back(std::abs((recv[j] - recv[j - 1]) - (send[j] - send[j - 1])));
  return d;
}

std::vector<double> rfc3550_jitter(std::span<const double> abs_deviation) {
  std::vector<double> out;
  out.reserve(abs_deviation.size());
  double j = 0.0;
  for (double d : abs_deviation) {
    j = j + (d - j) / 16.0;
    out.push_back(j);
  }
  return out;
}

double jain_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("jain_index: empty input");
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("jain_index: negative value");
    sum += v;
    sq += v * v;
  }
  if (sq == 0.0) throw std::invalid_argument("jain_index: all values are zero");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

double composite_qoe(const CompositeInputs& in) {
  for (double v : {in.vmaf, in.fairness, in.buffer, in.jitter, in.startup})
    if (!(v >= 0.0 && v <= 1.0)) throw std::out_of_range("composite_qoe: input outside [0, 1]");
  const double q = 0.4 * in.vmaf + 0.2 * in.fairness + 0.15 * in.buffer +
                   0.15 * (1.0 - in.jitter) + 0.1 * (1.0 - in.startup);
  return std::max(0.0, q);
}

double normalize_vmaf(double vmaf) { return std::clamp(vmaf / 100.0, 0.0, 1.0); }
double normalize_buffer(double buffer_s) { return std::clamp(buffer_s, 0.0, 10.0) / 10.0; }
double normalize_jitter(double jitter_ms) { return std::clamp(jitter_ms, 0.0, 100.0) / 100.0; }
double normalize_startup(double startup_s) { return std::clamp(startup_s, 0.0, 3.0) / 3.0; }

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * values.size()));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

PlayoutBuffer PlayoutBuffer::replay(std::span<const ChunkArrival> chunks, double chunk_s,
                                    double startup_threshold_s, double session_start,
                                    double sample_step_s) {
  PlayoutBuffer pb;
  if (chunks.empty()) return pb;
  std::vector<ChunkArrival> ordered(chunks.begin(), chunks.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const ChunkArrival& a, const ChunkArrival& b) { return a.index < b.index; });

  // A chunk is playable once it and every earlier chunk are available.
  std::vector<double> avail(ordered.size());
  std::vector<double> content(ordered.size());
  double last = 0.0;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    last = std::max(last, ordered[i].time);
    avail[i] = last;
    content[i] = ordered[i].skipped ? 0.0 : chunk_s;
  }

  double filled = 0.0;
  pb.startup_time = avail.back();
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    filled += content[i];
    if (filled >= startup_threshold_s) {
      pb.startup_time = avail[i];
      break;
    }
  }
  pb.startup_delay = pb.startup_time - session_start;

  std::vector<double> begin(ordered.size());
  double clock = pb.startup_time;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (content[i] > 0.0 && avail[i] > clock) {
      ++pb.stalls;
      pb.stall_s += avail[i] - clock;
      clock = avail[i];
    }
    begin[i] = clock;
    clock += content[i];
  }

  auto level_at = [&](double t) {
    double level = 0.0;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (avail[i] > t) break;
      level += content[i] - std::clamp(t - begin[i], 0.0, content[i]);
    }
    return level;
  };
  const double end = avail.back();
  double sum = 0.0;
  std::size_t n = 0;
  for (double t = session_start; t <= end + 1e-12; t += sample_step_s) {
    const double level = level_at(t);
    pb.samples.push_back({t, level});
    if (t >= pb.startup_time) {
      sum += level;
      ++n;
    }
  }
  pb.mean_buffer_s = n ? sum / static_cast<double>(n) : 0.0;
  return pb;
}

namespace {

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

MetricsReport compute_metrics(const Scenario& s, std::span<const ClientTrace> traces,
                              std::uint64_t seed) {
  MetricsReport rep;
  std::vector<double> heights, all_gaps;
  double vmaf_sum = 0.0, buffer_sum = 0.0, jitter_sum = 0.0, startup_sum = 0.0;
  std::size_t served = 0;

  for (const auto& t : traces) {
    ClientMetrics c;
    c.node = t.node;
    c.chunks = t.arrival_times.size();
    c.downgrades = t.downgrades;
    c.unserved = t.unserved || c.chunks == 0;
    for (const auto& ch : t.chunks) c.skipped += ch.skipped ? 1 : 0;

    std::vector<double> vmaf, height;
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
      const auto& lv = s.catalog.level(t.levels[i]);
      vmaf.push_back(vmaf_for_level(s.catalog, lv.name, seed ^ (std::uint64_t{t.node} << 32),
                                    t.chunk_index[i]));
      height.push_back(lv.height);
    }
    c.mean_vmaf = mean(vmaf);
    c.p95_vmaf = percentile(vmaf, 95.0);
    c.mean_height = mean(height);

    std::vector<double> gaps;
    for (std::size_t i = 1; i < t.arrival_times.size(); ++i)
      gaps.push_back(1000.0 * (t.arrival_times[i] - t.arrival_times[i - 1]));
    c.mean_interarrival_ms = mean(gaps);
    c.p95_interarrival_ms = percentile(gaps, 95.0);
    all_gaps.insert(all_gaps.end(), gaps.begin(), gaps.end());

    auto j = rfc3550_jitter(transit_deviations(t.send_times, t.arrival_times));
    c.jitter_ms = j.empty() ? 0.0 : 1000.0 * j.back();

    if (!t.chunks.empty()) {
      auto pb = PlayoutBuffer::replay(t.chunks, s.sim.chunk_s, s.sim.startup_threshold_s,
                                      t.session_start);
      c.startup_s = pb.startup_delay;
      c.mean_buffer_s = pb.mean_buffer_s;
      c.stalls = pb.stalls;
    }
    heights.push_back(c.mean_height);
    if (c.chunks > 0) {
      ++served;
      vmaf_sum += c.mean_vmaf;
      buffer_sum += normalize_buffer(c.mean_buffer_s);
      jitter_sum += normalize_jitter(c.jitter_ms);
      startup_sum += c.startup_s;
    }
    if (c.unserved) ++rep.unserved;
    rep.clients.push_back(c);
  }

  rep.mean_interarrival_ms = mean(all_gaps);
  if (served > 0) {
    const double n = static_cast<double>(served);
    rep.mean_vmaf = vmaf_sum / n;
    rep.mean_startup_s = startup_sum / n;
    const bool any = std::any_of(heights.begin(), heights.end(), [](double h) { return h > 0.0; });
    rep.jain = any ? jain_index(heights) : 0.0;
    rep.composite = composite_qoe({normalize_vmaf(rep.mean_vmaf), rep.jain, buffer_sum / n,
                                   jitter_sum / n, normalize_startup(rep.mean_startup_s)});
  }
  return rep;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : clients)
    cs.push_back({{"node", c.node},
                  {"chunks", c.chunks},
                  {"skipped", c.skipped},
                  {"mean_vmaf", c.mean_vmaf},
                  {"p95_vmaf", c.p95_vmaf},
                  {"mean_interarrival_ms", c.mean_interarrival_ms},
                  {"p95_interarrival_ms", c.p95_interarrival_ms},
                  {"jitter_ms", c.jitter_ms},
                  {"startup_s", c.startup_s},
                  {"mean_buffer_s", c.mean_buffer_s},
                  {"stalls", c.stalls},
                  {"mean_height", c.mean_height},
                  {"downgrades", c.downgrades},
                  {"unserved", c.unserved}});
  return {{"schema", 1},
          {"aggregate",
           {{"jain", jain},
            {"composite_qoe", composite},
            {"unserved", unserved},
            {"mean_interarrival_ms", mean_interarrival_ms},
            {"mean_vmaf", mean_vmaf},
            {"mean_startup_s", mean_startup_s}}},
          {"clients", cs},
          {"simulator", extra}};
}

void MetricsReport::write_client_csv(std::ostream& out) const {
  out << "node,chunks,skipped,mean_vmaf,p95_vmaf,mean_interarrival_ms,p95_interarrival_ms,"
         "jitter_ms,startup_s,mean_buffer_s,stalls,mean_height,downgrades,unserved\n";
  const auto old = out.precision(10);
  for (const auto& c : clients)
    out << c.node << ',' << c.chunks << ',' << c.skipped << ',' << c.mean_vmaf << ','
        << c.p95_vmaf << ',' << c.mean_interarrival_ms << ',' << c.p95_interarrival_ms << ','
        << c.jitter_ms << ',' << c.startup_s << ',' << c.mean_buffer_s << ',' << c.stalls << ','
        << c.mean_height << ',' << c.downgrades << ',' << (c.unserved ? 1 : 0) << '\n';
  out.precision(old);
}

}  // namespace comets
