#include "comets/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

namespace comets {

using nlohmann::json;

namespace {

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ParseError(path + ": expected an object");
}

void expect_keys(const json& j, const std::string& path,
                 std::initializer_list<std::string_view> allowed) {
  expect_object(j, path);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(path + ": unknown key '" + key + "'");
  }
}

const json& required(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + ": missing key '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path + ": expected a number");
  return j.get<double>();
}

std::uint64_t unsigned_int(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ParseError(path + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": expected a string");
  return j.get<std::string>();
}

template <class T>
void read_opt(const json& j, const std::string& path, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  const std::string p = path + "." + key;
  if constexpr (std::is_same_v<T, double>) {
    out = number(*it, p);
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = text(*it, p);
  } else {
    out = static_cast<T>(unsigned_int(*it, p));
  }
}

ResolutionCatalog parse_catalog(const json& j) {
  const std::string path = "catalog";
  expect_keys(j, path, {"a", "b", "levels"});
  double a = 1.0, b = 1.0;
  read_opt(j, path, "a", a);
  read_opt(j, path, "b", b);
  const json& levels = required(j, path, "levels");
  if (!levels.is_array()) throw ParseError(path + ".levels: expected an array");
  std::vector<ResolutionLevel> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const std::string p = path + ".levels[" + std::to_string(i) + "]";
    const json& lv = levels[i];
    expect_keys(lv, p, {"name", "height", "bandwidth", "vmaf"});
    ResolutionLevel r;
    r.name = text(required(lv, p, "name"), p + ".name");
    r.height = number(required(lv, p, "height"), p + ".height");
    r.bandwidth_mbps = number(required(lv, p, "bandwidth"), p + ".bandwidth");
    if (auto it = lv.find("vmaf"); it != lv.end()) {
      if (!it->is_array() || it->size() != 2)
        throw ParseError(p + ".vmaf: expected [lo, hi]");
      r.vmaf = VmafRange{number((*it)[0], p + ".vmaf[0]"), number((*it)[1], p + ".vmaf[1]")};
    }
    out.push_back(std::move(r));
  }
  return ResolutionCatalog(std::move(out), a, b);
}

SimParams parse_sim(const json& j) {
  const std::string path = "sim";
  expect_keys(j, path,
              {"duration_s", "interval_s", "chunk_s", "loss_rate", "seed",
               "cache_capacity", "aimd", "backpressure_threshold_s",
               "backpressure_cooldown_s", "pit_lifetime_s", "min_timeout_s",
               "initial_rtt_s", "buffer_target_s", "startup_threshold_s",
               "collect_window_s", "optimizer_delay_s", "title"});
  SimParams p;
  read_opt(j, path, "duration_s", p.duration_s);
  read_opt(j, path, "interval_s", p.interval_s);
  read_opt(j, path, "chunk_s", p.chunk_s);
  read_opt(j, path, "loss_rate", p.loss_rate);
  read_opt(j, path, "seed", p.seed);
  read_opt(j, path, "cache_capacity", p.cache_capacity);
  read_opt(j, path, "backpressure_threshold_s", p.backpressure_threshold_s);
  read_opt(j, path, "backpressure_cooldown_s", p.backpressure_cooldown_s);
  read_opt(j, path, "pit_lifetime_s", p.pit_lifetime_s);
  read_opt(j, path, "min_timeout_s", p.min_timeout_s);
  read_opt(j, path, "initial_rtt_s", p.initial_rtt_s);
  read_opt(j, path, "buffer_target_s", p.buffer_target_s);
  read_opt(j, path, "startup_threshold_s", p.startup_threshold_s);
  read_opt(j, path, "collect_window_s", p.collect_window_s);
  read_opt(j, path, "optimizer_delay_s", p.optimizer_delay_s);
  read_opt(j, path, "title", p.title);
  if (auto it = j.find("aimd"); it != j.end()) {
    const std::string ap = path + ".aimd";
    expect_keys(*it, ap, {"initial_window", "min_window", "max_window", "decrease_factor"});
    read_opt(*it, ap, "initial_window", p.aimd.initial_window);
    read_opt(*it, ap, "min_window", p.aimd.min_window);
    read_opt(*it, ap, "max_window", p.aimd.max_window);
    read_opt(*it, ap, "decrease_factor", p.aimd.decrease_factor);
  }
  return p;
}

}  // namespace

Scenario scenario_from_json(const json& doc) {
  expect_keys(doc, "$", {"catalog", "nodes", "edges", "users", "sim"});
  Scenario s;
  s.catalog = parse_catalog(required(doc, "$", "catalog"));

  const json& nodes = required(doc, "$", "nodes");
  if (!nodes.is_array()) throw ParseError("nodes: expected an array");
  std::vector<NodeRole> roles;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = "nodes[" + std::to_string(i) + "]";
    expect_keys(nodes[i], p, {"id", "role"});
    auto id = unsigned_int(required(nodes[i], p, "id"), p + ".id");
    if (id != i) throw ParseError(p + ".id: node ids must be 0..N-1 in order");
    auto role = parse_role(text(required(nodes[i], p, "role"), p + ".role"));
    if (!role) throw ParseError(p + ".role: expected server|forwarder|user");
    roles.push_back(*role);
  }

  const json& edges = required(doc, "$", "edges");
  if (!edges.is_array()) throw ParseError("edges: expected an array");
  std::vector<Edge> es;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = "edges[" + std::to_string(i) + "]";
    expect_keys(edges[i], p, {"from", "to", "capacity", "delay"});
    Edge e;
    e.from = static_cast<NodeId>(unsigned_int(required(edges[i], p, "from"), p + ".from"));
    e.to = static_cast<NodeId>(unsigned_int(required(edges[i], p, "to"), p + ".to"));
    if (e.from >= roles.size() || e.to >= roles.size())
      throw ParseError(p + ": endpoint references unknown node");
    e.capacity_mbps = number(required(edges[i], p, "capacity"), p + ".capacity");
    read_opt(edges[i], p, "delay", e.delay_s);
    es.push_back(e);
  }
  s.graph = NetworkGraph(std::move(roles), std::move(es));

  const json& users = required(doc, "$", "users");
  if (!users.is_array()) throw ParseError("users: expected an array");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string p = "users[" + std::to_string(i) + "]";
    expect_keys(users[i], p, {"node", "supported_levels", "weight"});
    UserProfile u;
    u.node = static_cast<NodeId>(unsigned_int(required(users[i], p, "node"), p + ".node"));
    const json& lv = required(users[i], p, "supported_levels");
    if (!lv.is_array()) throw ParseError(p + ".supported_levels: expected an array");
    for (std::size_t k = 0; k < lv.size(); ++k) {
      auto level = unsigned_int(lv[k], p + ".supported_levels[" + std::to_string(k) + "]");
      if (level == 0) throw ParseError(p + ".supported_levels: levels are 1-based");
      u.supported_levels.push_back(static_cast<std::size_t>(level - 1));
    }
    std::sort(u.supported_levels.begin(), u.supported_levels.end());
    u.supported_levels.erase(std::unique(u.supported_levels.begin(), u.supported_levels.end()),
                             u.supported_levels.end());
    u.weight = number(required(users[i], p, "weight"), p + ".weight");
    s.users.push_back(std::move(u));
  }

  if (auto it = doc.find("sim"); it != doc.end()) s.sim = parse_sim(*it);
  return s;
}

json scenario_to_json(const Scenario& s) {
  json levels = json::array();
  for (const auto& lv : s.catalog.levels()) {
    json l = {{"name", lv.name}, {"height", lv.height}, {"bandwidth", lv.bandwidth_mbps}};
    if (lv.vmaf) l["vmaf"] = {lv.vmaf->lo, lv.vmaf->hi};
    levels.push_back(std::move(l));
  }
  json nodes = json::array();
  for (NodeId n = 0; n < s.graph.node_count(); ++n)
    nodes.push_back({{"id", n}, {"role", std::string(to_string(s.graph.role(n)))}});
  json edges = json::array();
  for (const auto& e : s.graph.edges())
    edges.push_back({{"from", e.from}, {"to", e.to}, {"capacity", e.capacity_mbps}, {"delay", e.delay_s}});
  json users = json::array();
  for (const auto& u : s.users) {
    json lv = json::array();
    for (auto l : u.supported_levels) lv.push_back(l + 1);
    users.push_back({{"node", u.node}, {"supported_levels", lv}, {"weight", u.weight}});
  }
  const auto& p = s.sim;
  json sim = {
      {"duration_s", p.duration_s},
      {"interval_s", p.interval_s},
      {"chunk_s", p.chunk_s},
      {"loss_rate", p.loss_rate},
      {"seed", p.seed},
      {"cache_capacity", p.cache_capacity},
      {"aimd", {{"initial_window", p.aimd.initial_window},
                {"min_window", p.aimd.min_window},
                {"max_window", p.aimd.max_window},
                {"decrease_factor", p.aimd.decrease_factor}}},
      {"backpressure_threshold_s", p.backpressure_threshold_s},
      {"backpressure_cooldown_s", p.backpressure_cooldown_s},
      {"pit_lifetime_s", p.pit_lifetime_s},
      {"min_timeout_s", p.min_timeout_s},
      {"initial_rtt_s", p.initial_rtt_s},
      {"buffer_target_s", p.buffer_target_s},
      {"startup_threshold_s", p.startup_threshold_s},
      {"collect_window_s", p.collect_window_s},
      {"optimizer_delay_s", p.optimizer_delay_s},
      {"title", p.title},
  };
  return {{"catalog", {{"a", s.catalog.a()}, {"b", s.catalog.b()}, {"levels", levels}}},
          {"nodes", nodes},
          {"edges", edges},
          {"users", users},
          {"sim", sim}};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return scenario_from_json(doc);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << scenario_to_json(s).dump(2) << '\n';
}

}  // namespace comets
