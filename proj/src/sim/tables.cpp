#include "comets/sim/tables.hpp"

#include <algorithm>

namespace comets::sim {

PitResult Pit::insert_or_aggregate(const Name& name, Face face, double now, double lifetime) {
  auto it = entries_.find(name);
  if (it == entries_.end() || it->second.expiry <= now) {
    entries_[name] = Entry{{face}, now + lifetime, now, now, false};
    return PitResult::Forwarded;
  }
  auto& faces = it->second.faces;
  if (std::find(faces.begin(), faces.end(), face) != faces.end()) {
    it->second.expiry = now + lifetime;
    return PitResult::Retransmission;
  }
  faces.push_back(face);
  return PitResult::Aggregated;
}

void Pit::mark_forwarded(const Name& name, double now) {
  auto it = entries_.find(name);
  if (it == entries_.end()) return;
  it->second.last_forward = now;
  it->second.retransmitted = true;
}

std::vector<Face> Pit::satisfy(const Name& name, double now) {
  auto it = entries_.find(name);
  if (it == entries_.end()) return {};
  std::vector<Face> faces;
  if (it->second.expiry > now) faces = std::move(it->second.faces);
  entries_.erase(it);
  return faces;
}

const Pit::Entry* Pit::find(const Name& name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

void ContentStore::insert(const Data& d) {
  if (capacity_ == 0) return;
  const std::string key = d.name.to_string();
  if (auto it = index_.find(key); it != index_.end()) {
    items_.erase(it->second);
    index_.erase(it);
  }
  items_.push_front(d);
  index_[key] = items_.begin();
  while (items_.size() > capacity_) {
    index_.erase(items_.back().name.to_string());
    items_.pop_back();
  }
}

std::optional<Data> ContentStore::lookup(const Name& name) {
  auto it = index_.find(name.to_string());
  if (it == index_.end()) return std::nullopt;
  items_.splice(items_.begin(), items_, it->second);
  return *it->second;
}

}  // namespace comets::sim
