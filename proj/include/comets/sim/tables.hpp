// Forwarder state: pending interest table and LRU content store.
#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "comets/sim/packet.hpp"

namespace comets::sim {

/// Faces are named by the neighbour node id; kLocalFace is the node itself.
using Face = std::uint32_t;
inline constexpr Face kLocalFace = 0xffffffffu;

enum class PitResult { Forwarded, Aggregated, Retransmission };

class Pit {
 public:
  struct Entry {
    std::vector<Face> faces;  // insertion order
    double expiry = 0.0;
    double created = 0.0;
    double last_forward = 0.0;
    bool retransmitted = false;  // forwarded upstream more than once
  };

  /// A new or expired name is Forwarded. A live name from a new face is
  /// Aggregated. A live name re-expressed by a face already recorded is a
  /// Retransmission: the lifetime is refreshed and the caller decides whether
  /// to forward it again (then calls mark_forwarded).
  PitResult insert_or_aggregate(const Name& name, Face face, double now, double lifetime);
  void mark_forwarded(const Name& name, double now);

  /// Removes a live entry and returns its faces; empty when absent or expired.
  std::vector<Face> satisfy(const Name& name, double now);

  const Entry* find(const Name& name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Name, Entry> entries_;
};

class ContentStore {
 public:
  explicit ContentStore(std::size_t capacity = 0) : capacity_(capacity) {}

  void insert(const Data& d);
  /// Marks the entry most recently used.
  std::optional<Data> lookup(const Name& name);
  bool contains(const Name& name) const { return index_.count(name.to_string()) > 0; }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::list<Data> items_;  // front = most recent
  std::unordered_map<std::string, std::list<Data>::iterator> index_;
};

}  // namespace comets::sim
