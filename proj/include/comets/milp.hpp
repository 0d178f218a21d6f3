// Decision variables of the QoE integer program and its constraint checker.
//
//   x[i][l]  node i selects level l            (SelectionState, node x level)
//   y[e][l]  edge e carries level l            (TransmissionState, edge x level)
//
// Constraint families:
//   C-SRV      x[s][l] = 1 for servers
//   C-CAP-USR  x[u][l] = 0 for levels the user does not support
//   C-ONE      sum_l x[u][l] = 1 for users
//   C-FWD-OUT  y[(i,j)][l] <= x[i][l]
//   C-FWD-IN   x[i][l] <= sum_{j -> i} y[(j,i)][l] for forwarders and users
//   C-BW       sum_l B_l y[e][l] <= C_e
//   C-INT      all values binary (only when requested)
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "comets/network_model.hpp"

namespace comets {

/// Dense row-major rows x levels matrix. The tag keeps node-indexed and
/// edge-indexed matrices from being mixed up.
template <class Tag>
class LevelMatrix {
 public:
  LevelMatrix() = default;
  LevelMatrix(std::size_t rows, std::size_t levels, double fill = 0.0)
      : rows_(rows), levels_(levels), data_(rows * levels, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t levels() const { return levels_; }

  double& operator()(std::size_t r, std::size_t l) { return data_[r * levels_ + l]; }
  double operator()(std::size_t r, std::size_t l) const { return data_[r * levels_ + l]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * levels_, levels_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * levels_, levels_};
  }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const LevelMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t levels_ = 0;
  std::vector<double> data_;
};

struct NodeRowsTag;
struct EdgeRowsTag;
using SelectionState = LevelMatrix<NodeRowsTag>;
using TransmissionState = LevelMatrix<EdgeRowsTag>;

SelectionState make_selection(const Scenario& s);
TransmissionState make_transmission(const Scenario& s);

inline constexpr double kFeasibilityTol = 1e-9;

enum class ConstraintFamily { Srv, CapUsr, One, FwdOut, FwdIn, Bw, Int };
inline constexpr std::array<ConstraintFamily, 7> kAllFamilies = {
    ConstraintFamily::Srv,   ConstraintFamily::CapUsr, ConstraintFamily::One,
    ConstraintFamily::FwdOut, ConstraintFamily::FwdIn, ConstraintFamily::Bw,
    ConstraintFamily::Int};

std::string_view to_string(ConstraintFamily f);

struct Residual {
  std::optional<NodeId> node;
  std::optional<EdgeId> edge;
  std::optional<std::size_t> level;
  double residual = 0.0;
};

class ConstraintReport {
 public:
  void add(ConstraintFamily f, Residual r) { entries_[index(f)].push_back(r); }
  const std::vector<Residual>& entries(ConstraintFamily f) const { return entries_[index(f)]; }
  std::size_t count(ConstraintFamily f) const { return entries(f).size(); }
  bool empty() const;
  std::size_t total() const;
  double max_residual() const;
  nlohmann::json to_json() const;

 private:
  static std::size_t index(ConstraintFamily f) { return static_cast<std::size_t>(f); }
  std::array<std::vector<Residual>, 7> entries_;
};

/// Z = sum_u w_u sum_l Q_l x[u][l]. Throws std::invalid_argument when x
/// does not cover every node.
double objective(const Scenario& s, const SelectionState& x);

/// Enumerates every residual above kFeasibilityTol. Throws
/// std::invalid_argument on shape mismatch.
ConstraintReport check(const Scenario& s, const SelectionState& x,
                       const TransmissionState& y, bool integral);

/// Mbps carried by an edge. Throws std::out_of_range for an unknown edge.
double link_load(const Scenario& s, const TransmissionState& y, EdgeId edge);

}  // namespace comets
