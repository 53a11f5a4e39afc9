// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jellyfish/graph.hpp"
#include "jellyfish/rng.hpp"

namespace jellyfish::traffic {

struct Demand {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;
  friend bool operator==(const Demand&, const Demand&) = default;
};

// Node-level demand set. No self demands, no duplicate (src, dst).
struct TrafficPattern {
  std::string name;
  std::vector<Demand> demands;
  std::size_t node_count = 0;

  void validate() const;  // throws InvariantViolation
  friend bool operator==(const TrafficPattern&, const TrafficPattern&) = default;
};

TrafficPattern random_permutation(std::size_t node_count, Rng& rng);
TrafficPattern shift(std::size_t node_count, std::size_t x);
TrafficPattern random_shift(std::size_t node_count, Rng& rng);
TrafficPattern random_x(std::size_t node_count, std::size_t x, Rng& rng);
TrafficPattern all_to_all(std::size_t node_count);

// Per-packet destination sampler for uniform random traffic.
class UniformDestination {
 public:
  explicit UniformDestination(std::size_t node_count);
  NodeId operator()(NodeId src, Rng& rng) const {
    auto d = static_cast<NodeId>(rng.uniform(node_count_ - 1));
    return d >= src ? d + 1 : d;
  }
  std::size_t node_count() const { return node_count_; }

 private:
  std::size_t node_count_;
};

enum class StencilKind { NN2D, NN2DDiag, NN3D, NN3DDiag };
std::string_view to_string(StencilKind k);
StencilKind parse_stencil(std::string_view name);  // "2DNN", "2DNNdiag", ...

struct Message {
  std::uint32_t src = 0;  // rank, or node once mapped
  std::uint32_t dst = 0;
  std::uint64_t bytes = 0;
  friend bool operator==(const Message&, const Message&) = default;
};

enum class MappingKind { linear, random };

struct Mapping {
  MappingKind kind = MappingKind::linear;
  std::uint64_t seed = 0;
  std::string label() const;  // "linear" or "random:<seed>"
  friend bool operator==(const Mapping&, const Mapping&) = default;
};

struct Workload {
  std::string name;
  std::size_t ranks = 0;
  std::uint64_t bytes_per_process = 0;
  std::vector<Message> messages;  // rank space
  Mapping mapping;
  std::vector<NodeId> rank_to_node;  // empty until mapped

  bool mapped() const { return !rank_to_node.empty(); }
  // Messages with endpoints translated to compute nodes; requires mapped().
  std::vector<Message> node_messages() const;
  friend bool operator==(const Workload&, const Workload&) = default;
};

// Periodic nearest-neighbour exchange on a torus of `dims` ranks (first
// dimension varies fastest). Each rank splits bytes_per_process evenly over
// its distinct neighbours, the remainder going one byte each to the first
// neighbours so totals are exact.
Workload stencil(StencilKind kind, std::span<const std::size_t> dims, std::uint64_t bytes_per_process);

// Linear: rank r -> node r. Random: seeded bijection onto distinct nodes.
Workload apply_mapping(const Workload& w, Mapping mapping, std::size_t node_count);

void write(const TrafficPattern& p, std::ostream& out);
TrafficPattern read_pattern(std::istream& in);
void save(const TrafficPattern& p, const std::filesystem::path& path);
TrafficPattern load_pattern(const std::filesystem::path& path);

void write(const Workload& w, std::ostream& out);
Workload read_workload(std::istream& in);
void save(const Workload& w, const std::filesystem::path& path);
Workload load_workload(const std::filesystem::path& path);

}  // namespace jellyfish::traffic
