// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "jellyfish/graph.hpp"

namespace jellyfish::topology {

// RRG(N, x, y): N switches with x ports each, y of them wired to other
// switches and the remaining x - y to compute nodes.
struct TopoSpec {
  std::uint32_t n_switches = 0;
  std::uint32_t ports_per_switch = 0;
  std::uint32_t network_ports = 0;
  std::uint64_t rng_seed = 0;

  std::uint32_t nodes_per_switch() const { return ports_per_switch - network_ports; }
  std::uint32_t node_count() const { return n_switches * nodes_per_switch(); }

  // Throws InfeasibleSpec.
  void validate() const;

  std::string label() const;  // "RRG(36,24,16)"

  friend bool operator==(const TopoSpec&, const TopoSpec&) = default;
};

// Immutable validated Jellyfish instance. Compute node i is attached to
// switch i / (x - y).
class Topology {
 public:
  // Throws InvariantViolation naming the failed invariant.
  Topology(TopoSpec spec, Graph graph);

  const TopoSpec& spec() const { return spec_; }
  const Graph& graph() const { return graph_; }
  std::size_t switch_count() const { return graph_.size(); }
  std::size_t node_count() const { return spec_.node_count(); }
  SwitchId host_switch(NodeId node) const { return node / spec_.nodes_per_switch(); }
  NodeId first_node(SwitchId s) const { return s * spec_.nodes_per_switch(); }

  friend bool operator==(const Topology& a, const Topology& b) {
    return a.spec_ == b.spec_ && a.graph_ == b.graph_;
  }

 private:
  TopoSpec spec_;
  Graph graph_;
};

// Configuration-model stub matching with simple-graph rejection, edge-swap
// repair when stuck, and whole-graph retry (derived seed) when the result
// is disconnected. Deterministic in the spec including its seed.
Topology generate(const TopoSpec& spec);

inline constexpr int kGenerateRetryBudget = 100;

double avg_shortest_path_length(const Graph& g);
int diameter(const Graph& g);

void write(const Topology& t, std::ostream& out);
Topology read(std::istream& in);
void save(const Topology& t, const std::filesystem::path& path);
Topology load(const std::filesystem::path& path);

}  // namespace jellyfish::topology
