// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "jellyfish/pathsel.hpp"
#include "jellyfish/topology.hpp"
#include "jellyfish/traffic.hpp"

namespace jellyfish::model {

using pathsel::PathSet;
using topology::Graph;

// A demand between switches; same-switch demands are allowed and never
// touch a link.
struct SwitchDemand {
  SwitchId src = 0;
  SwitchId dst = 0;
  double weight = 1.0;
};

struct FlowRate {
  std::uint32_t src = 0;  // node (or switch for switch-level input)
  std::uint32_t dst = 0;
  double raw = 0.0;      // sum over sub-flows of 1 / bottleneck load
  double clipped = 0.0;  // min(raw, 1)
};

struct FlowRateReport {
  std::vector<FlowRate> flows;
  std::vector<double> link_load;  // indexed by directed LinkId, unit capacity
  double mean_clipped = 0.0;
  double min_clipped = 0.0;
  double max_clipped = 0.0;
  double mean_raw = 0.0;
};

// Sub-flow count per directed link: each demand puts one sub-flow on every
// path of its switch pair. Throws MissingPath.
std::vector<double> link_loads(const Graph& g, const PathSet& ps, std::span<const SwitchDemand> demands);

// Every sub-flow runs at the inverse of the heaviest load on its path; a
// flow's rate is the sum over its sub-flows.
FlowRateReport flow_rates(const Graph& g, const PathSet& ps, std::span<const SwitchDemand> demands);
FlowRateReport flow_rates(const topology::Topology& t, const PathSet& ps, const traffic::TrafficPattern& pattern);

std::vector<SwitchDemand> to_switch_demands(const topology::Topology& t, const traffic::TrafficPattern& pattern);

// CSV: src,dst,raw_rate,clipped_rate then a summary row.
void write_csv(const FlowRateReport& r, std::ostream& out, char delimiter = ',');
// CSV: src_switch,dst_switch,load for loaded links.
void write_link_loads(const Graph& g, const FlowRateReport& r, std::ostream& out, char delimiter = ',');

}  // namespace jellyfish::model
