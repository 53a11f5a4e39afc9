// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/model.hpp"

#include <algorithm>
#include <ostream>

#include "jellyfish/errors.hpp"

namespace jellyfish::model {

namespace {

template <typename Fn>
void for_each_link(const Graph& g, pathsel::PathView p, Fn&& fn) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i) fn(*g.link(p[i], p[i + 1]));
}

void require_paths(const PathSet& ps, const SwitchDemand& d) {
  if (ps.path_count(d.src, d.dst) == 0)
    throw MissingPath("no path for switch pair " + std::to_string(d.src) + " -> " + std::to_string(d.dst));
}

}  // namespace

std::vector<double> link_loads(const Graph& g, const PathSet& ps, std::span<const SwitchDemand> demands) {
  if (ps.topo_hash() != g.content_hash()) throw ConfigError("path set belongs to a different topology");
  std::vector<double> load(g.link_count(), 0.0);
  for (const SwitchDemand& d : demands) {
    if (d.src == d.dst) continue;
    require_paths(ps, d);
    for (std::size_t i = 0; i < ps.path_count(d.src, d.dst); ++i)
      for_each_link(g, ps.path(d.src, d.dst, i), [&](LinkId l) { load[l] += 1.0; });
  }
  return load;
}

FlowRateReport flow_rates(const Graph& g, const PathSet& ps, std::span<const SwitchDemand> demands) {
  FlowRateReport r;
  r.link_load = link_loads(g, ps, demands);
  r.flows.reserve(demands.size());
  for (const SwitchDemand& d : demands) {
    FlowRate f{d.src, d.dst, 1.0, 1.0};
    if (d.src != d.dst) {
      f.raw = 0.0;
      for (std::size_t i = 0; i < ps.path_count(d.src, d.dst); ++i) {
        double worst = 0.0;
        for_each_link(g, ps.path(d.src, d.dst, i), [&](LinkId l) { worst = std::max(worst, r.link_load[l]); });
        f.raw += 1.0 / worst;
      }
      f.clipped = std::min(f.raw, 1.0);
    }
    r.flows.push_back(f);
  }
  if (!r.flows.empty()) {
    r.min_clipped = r.max_clipped = r.flows.front().clipped;
    double sum_clipped = 0.0, sum_raw = 0.0;
    for (const FlowRate& f : r.flows) {
      sum_clipped += f.clipped;
      sum_raw += f.raw;
      r.min_clipped = std::min(r.min_clipped, f.clipped);
      r.max_clipped = std::max(r.max_clipped, f.clipped);
    }
    r.mean_clipped = sum_clipped / static_cast<double>(r.flows.size());
    r.mean_raw = sum_raw / static_cast<double>(r.flows.size());
  }
  return r;
}

std::vector<SwitchDemand> to_switch_demands(const topology::Topology& t, const traffic::TrafficPattern& pattern) {
  if (pattern.node_count > t.node_count())
    throw ConfigError("pattern has " + std::to_string(pattern.node_count) + " nodes, topology only " +
                      std::to_string(t.node_count()));
  std::vector<SwitchDemand> out;
  out.reserve(pattern.demands.size());
  for (const auto& d : pattern.demands) out.push_back({t.host_switch(d.src), t.host_switch(d.dst), d.weight});
  return out;
}

FlowRateReport flow_rates(const topology::Topology& t, const PathSet& ps, const traffic::TrafficPattern& pattern) {
  auto demands = to_switch_demands(t, pattern);
  FlowRateReport r = flow_rates(t.graph(), ps, demands);
  for (std::size_t i = 0; i < r.flows.size(); ++i) {
    r.flows[i].src = pattern.demands[i].src;
    r.flows[i].dst = pattern.demands[i].dst;
  }
  return r;
}

void write_csv(const FlowRateReport& r, std::ostream& out, char delimiter) {
  const char c = delimiter;
  out.precision(10);
  out << "src" << c << "dst" << c << "raw_rate" << c << "clipped_rate" << '\n';
  for (const FlowRate& f : r.flows) out << f.src << c << f.dst << c << f.raw << c << f.clipped << '\n';
  out << "mean" << c << "" << c << r.mean_raw << c << r.mean_clipped << '\n';
}

void write_link_loads(const Graph& g, const FlowRateReport& r, std::ostream& out, char delimiter) {
  const char c = delimiter;
  out << "src_switch" << c << "dst_switch" << c << "load" << '\n';
  for (LinkId l = 0; l < r.link_load.size(); ++l)
    if (r.link_load[l] > 0) out << g.link_source(l) << c << g.link_target(l) << c << r.link_load[l] << '\n';
}

}  // namespace jellyfish::model
