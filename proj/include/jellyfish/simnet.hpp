// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "jellyfish/pathsel.hpp"
#include "jellyfish/rng.hpp"
#include "jellyfish/topology.hpp"
#include "jellyfish/traffic.hpp"

namespace jellyfish::simnet {

using pathsel::PathSet;
using pathsel::PathView;
using topology::Graph;
using topology::Topology;

enum class Mechanism { SP, RANDOM, ROUND_ROBIN, UGAL_VANILLA, KSP_UGAL, KSP_ADAPTIVE };

std::string_view to_string(Mechanism m);
// Accepts the enum spelling or the CLI spelling ("ksp-adaptive", "round-robin", ...).
Mechanism parse_mechanism(std::string_view name);

struct SimConfig {
  int channel_latency = 10;      // cycles per switch-to-switch link
  int router_delay = 1;          // cycles from buffer entry to crossbar eligibility
  double router_speedup = 2.0;   // crossbar flits per port per cycle
  int flits_per_packet = 1;
  int vc_count = 0;              // 0 = diameter; raised to the longest route in use
  int buffer_per_vc = 32;        // flits
  int warmup_cycles = 500;
  int sample_cycles = 500;
  int samples = 10;
  double saturation_latency = 500.0;
  double injection_rate = 0.1;   // packets per node per cycle
  Mechanism routing = Mechanism::KSP_ADAPTIVE;
  int ugal_bias = 0;
  std::uint64_t rng_seed = 1;

  // Replay.
  std::uint64_t packet_bytes = 1500;
  double link_bandwidth = 20e9;  // bytes per second
  std::uint64_t max_replay_cycles = 100'000'000;

  bool stop_on_saturation = false;  // end the run after the first saturated sample
  bool check_invariants = false;    // audit credits and conservation every cycle
  bool record_path_usage = false;

  void validate() const;  // throws ConfigError
};

// Zero-load latency of a route with `hops` switch-to-switch links: one
// router traversal per switch visited plus the channel latency per link.
inline std::uint64_t zero_load_latency(std::size_t hops, const SimConfig& cfg) {
  return (hops + 1) * static_cast<std::uint64_t>(cfg.router_delay) +
         hops * static_cast<std::uint64_t>(cfg.channel_latency);
}

// Local congestion information at a switch.
class QueueState {
 public:
  virtual ~QueueState() = default;
  // Flits queued at `at` for, or buffered downstream on, the link to `toward`.
  virtual int occupancy(SwitchId at, SwitchId toward) const = 0;
};

// Hop count times the source output occupancy toward the first hop.
int estimate_latency(PathView path, const QueueState& queues);

// Per switch-pair position for round-robin routing.
class RoundRobinCursors {
 public:
  explicit RoundRobinCursors(std::size_t switches) : switches_(switches), next_(switches * switches, 0) {}
  std::size_t advance(SwitchId s, SwitchId d, std::size_t count) {
    auto& c = next_[std::size_t{s} * switches_ + d];
    std::size_t v = c % count;
    c = static_cast<std::uint32_t>(v + 1);
    return v;
  }

 private:
  std::size_t switches_;
  std::vector<std::uint32_t> next_;
};

// Either one of the pair's precomputed paths, or (vanilla UGAL) the
// concatenation of the minimal paths src->intermediate->dst.
struct RouteChoice {
  std::size_t path_index = 0;
  SwitchId intermediate = kNoSwitch;
  bool nonminimal() const { return intermediate != kNoSwitch; }
};

RouteChoice choose_route(Mechanism m, SwitchId src, SwitchId dst, const PathSet& ps, const QueueState& queues,
                         RoundRobinCursors& cursors, Rng& rng, int ugal_bias = 0);

std::vector<SwitchId> materialize(const PathSet& ps, SwitchId src, SwitchId dst, const RouteChoice& choice);

// Destination process for open-loop injection.
class Injection {
 public:
  static Injection from_pattern(const traffic::TrafficPattern& pattern);
  static Injection uniform(std::size_t node_count);

  std::size_t node_count() const { return node_count_; }
  bool active(NodeId src) const { return uniform_ || offsets_[src + 1] > offsets_[src]; }
  NodeId draw(NodeId src, Rng& rng) const;

 private:
  std::size_t node_count_ = 0;
  bool uniform_ = false;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  std::vector<double> cumulative_;
};

struct SampleStats {
  double mean_latency = 0.0;  // NaN when nothing was delivered
  double accepted_throughput = 0.0;
  std::uint64_t delivered = 0;
};

struct SimStats {
  double injection_rate = 0.0;
  std::vector<SampleStats> samples;
  double mean_latency = 0.0;
  double accepted_throughput = 0.0;  // flits per node per cycle
  bool saturated = false;

  std::uint64_t cycles = 0;
  std::uint64_t injected = 0;  // packets created at sources
  std::uint64_t delivered = 0;
  std::uint64_t in_flight = 0;  // created but undelivered at the end
  int vc_count = 0;

  bool deadlock = false;
  std::uint64_t max_stall_cycles = 0;  // longest run of cycles with flits buffered but none moving

  std::uint64_t min_excess_latency = 0;  // min over packets of latency - zero-load latency
  std::uint64_t zero_load_exact = 0;     // packets delivered at exactly zero-load latency
  std::uint64_t below_zero_load = 0;     // must stay 0

  // Filled when check_invariants is set.
  std::uint64_t conservation_violations = 0;
  std::uint64_t credit_violations = 0;
  std::uint64_t buffer_violations = 0;
  std::uint64_t vc_violations = 0;
  std::size_t max_vc_occupancy = 0;
  int max_vc_index = -1;

  std::vector<double> link_utilization;  // flits per cycle per directed link over the measurement
  // Filled when record_path_usage is set: per switch pair (s * N + d), uses per path index.
  std::vector<std::vector<std::uint64_t>> path_usage;
};

SimStats run(const Topology& t, const PathSet& ps, const SimConfig& cfg, const Injection& traffic);

struct SweepPoint {
  double rate = 0.0;
  double mean_latency = 0.0;
  double accepted_throughput = 0.0;
  bool saturated = false;
};

struct SweepResult {
  double saturation_throughput = 0.0;  // last non-saturated rate, 0 if the first point saturates
  std::vector<SweepPoint> curve;
  std::vector<SimStats> runs;
};

// Runs every rate in ascending order. With stop_at_saturation the sweep
// ends after the first saturated point.
SweepResult saturation_sweep(const Topology& t, const PathSet& ps, const SimConfig& cfg, const Injection& traffic,
                             std::span<const double> rates, bool stop_at_saturation = true);

std::vector<double> rate_grid(double first, double last, double step);

struct ReplayResult {
  std::uint64_t completion_cycles = 0;
  double completion_seconds = 0.0;
  std::uint64_t packets = 0;
  bool deadlock = false;
  int vc_count = 0;
};

// Segments each message into packets, posts everything at cycle 0 and
// reports when the last packet arrives. Each node's NIC interleaves its
// messages one packet per cycle.
ReplayResult replay(const Topology& t, const PathSet& ps, const SimConfig& cfg, const traffic::Workload& mapped);

// rate,sample,mean_latency,accepted_throughput rows plus a summary row.
void write_csv(const SimStats& s, std::ostream& out, char delimiter = ',', bool header = true);

}  // namespace jellyfish::simnet
