// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Each criterion prints one line:
//   CRITERION <n> PASS|FAIL <details>
// Usage: acceptance [--criterion N]   (all criteria when omitted)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jellyfish/model.hpp"
#include "jellyfish/pathsel.hpp"
#include "jellyfish/rng.hpp"
#include "jellyfish/simnet.hpp"
#include "jellyfish/topology.hpp"
#include "jellyfish/traffic.hpp"

#include "oracles.hpp"

namespace {

using namespace jellyfish;
using pathsel::Scheme;
using simnet::Mechanism;
using topology::Graph;
using jellyfish::SwitchId;
using topology::TopoSpec;
using topology::Topology;

constexpr Scheme kSchemes[] = {Scheme::KSP, Scheme::rKSP, Scheme::EDKSP, Scheme::rEDKSP};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Topology desk_topology(std::uint64_t seed) { return topology::generate({36, 24, 16, seed}); }

// 1. Average length of the 8 selected paths.
void criterion1(Outcome& o) {
  std::map<Scheme, double> small;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = desk_topology(seed);
    for (Scheme s : kSchemes) {
      const auto ps = pathsel::build_pathset(t.graph(), s, 8, seed);
      small[s] += pathsel::quality_report(ps).avg_path_length / 10.0;
    }
  }
  o.detail << "RRG(36,24,16) x10:";
  for (Scheme s : kSchemes) {
    o.detail << ' ' << pathsel::to_string(s) << '=' << fmt(small[s], 3);
    o.require(std::abs(small[s] - 2.06) <= 0.05, std::string(pathsel::to_string(s)) + " small within 2.06+-0.05");
  }

  const auto big = topology::generate({720, 24, 19, 1});
  const auto pairs = pathsel::sample_pairs(big.switch_count(), 5000, 720);
  o.detail << "; RRG(720,24,19) 5000 pairs:";
  for (Scheme s : kSchemes) {
    const auto ps = pathsel::build_pathset(big.graph(), s, 8, 1, pairs);
    const double avg = pathsel::quality_report(ps).avg_path_length;
    const bool disjoint = pathsel::edge_disjoint(s);
    const double target = disjoint ? 3.156 : 3.017;
    const double tol = disjoint ? 0.06 : 0.05;
    o.detail << ' ' << pathsel::to_string(s) << '=' << fmt(avg, 3);
    o.require(std::abs(avg - target) <= tol, std::string(pathsel::to_string(s)) + " large within tolerance");
  }
}

// 2. Edge-disjoint schemes are exactly disjoint; KSP shares edges heavily.
void criterion2(Outcome& o) {
  double ksp_pct_sum = 0.0;
  std::size_t ksp_share_min = SIZE_MAX;
  bool ksp_each_in_range = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = desk_topology(seed);
    for (Scheme s : {Scheme::EDKSP, Scheme::rEDKSP}) {
      const auto q = pathsel::quality_report(pathsel::build_pathset(t.graph(), s, 8, seed));
      o.require(q.pct_pairs_fully_disjoint == 100.0 && q.max_edge_share == 1,
                std::string(pathsel::to_string(s)) + " disjoint on RRG(36,24,16) seed " + std::to_string(seed));
    }
    const auto q = pathsel::quality_report(pathsel::build_pathset(t.graph(), Scheme::KSP, 8, seed));
    ksp_pct_sum += q.pct_pairs_fully_disjoint;
    ksp_share_min = std::min(ksp_share_min, q.max_edge_share);
    ksp_each_in_range = ksp_each_in_range && q.pct_pairs_fully_disjoint >= 45.0 && q.pct_pairs_fully_disjoint <= 70.0;
    o.require(q.pct_pairs_fully_disjoint >= 45.0 && q.pct_pairs_fully_disjoint <= 70.0,
              "KSP pct in [45,70] on seed " + std::to_string(seed));
    o.require(q.max_edge_share >= 5, "KSP max_edge_share >= 5 on seed " + std::to_string(seed));
  }
  const auto big = topology::generate({720, 24, 19, 1});
  const auto pairs = pathsel::sample_pairs(big.switch_count(), 5000, 720);
  for (Scheme s : {Scheme::EDKSP, Scheme::rEDKSP}) {
    const auto q = pathsel::quality_report(pathsel::build_pathset(big.graph(), s, 8, 1, pairs));
    o.require(q.pct_pairs_fully_disjoint == 100.0 && q.max_edge_share == 1,
              std::string(pathsel::to_string(s)) + " disjoint on RRG(720,24,19)");
  }
  o.detail << "EDKSP/rEDKSP 100%/1 on 11 topologies; KSP(8) mean pct=" << fmt(ksp_pct_sum / 10.0, 2)
           << " min max_edge_share=" << ksp_share_min;
}

// 3. Path selection against exhaustive oracles on small random graphs.
void criterion3(Outcome& o) {
  Rng rng(3);
  std::size_t graphs = 0, pairs = 0, yen_mismatch = 0, rf_excess = 0, rf_invalid = 0;
  while (graphs < 200) {
    const std::size_t n = 2 + rng.uniform(11);
    const double p = 0.2 + 0.4 * rng.uniform01();
    std::vector<std::pair<SwitchId, SwitchId>> edges;
    for (SwitchId a = 0; a < n; ++a)
      for (SwitchId b = a + 1; b < n; ++b)
        if (rng.uniform01() < p) edges.emplace_back(a, b);
    const Graph g = Graph::from_edges(n, edges);
    if (!oracle::connected(g)) continue;
    ++graphs;
    const std::size_t k = 1 + rng.uniform(8);
    for (SwitchId s = 0; s < n; ++s) {
      for (SwitchId d = 0; d < n; ++d) {
        if (s == d) continue;
        ++pairs;
        const auto expected = oracle::k_shortest_lengths(g, s, d, k);
        for (Scheme scheme : kSchemes) {
          const auto got = pathsel::pair_paths(g, scheme, k, graphs, s, d);
          if (!pathsel::edge_disjoint(scheme)) {
            std::vector<std::size_t> lengths;
            for (const auto& path : got) lengths.push_back(path.size() - 1);
            if (lengths != expected || !oracle::valid_distinct_paths(g, got, s, d)) ++yen_mismatch;
          } else {
            if (got.size() > oracle::max_flow(g, s, d)) ++rf_excess;
            if (!oracle::valid_distinct_paths(g, got, s, d) || !oracle::edge_disjoint(got)) ++rf_invalid;
          }
        }
      }
    }
  }
  o.detail << graphs << " graphs, " << pairs << " pairs: yen mismatches=" << yen_mismatch
           << " rf over max-flow=" << rf_excess << " rf invalid=" << rf_invalid;
  o.require(yen_mismatch == 0, "yen multisets match enumeration");
  o.require(rf_excess == 0, "rf within max-flow");
  o.require(rf_invalid == 0, "rf paths valid and disjoint");
}

// 4. Hand-encoded ten-switch example.
void criterion4(Outcome& o) {
  const Graph g = oracle::example_graph();
  const std::vector<model::SwitchDemand> demand{{0, 9, 1.0}};
  double raw[2];
  int i = 0;
  for (Scheme s : {Scheme::KSP, Scheme::EDKSP}) {
    pathsel::PathSet ps(s, 3, 0, g.size(), g.content_hash());
    ps.append_pair(0, 9, pathsel::pair_paths(g, s, 3, 0, 0, 9));
    ps.seal();
    raw[i++] = model::flow_rates(g, ps, demand).flows.at(0).raw;
  }
  o.detail << "KSP(3) raw=" << raw[0] << " EDKSP(3) raw=" << raw[1];
  o.require(raw[0] == 1.0, "KSP raw rate exactly 1");
  o.require(raw[1] == 3.0, "EDKSP raw rate exactly 3");
}

// 5. Model throughput ordering over topologies and permutations.
void criterion5(Outcome& o) {
  std::map<Scheme, double> mean;
  const Scheme schemes[] = {Scheme::KSP, Scheme::rKSP, Scheme::rEDKSP};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = desk_topology(seed);
    std::vector<pathsel::PathSet> sets;
    for (Scheme s : schemes) sets.push_back(pathsel::build_pathset(t.graph(), s, 8, seed));
    for (std::uint64_t p = 0; p < 50; ++p) {
      Rng rng(derive_seed(seed, {p}));
      const auto pattern = traffic::random_permutation(t.node_count(), rng);
      for (std::size_t i = 0; i < 3; ++i) mean[schemes[i]] += model::flow_rates(t, sets[i], pattern).mean_clipped / 500.0;
    }
  }
  o.detail << "KSP=" << fmt(mean[Scheme::KSP]) << " rKSP=" << fmt(mean[Scheme::rKSP])
           << " rEDKSP=" << fmt(mean[Scheme::rEDKSP]);
  o.require(mean[Scheme::rEDKSP] > mean[Scheme::rKSP], "rEDKSP > rKSP");
  o.require(mean[Scheme::rKSP] > mean[Scheme::KSP], "rKSP > KSP");
  o.require(mean[Scheme::rEDKSP] - mean[Scheme::KSP] >= 0.03, "rEDKSP - KSP >= 0.03");
}

bool same_stats(const simnet::SimStats& a, const simnet::SimStats& b) {
  if (a.delivered != b.delivered || a.injected != b.injected || a.cycles != b.cycles ||
      a.samples.size() != b.samples.size())
    return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const bool both_nan = std::isnan(a.samples[i].mean_latency) && std::isnan(b.samples[i].mean_latency);
    if (!both_nan && a.samples[i].mean_latency != b.samples[i].mean_latency) return false;
    if (a.samples[i].delivered != b.samples[i].delivered) return false;
  }
  return a.link_utilization == b.link_utilization;
}

// 6. Simulator invariants.
void criterion6(Outcome& o) {
  const auto t = desk_topology(1);
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::rEDKSP, 8, 1);
  Rng prng(6);
  const auto perm = simnet::Injection::from_pattern(traffic::random_permutation(t.node_count(), prng));
  const auto uniform = simnet::Injection::uniform(t.node_count());

  // Audited runs across mechanisms and loads.
  std::uint64_t violations = 0, over_buffer = 0, over_vc = 0, below = 0, deadlocks = 0;
  for (Mechanism m : {Mechanism::SP, Mechanism::RANDOM, Mechanism::ROUND_ROBIN, Mechanism::UGAL_VANILLA,
                      Mechanism::KSP_UGAL, Mechanism::KSP_ADAPTIVE}) {
    for (double rate : {0.2, 0.6, 1.0}) {
      simnet::SimConfig cfg;
      cfg.routing = m;
      cfg.injection_rate = rate;
      cfg.warmup_cycles = 200;
      cfg.sample_cycles = 200;
      cfg.samples = 4;
      cfg.check_invariants = true;
      cfg.rng_seed = 11;
      const auto s = simnet::run(t, ps, cfg, rate < 0.5 ? uniform : perm);
      violations += s.conservation_violations + s.credit_violations + s.buffer_violations + s.vc_violations;
      over_buffer += s.max_vc_occupancy > static_cast<std::size_t>(cfg.buffer_per_vc);
      over_vc += s.max_vc_index >= s.vc_count;
      below += s.below_zero_load;
      deadlocks += s.deadlock;
    }
  }
  o.detail << "audit violations=" << violations;
  o.require(violations == 0 && over_buffer == 0 && over_vc == 0, "conservation, buffer and VC bounds");
  o.require(below == 0, "no packet faster than zero-load latency");
  o.require(deadlocks == 0, "no deadlock in audited runs");

  // Soak at full load on a small topology.
  {
    const auto small = topology::generate({8, 4, 3, 2});
    const auto sps = pathsel::build_pathset(small.graph(), Scheme::rEDKSP, 4, 2);
    std::uint64_t soak_deadlocks = 0, empty_samples = 0, soak_violations = 0, max_stall = 0;
    for (Mechanism m : {Mechanism::UGAL_VANILLA, Mechanism::KSP_ADAPTIVE}) {
      simnet::SimConfig cfg;
      cfg.routing = m;
      cfg.injection_rate = 1.0;
      cfg.warmup_cycles = 0;
      cfg.sample_cycles = 100'000;
      cfg.samples = 10;
      cfg.check_invariants = true;
      const auto s = simnet::run(small, sps, cfg, simnet::Injection::uniform(small.node_count()));
      soak_deadlocks += s.deadlock;
      soak_violations += s.conservation_violations + s.credit_violations + s.buffer_violations + s.vc_violations;
      for (const auto& sample : s.samples) empty_samples += sample.delivered == 0;
      empty_samples += s.cycles != 1'000'000;
      max_stall = std::max(max_stall, s.max_stall_cycles);
    }
    o.detail << "; soak 1e6 cycles: deadlocks=" << soak_deadlocks << " max_stall=" << max_stall;
    o.require(soak_deadlocks == 0 && empty_samples == 0 && soak_violations == 0 && max_stall == 0,
              "1e6-cycle soak at rate 1.0 with no stalled cycle");
  }

  // Zero-load latency on isolated single flows of every distance.
  {
    std::uint64_t checked = 0, inexact = 0;
    const int diameter = topology::diameter(t.graph());
    std::vector<bool> seen(diameter + 1, false);
    for (SwitchId d = 0; d < t.switch_count(); ++d) {
      const auto dist = topology::bfs_distances(t.graph(), 0)[d];
      if (seen[dist]) continue;
      seen[dist] = true;
      traffic::TrafficPattern single{"single", {{0, t.first_node(d) + (d == 0 ? 1u : 0u), 1.0}}, t.node_count()};
      simnet::SimConfig cfg;
      cfg.routing = Mechanism::SP;
      cfg.injection_rate = 0.05;
      cfg.warmup_cycles = 0;
      cfg.sample_cycles = 1000;
      cfg.samples = 2;
      const auto s = simnet::run(t, ps, cfg, simnet::Injection::from_pattern(single));
      checked += s.delivered;
      inexact += s.delivered - s.zero_load_exact;
      const double expected = static_cast<double>(simnet::zero_load_latency(dist, cfg));
      if (std::abs(s.mean_latency - expected) > 1e-12) ++inexact;
    }
    o.detail << "; zero-load packets=" << checked << " inexact=" << inexact;
    o.require(checked > 0 && inexact == 0, "zero-load latency equals closed form");
  }

  // Round-robin spreads each pair's packets evenly over its paths.
  {
    simnet::SimConfig cfg;
    cfg.routing = Mechanism::ROUND_ROBIN;
    cfg.injection_rate = 0.3;
    cfg.record_path_usage = true;
    cfg.samples = 4;
    const auto s = simnet::run(t, ps, cfg, uniform);
    std::uint64_t unfair = 0, pairs = 0;
    for (const auto& counts : s.path_usage) {
      if (counts.empty()) continue;
      ++pairs;
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
      const std::uint64_t floor = total / counts.size();
      if (*hi - *lo > 1 || *lo < floor) ++unfair;
    }
    o.detail << "; round-robin pairs=" << pairs << " unfair=" << unfair;
    o.require(pairs > 0 && unfair == 0, "round-robin counts differ by at most 1");
  }

  // Determinism.
  {
    simnet::SimConfig cfg;
    cfg.routing = Mechanism::KSP_ADAPTIVE;
    cfg.injection_rate = 0.5;
    cfg.samples = 4;
    cfg.rng_seed = 99;
    const auto a = simnet::run(t, ps, cfg, uniform);
    const auto b = simnet::run(t, ps, cfg, uniform);
    const auto w = traffic::apply_mapping(
        traffic::stencil(traffic::StencilKind::NN2D, std::vector<std::size_t>{16, 18}, 65536), {}, t.node_count());
    cfg.routing = Mechanism::RANDOM;
    const auto ra = simnet::replay(t, ps, cfg, w);
    const auto rb = simnet::replay(t, ps, cfg, w);
    const bool same = same_stats(a, b) && ra.completion_cycles == rb.completion_cycles;
    o.detail << "; deterministic=" << (same ? "yes" : "no");
    o.require(same, "identical results under a fixed seed");
  }
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// 7. Saturation throughput ordering of the routing mechanisms.
void criterion7(Outcome& o) {
  const auto rates = simnet::rate_grid(0.05, 1.0, 0.05);
  const Mechanism order[] = {Mechanism::KSP_ADAPTIVE, Mechanism::KSP_UGAL, Mechanism::UGAL_VANILLA,
                             Mechanism::RANDOM, Mechanism::SP};
  std::map<Mechanism, std::vector<double>> sat;
  std::vector<double> ksp_adaptive;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto t = desk_topology(seed);
    const auto red = pathsel::build_pathset(t.graph(), Scheme::rEDKSP, 8, seed);
    const auto ksp = pathsel::build_pathset(t.graph(), Scheme::KSP, 8, seed);
    for (std::uint64_t p = 0; p < 5; ++p) {
      Rng rng(derive_seed(seed, {p, 7}));
      const auto inj = simnet::Injection::from_pattern(traffic::random_shift(t.node_count(), rng));
      simnet::SimConfig cfg;
      cfg.rng_seed = derive_seed(seed, {p});
      for (Mechanism m : order) {
        cfg.routing = m;
        sat[m].push_back(simnet::saturation_sweep(t, red, cfg, inj, rates).saturation_throughput);
      }
      cfg.routing = Mechanism::KSP_ADAPTIVE;
      ksp_adaptive.push_back(simnet::saturation_sweep(t, ksp, cfg, inj, rates).saturation_throughput);
    }
  }
  o.detail << "rEDKSP(8) random shift:";
  for (Mechanism m : order) o.detail << ' ' << simnet::to_string(m) << '=' << fmt(mean_of(sat[m]), 3);
  for (std::size_t i = 0; i + 1 < std::size(order); ++i)
    o.require(mean_of(sat[order[i]]) >= mean_of(sat[order[i + 1]]),
              std::string(simnet::to_string(order[i])) + " >= " + std::string(simnet::to_string(order[i + 1])));
  const double red = mean_of(sat[Mechanism::KSP_ADAPTIVE]), base = mean_of(ksp_adaptive);
  o.detail << "; KSP(8) KSP_ADAPTIVE=" << fmt(base, 3);
  o.require(red >= 1.05 * base, "rEDKSP >= 1.05 x KSP under KSP_ADAPTIVE");
}

// 8. Stencil replay completion time.
void criterion8(Outcome& o) {
  const auto w = traffic::stencil(traffic::StencilKind::NN2D, std::vector<std::size_t>{16, 18}, 64 * 1024);
  o.detail << "2DNN 16x18 64KB RANDOM:";
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto t = desk_topology(seed);
    const auto mapped = traffic::apply_mapping(w, {traffic::MappingKind::linear, 0}, t.node_count());
    simnet::SimConfig cfg;
    cfg.routing = Mechanism::RANDOM;
    cfg.rng_seed = seed;
    const auto red = simnet::replay(t, pathsel::build_pathset(t.graph(), Scheme::rEDKSP, 8, seed), cfg, mapped);
    const auto ksp = simnet::replay(t, pathsel::build_pathset(t.graph(), Scheme::KSP, 8, seed), cfg, mapped);
    o.detail << " seed" << seed << " rEDKSP=" << red.completion_cycles << " KSP=" << ksp.completion_cycles;
    o.require(!red.deadlock && !ksp.deadlock, "replay completes");
    o.require(red.completion_cycles < ksp.completion_cycles, "rEDKSP faster on seed " + std::to_string(seed));
  }
}

// 9. Latency-load curve shape under uniform traffic.
void criterion9(Outcome& o) {
  const auto t = desk_topology(1);
  const auto inj = simnet::Injection::uniform(t.node_count());
  const auto rates = simnet::rate_grid(0.05, 1.0, 0.05);
  std::vector<double> low;
  for (Scheme s : kSchemes) {
    const auto ps = pathsel::build_pathset(t.graph(), s, 8, 1);
    simnet::SimConfig cfg;
    cfg.routing = Mechanism::KSP_ADAPTIVE;
    const auto sweep = simnet::saturation_sweep(t, ps, cfg, inj, rates);
    std::size_t drops = 0;
    for (std::size_t i = 1; i < sweep.curve.size(); ++i) {
      if (sweep.curve[i].saturated) break;
      if (sweep.curve[i].mean_latency < 0.95 * sweep.curve[i - 1].mean_latency) ++drops;
    }
    low.push_back(sweep.curve.front().mean_latency);
    o.detail << pathsel::to_string(s) << ": L(0.05)=" << fmt(low.back(), 2) << " sat=" << sweep.saturation_throughput
             << ' ';
    o.require(drops == 0, std::string(pathsel::to_string(s)) + " latency nondecreasing");
  }
  const auto [lo, hi] = std::minmax_element(low.begin(), low.end());
  o.require(*hi - *lo <= 2.0, "low-load latencies within 2 cycles");
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--criterion") only = std::atoi(argv[i + 1]);
  const std::vector<std::function<void(Outcome&)>> criteria{criterion1, criterion2, criterion3,
                                                             criterion4, criterion5, criterion6,
                                                             criterion7, criterion8, criterion9};
  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i](o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("CRITERION %zu %s %s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    all_pass = all_pass && o.pass;
  }
  return all_pass ? 0 : 1;
}
