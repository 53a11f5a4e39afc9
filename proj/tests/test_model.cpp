// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "jellyfish/errors.hpp"
#include "jellyfish/model.hpp"
#include "oracles.hpp"

using namespace jellyfish;
using namespace jellyfish::model;
using pathsel::Scheme;

namespace {

using Edge = std::pair<SwitchId, SwitchId>;

// Directed sub-flow counts recomputed from the raw paths.
std::map<Edge, double> oracle_loads(const PathSet& ps, const std::vector<SwitchDemand>& demands) {
  std::map<Edge, double> load;
  for (const auto& d : demands) {
    if (d.src == d.dst) continue;
    for (std::size_t i = 0; i < ps.path_count(d.src, d.dst); ++i) {
      const auto p = ps.path(d.src, d.dst, i);
      for (std::size_t h = 0; h + 1 < p.size(); ++h) load[{p[h], p[h + 1]}] += 1;
    }
  }
  return load;
}

std::vector<SwitchDemand> random_switch_demands(std::size_t switches, std::size_t count, Rng& rng) {
  std::vector<SwitchDemand> out;
  while (out.size() < count) {
    const auto s = static_cast<SwitchId>(rng.uniform(switches));
    const auto d = static_cast<SwitchId>(rng.uniform(switches));
    if (s != d) out.push_back({s, d, 1.0});
  }
  return out;
}

}  // namespace

TEST(Model, SingleDemandSinglePath) {
  const Graph g = oracle::example_graph();
  const auto ps = pathsel::build_pathset(g, Scheme::KSP, 1, 0);
  const std::vector<SwitchDemand> demands{{0, 9, 1.0}};
  const auto loads = link_loads(g, ps, demands);
  double total = 0;
  for (double v : loads) total += v;
  EXPECT_EQ(total, 3.0);
  EXPECT_EQ(loads[*g.link(0, 1)], 1.0);
  EXPECT_EQ(loads[*g.link(1, 0)], 0.0);
  const auto r = flow_rates(g, ps, demands);
  EXPECT_EQ(r.flows[0].raw, 1.0);
  EXPECT_EQ(r.flows[0].clipped, 1.0);
}

TEST(Model, WorkedExampleSharedFirstLink) {
  const Graph g = oracle::example_graph();
  const std::vector<SwitchDemand> demands{{0, 9, 1.0}};

  const auto ksp = flow_rates(g, pathsel::build_pathset(g, Scheme::KSP, 3, 0), demands);
  EXPECT_EQ(ksp.link_load[*g.link(0, 1)], 3.0);
  EXPECT_DOUBLE_EQ(ksp.flows[0].raw, 1.0);

  const auto ed = flow_rates(g, pathsel::build_pathset(g, Scheme::EDKSP, 3, 0), demands);
  for (double v : ed.link_load) EXPECT_LE(v, 1.0);
  EXPECT_DOUBLE_EQ(ed.flows[0].raw, 3.0);
  EXPECT_DOUBLE_EQ(ed.flows[0].clipped, 1.0);
}

TEST(Model, LoadsAndRatesMatchOracle) {
  const auto t = topology::generate({36, 24, 16, 2});
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::rKSP, 4, 5);
  Rng rng(11);
  const auto demands = random_switch_demands(36, 200, rng);
  const auto r = flow_rates(t.graph(), ps, demands);
  const auto expected = oracle_loads(ps, demands);

  const Graph& g = t.graph();
  for (LinkId l = 0; l < g.link_count(); ++l) {
    auto it = expected.find({g.link_source(l), g.link_target(l)});
    EXPECT_EQ(r.link_load[l], it == expected.end() ? 0.0 : it->second);
  }

  // Every sub-flow at the inverse of its bottleneck never overfills a link.
  std::map<Edge, double> carried;
  double mean = 0;
  for (std::size_t f = 0; f < demands.size(); ++f) {
    const auto& d = demands[f];
    double raw = 0;
    for (std::size_t i = 0; i < ps.path_count(d.src, d.dst); ++i) {
      const auto p = ps.path(d.src, d.dst, i);
      double worst = 0;
      for (std::size_t h = 0; h + 1 < p.size(); ++h) worst = std::max(worst, expected.at({p[h], p[h + 1]}));
      raw += 1 / worst;
      for (std::size_t h = 0; h + 1 < p.size(); ++h) carried[{p[h], p[h + 1]}] += 1 / worst;
    }
    EXPECT_NEAR(r.flows[f].raw, raw, 1e-12);
    EXPECT_NEAR(r.flows[f].clipped, std::min(raw, 1.0), 1e-12);
    mean += std::min(raw, 1.0) / static_cast<double>(demands.size());
  }
  for (const auto& [edge, rate] : carried) EXPECT_LE(rate, 1.0 + 1e-9);
  EXPECT_NEAR(r.mean_clipped, mean, 1e-12);
  EXPECT_LE(r.min_clipped, r.mean_clipped);
  EXPECT_GE(r.max_clipped, r.mean_clipped);
}

TEST(Model, AddingDemandNeverRaisesOthers) {
  const auto t = topology::generate({36, 24, 16, 3});
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::rEDKSP, 8, 1);
  Rng rng(12);
  auto demands = random_switch_demands(36, 60, rng);
  const auto before = flow_rates(t.graph(), ps, demands);
  demands.push_back({4, 17, 1.0});
  const auto after = flow_rates(t.graph(), ps, demands);
  for (std::size_t f = 0; f < before.flows.size(); ++f) EXPECT_LE(after.flows[f].raw, before.flows[f].raw + 1e-12);
}

TEST(Model, WeightsDoNotScaleRates) {
  const auto t = topology::generate({36, 24, 16, 3});
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::KSP, 8, 1);
  Rng rng(13);
  auto demands = random_switch_demands(36, 40, rng);
  const auto a = flow_rates(t.graph(), ps, demands);
  for (auto& d : demands) d.weight *= 0.25;
  const auto b = flow_rates(t.graph(), ps, demands);
  EXPECT_EQ(a.link_load, b.link_load);
  EXPECT_EQ(a.mean_clipped, b.mean_clipped);
}

TEST(Model, SameSwitchDemand) {
  const auto t = topology::generate({36, 24, 16, 1});
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::KSP, 2, 1);
  const traffic::TrafficPattern p{"local", {{0, 1, 1.0}, {1, 0, 1.0}}, t.node_count()};
  const auto r = flow_rates(t, ps, p);
  ASSERT_EQ(r.flows.size(), 2u);
  EXPECT_EQ(r.flows[0].src, 0u);
  EXPECT_EQ(r.flows[0].dst, 1u);
  EXPECT_EQ(r.flows[0].clipped, 1.0);
  EXPECT_EQ(r.mean_clipped, 1.0);
  for (double v : r.link_load) EXPECT_EQ(v, 0.0);
}

TEST(Model, MissingPathAndForeignPathSet) {
  const auto t = topology::generate({36, 24, 16, 1});
  const std::vector<pathsel::SwitchPair> only{{0, 1}};
  const auto sparse = pathsel::build_pathset(t.graph(), Scheme::KSP, 2, 1, only);
  const std::vector<SwitchDemand> ok{{0, 1, 1.0}}, missing{{1, 0, 1.0}};
  EXPECT_NO_THROW(flow_rates(t.graph(), sparse, ok));
  EXPECT_THROW(flow_rates(t.graph(), sparse, missing), MissingPath);

  const auto other = topology::generate({36, 24, 16, 2});
  EXPECT_THROW(link_loads(other.graph(), sparse, ok), ConfigError);
}

TEST(Model, PermutationThroughputInRange) {
  const auto t = topology::generate({36, 24, 16, 1});
  const auto ps = pathsel::build_pathset(t.graph(), Scheme::rEDKSP, 8, 1);
  Rng rng(4);
  const auto r = flow_rates(t, ps, traffic::random_permutation(t.node_count(), rng));
  EXPECT_EQ(r.flows.size(), 288u);
  EXPECT_GT(r.mean_clipped, 0.5);
  EXPECT_LE(r.mean_clipped, 1.0);
  EXPECT_GE(r.mean_raw, r.mean_clipped);
}

TEST(Model, CsvOutput) {
  const Graph g = oracle::example_graph();
  const auto ps = pathsel::build_pathset(g, Scheme::KSP, 3, 0);
  const std::vector<SwitchDemand> demands{{0, 9, 1.0}};
  const auto r = flow_rates(g, ps, demands);
  std::ostringstream csv;
  write_csv(r, csv);
  EXPECT_EQ(csv.str(), "src,dst,raw_rate,clipped_rate\n0,9,1,1\nmean,,1,1\n");
  std::ostringstream loads;
  write_link_loads(g, r, loads, '\t');
  EXPECT_EQ(loads.str().substr(0, loads.str().find('\n')), "src_switch\tdst_switch\tload");
  EXPECT_NE(loads.str().find("0\t1\t3\n"), std::string::npos);
}
