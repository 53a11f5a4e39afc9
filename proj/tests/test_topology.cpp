// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jellyfish/errors.hpp"
#include "jellyfish/topology.hpp"
#include "oracles.hpp"

using namespace jellyfish;
using namespace jellyfish::topology;

namespace {

void expect_regular_connected(const Topology& t, std::uint32_t degree) {
  const Graph& g = t.graph();
  for (SwitchId s = 0; s < g.size(); ++s) {
    auto nb = g.neighbors(s);
    ASSERT_EQ(nb.size(), degree);
    EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
    EXPECT_EQ(std::adjacent_find(nb.begin(), nb.end()), nb.end());
    for (SwitchId v : nb) {
      EXPECT_NE(v, s);
      auto back = g.neighbors(v);
      EXPECT_TRUE(std::binary_search(back.begin(), back.end(), s));
    }
  }
  EXPECT_TRUE(oracle::connected(g));
}

double oracle_aspl(const Graph& g) {
  double sum = 0;
  for (SwitchId s = 0; s < g.size(); ++s) {
    const auto d = oracle::distances(g, s);
    sum += std::accumulate(d.begin(), d.end(), 0.0);
  }
  return sum / (static_cast<double>(g.size()) * (g.size() - 1));
}

std::string serialize(const Topology& t) {
  std::ostringstream out;
  write(t, out);
  return out.str();
}

}  // namespace

TEST(Topology, DeskScaleInstance) {
  const auto t = generate({36, 24, 16, 1});
  EXPECT_EQ(t.switch_count(), 36u);
  EXPECT_EQ(t.node_count(), 288u);
  expect_regular_connected(t, 16);
}

TEST(Topology, LargeInstance) {
  const auto t = generate({720, 24, 19, 1});
  EXPECT_EQ(t.switch_count(), 720u);
  EXPECT_EQ(t.node_count(), 3600u);
  expect_regular_connected(t, 19);
}

TEST(Topology, FourCycleIsForced) {
  const auto t = generate({4, 3, 2, 0});
  expect_regular_connected(t, 2);
  EXPECT_EQ(diameter(t.graph()), 2);
  for (SwitchId s = 0; s < 4; ++s) EXPECT_EQ(oracle::distances(t.graph(), s)[s], 0);
}

TEST(Topology, CompleteGraph) {
  const auto t = generate({5, 6, 4, 3});
  EXPECT_DOUBLE_EQ(avg_shortest_path_length(t.graph()), 1.0);
  EXPECT_EQ(diameter(t.graph()), 1);
}

TEST(Topology, InfeasibleSpecs) {
  EXPECT_THROW(generate({10, 4, 4, 1}), InfeasibleSpec);  // no node ports
  EXPECT_THROW(generate({10, 4, 0, 1}), InfeasibleSpec);
  EXPECT_THROW(generate({5, 6, 3, 1}), InfeasibleSpec);   // odd degree sum
  EXPECT_THROW(generate({4, 8, 4, 1}), InfeasibleSpec);   // y >= N
  EXPECT_THROW(generate({0, 4, 2, 1}), InfeasibleSpec);
}

TEST(Topology, DegenerateSpecExhaustsRetries) {
  // A perfect matching on more than two switches is never connected.
  EXPECT_THROW(generate({6, 2, 1, 1}), ConstructionFailure);
  EXPECT_NO_THROW(generate({2, 2, 1, 1}));
}

TEST(Topology, Deterministic) {
  const auto a = generate({36, 24, 16, 5});
  const auto b = generate({36, 24, 16, 5});
  EXPECT_EQ(a.graph(), b.graph());
  EXPECT_EQ(serialize(a), serialize(b));
  const auto c = generate({36, 24, 16, 6});
  EXPECT_NE(a.graph(), c.graph());
}

TEST(Topology, NodeAttachment) {
  const auto t = generate({36, 24, 16, 1});
  for (NodeId n = 0; n < t.node_count(); ++n) EXPECT_EQ(t.host_switch(n), n / 8);
  EXPECT_EQ(t.first_node(3), 24u);
}

TEST(Topology, AverageShortestPathMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = generate({36, 24, 16, seed});
    const double aspl = avg_shortest_path_length(t.graph());
    EXPECT_NEAR(aspl, oracle_aspl(t.graph()), 1e-12);
    EXPECT_NEAR(aspl, 1.54, 0.03);
  }
}

TEST(Topology, LargeAverageShortestPathOverSeeds) {
  double mean = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto t = generate({720, 24, 19, seed});
    const double aspl = avg_shortest_path_length(t.graph());
    EXPECT_NEAR(aspl, 2.57, 0.03);
    mean += aspl / 10;
    if (seed == 1) {
      int oracle_diameter = 0;
      for (SwitchId s = 0; s < t.switch_count(); ++s) {
        const auto d = oracle::distances(t.graph(), s);
        oracle_diameter = std::max(oracle_diameter, *std::max_element(d.begin(), d.end()));
      }
      EXPECT_EQ(diameter(t.graph()), oracle_diameter);
      EXPECT_GE(diameter(t.graph()), static_cast<int>(std::ceil(aspl)));
    }
  }
  EXPECT_NEAR(mean, 2.57, 0.05);
}

TEST(TopologyFile, RoundTrip) {
  const auto t = generate({36, 24, 16, 9});
  std::istringstream in(serialize(t));
  const auto back = read(in);
  EXPECT_EQ(back.graph(), t.graph());
  EXPECT_EQ(back.spec(), t.spec());
  EXPECT_EQ(serialize(back), serialize(t));
}

TEST(TopologyFile, HeaderAndComments) {
  std::istringstream in("# ring\njellyfish 4 3 2 0\n0: 1 3\n1: 0 2  # second\n2: 1 3\n3: 0 2\n");
  const auto t = read(in);
  EXPECT_EQ(t.switch_count(), 4u);
  EXPECT_EQ(t.node_count(), 4u);
}

TEST(TopologyFile, AsymmetricAdjacency) {
  std::istringstream in("jellyfish 4 3 2 0\n0: 1 3\n1: 0 2\n2: 1 3\n3: 1 2\n");
  try {
    read(in);
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(e.invariant(), "symmetry");
  }
}

TEST(TopologyFile, WrongDegree) {
  auto t = generate({36, 24, 16, 1});
  auto adj = t.graph().adjacency();
  // Drop one edge on both sides: two switches of degree 15.
  const SwitchId a = 0, b = adj[0].front();
  adj[a].erase(adj[a].begin());
  adj[b].erase(std::find(adj[b].begin(), adj[b].end(), a));
  std::ostringstream text;
  text << "jellyfish 36 24 16 1\n";
  for (SwitchId s = 0; s < 36; ++s) {
    text << s << ':';
    for (SwitchId v : adj[s]) text << ' ' << v;
    text << '\n';
  }
  std::istringstream in(text.str());
  try {
    read(in);
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(e.invariant(), "regularity");
  }
}

TEST(TopologyFile, ParseErrorsCarryLineNumbers) {
  std::istringstream bad_header("jellyfish four 3 2 0\n");
  EXPECT_THROW(read(bad_header), ParseError);
  std::istringstream bad_token("jellyfish 4 3 2 0\n0: 1 3\n1: 0 x\n2: 1 3\n3: 0 2\n");
  try {
    read(bad_token);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream missing("jellyfish 4 3 2 0\n0: 1 3\n1: 0 2\n2: 1 3\n");
  EXPECT_THROW(read(missing), ParseError);
}

TEST(TopologyFile, SelfLoopAndDisconnected) {
  std::istringstream loop("jellyfish 4 3 2 0\n0: 0 1\n1: 0 2\n2: 1 3\n3: 2 3\n");
  EXPECT_THROW(read(loop), InvariantViolation);
  // Two disjoint triangles: 2-regular but disconnected.
  std::istringstream split("jellyfish 6 3 2 0\n0: 1 2\n1: 0 2\n2: 0 1\n3: 4 5\n4: 3 5\n5: 3 4\n");
  try {
    read(split);
    FAIL() << "expected InvariantViolation";
  } catch (const InvariantViolation& e) {
    EXPECT_EQ(e.invariant(), "connectivity");
  }
}

TEST(Graph, LinksAndHash) {
  const std::vector<std::pair<SwitchId, SwitchId>> edges{{0, 1}, {1, 2}, {2, 0}};
  const Graph g = Graph::from_edges(3, edges);
  EXPECT_EQ(g.link_count(), 6u);
  EXPECT_EQ(g.edge_count(), 3u);
  for (LinkId l = 0; l < g.link_count(); ++l) EXPECT_EQ(g.link(g.link_source(l), g.link_target(l)), l);
  EXPECT_FALSE(g.link(0, 0).has_value());
  EXPECT_EQ(hash_hex(g.content_hash()).size(), 16u);
  const std::vector<std::pair<SwitchId, SwitchId>> path_edges{{0, 1}, {1, 2}};
  EXPECT_NE(Graph::from_edges(3, path_edges).content_hash(), g.content_hash());
}
