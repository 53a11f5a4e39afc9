// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "jellyfish/graph.hpp"
#include "jellyfish/rng.hpp"

namespace jellyfish::pathsel {

using topology::Graph;

// Switch sequence from source to destination, loopless, at least one hop.
using Path = std::vector<SwitchId>;
using PathView = std::span<const SwitchId>;

inline std::size_t hop_count(PathView p) { return p.size() - 1; }

enum class Scheme { KSP, rKSP, EDKSP, rEDKSP };
enum class TieBreak { deterministic, randomized };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);  // throws ConfigError
inline TieBreak tie_break(Scheme s) {
  return s == Scheme::rKSP || s == Scheme::rEDKSP ? TieBreak::randomized : TieBreak::deterministic;
}
inline bool edge_disjoint(Scheme s) { return s == Scheme::EDKSP || s == Scheme::rEDKSP; }

// Links removed from the graph for one search; both directions of an
// undirected edge are removed together.
class EdgeMask {
 public:
  explicit EdgeMask(const Graph& g) : graph_(&g), removed_(g.link_count(), 0) {}
  void remove(SwitchId a, SwitchId b);
  void restore(SwitchId a, SwitchId b);
  void remove_path(PathView p);
  bool removed(LinkId l) const { return removed_[l] != 0; }

 private:
  const Graph* graph_;
  std::vector<std::uint8_t> removed_;
};

// Shortest (hop-count) path. Deterministic mode prefers the smallest switch
// identifier at every tie; randomized mode returns a path drawn uniformly
// from all shortest paths. Returns nullopt when dst is unreachable.
std::optional<Path> dijkstra(const Graph& g, SwitchId src, SwitchId dst, TieBreak mode, Rng& rng);

// Same, restricted to the graph minus `removed_nodes` and `mask` edges.
std::optional<Path> dijkstra(const Graph& g, SwitchId src, SwitchId dst, TieBreak mode, Rng& rng,
                             const EdgeMask* mask, std::span<const SwitchId> removed_nodes);

// Yen's loopless k-shortest paths. Candidate set persists across
// iterations; among equal-length candidates the lexicographically smallest
// (deterministic) or a uniformly random one (randomized) is promoted.
std::vector<Path> yen_ksp(const Graph& g, SwitchId src, SwitchId dst, std::size_t k, TieBreak mode,
                          Rng& rng);

// Remove-Find: repeatedly take a shortest path and delete its edges, up to
// k times or until src and dst disconnect.
std::vector<Path> rf_edge_disjoint(const Graph& g, SwitchId src, SwitchId dst, std::size_t k,
                                   TieBreak mode, Rng& rng);

using SwitchPair = std::pair<SwitchId, SwitchId>;

// Route sets for ordered switch pairs, stored flat. Pairs that were not
// computed (sampled builds) hold no paths.
class PathSet {
 public:
  PathSet() = default;
  PathSet(Scheme scheme, std::size_t k, std::uint64_t seed, std::size_t switches,
          std::uint64_t topo_hash);

  Scheme scheme() const { return scheme_; }
  std::size_t k() const { return k_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t topo_hash() const { return topo_hash_; }
  std::size_t switch_count() const { return switches_; }

  std::size_t path_count(SwitchId s, SwitchId d) const {
    auto p = pair_index(s, d);
    return pair_offsets_[p + 1] - pair_offsets_[p];
  }
  PathView path(SwitchId s, SwitchId d, std::size_t i) const {
    std::size_t id = pair_offsets_[pair_index(s, d)] + i;
    return {hops_.data() + path_offsets_[id], path_offsets_[id + 1] - path_offsets_[id]};
  }
  std::size_t max_path_hops() const { return max_hops_; }
  std::size_t computed_pairs() const { return computed_pairs_; }

  // Builders append pairs in increasing (s, d) row-major order, then seal;
  // skipped pairs end up empty.
  void append_pair(SwitchId s, SwitchId d, const std::vector<Path>& paths);
  void seal();

  friend bool operator==(const PathSet&, const PathSet&) = default;

 private:
  std::size_t pair_index(SwitchId s, SwitchId d) const { return std::size_t{s} * switches_ + d; }

  Scheme scheme_ = Scheme::KSP;
  std::size_t k_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t topo_hash_ = 0;
  std::size_t switches_ = 0;
  std::size_t max_hops_ = 0;
  std::size_t computed_pairs_ = 0;
  std::size_t filled_pairs_ = 0;
  std::vector<std::uint32_t> pair_offsets_;
  std::vector<std::uint32_t> path_offsets_;
  std::vector<SwitchId> hops_;
};

// Paths for one pair under a scheme; the per-pair stream is derived from
// (seed, src, dst) so the result is independent of evaluation order.
std::vector<Path> pair_paths(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                             SwitchId src, SwitchId dst);

// All ordered pairs.
PathSet build_pathset(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                      unsigned jobs = 1);
// Only the listed pairs (sampling for large topologies).
PathSet build_pathset(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                      std::span<const SwitchPair> pairs, unsigned jobs = 1);

std::vector<SwitchPair> sample_pairs(std::size_t switches, std::size_t count, std::uint64_t seed);

struct PathQualityReport {
  double avg_path_length = 0.0;
  double pct_pairs_fully_disjoint = 0.0;
  std::size_t max_edge_share = 0;
  std::size_t pairs = 0;
  std::size_t paths = 0;
};

// Max number of a pair's paths that share one undirected edge.
std::size_t max_edge_share(std::span<const PathView> paths);

PathQualityReport quality_report(const PathSet& ps);

void write(const PathSet& ps, std::ostream& out);
// Validates the header hash against `g` and every path against the graph.
PathSet read(std::istream& in, const Graph& g);
// Without a topology: no adjacency or hash checks, and the switch count
// is one more than the largest id in the file.
PathSet read(std::istream& in);
void save(const PathSet& ps, const std::filesystem::path& path);
PathSet load(const std::filesystem::path& path, const Graph& g);
PathSet load(const std::filesystem::path& path);

}  // namespace jellyfish::pathsel
