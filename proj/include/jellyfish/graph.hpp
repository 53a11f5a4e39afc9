// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace jellyfish {

using SwitchId = std::uint32_t;
using NodeId = std::uint32_t;
// Index of a directed switch-to-switch link u->v: the position of v in u's
// sorted neighbor list, offset by u's first slot.
using LinkId = std::uint32_t;

inline constexpr SwitchId kNoSwitch = std::numeric_limits<SwitchId>::max();

namespace topology {

// Undirected switch-level graph stored as compressed sorted adjacency.
// Construction does not validate simplicity or symmetry; Topology does.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::vector<std::vector<SwitchId>> adjacency);
  static Graph from_edges(std::size_t switches, std::span<const std::pair<SwitchId, SwitchId>> edges);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const SwitchId> neighbors(SwitchId s) const {
    return {targets_.data() + offsets_[s], offsets_[s + 1] - offsets_[s]};
  }
  std::size_t degree(SwitchId s) const { return offsets_[s + 1] - offsets_[s]; }
  std::size_t link_count() const { return targets_.size(); }
  std::size_t edge_count() const { return targets_.size() / 2; }

  LinkId first_link(SwitchId s) const { return static_cast<LinkId>(offsets_[s]); }
  SwitchId link_source(LinkId l) const { return sources_[l]; }
  SwitchId link_target(LinkId l) const { return targets_[l]; }
  std::optional<LinkId> link(SwitchId from, SwitchId to) const;
  bool adjacent(SwitchId a, SwitchId b) const { return link(a, b).has_value(); }

  std::vector<std::vector<SwitchId>> adjacency() const;

  // FNV-1a over the canonical adjacency text; binds path sets to graphs.
  std::uint64_t content_hash() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.offsets_ == b.offsets_ && a.targets_ == b.targets_;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<SwitchId> targets_;
  std::vector<SwitchId> sources_;
};

inline constexpr int kUnreachable = -1;

std::vector<int> bfs_distances(const Graph& g, SwitchId src);
bool is_connected(const Graph& g);

std::string hash_hex(std::uint64_t h);

}  // namespace topology
}  // namespace jellyfish
