// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/graph.hpp"

#include <algorithm>
#include <cstdio>

namespace jellyfish::topology {

Graph::Graph(std::vector<std::vector<SwitchId>> adjacency) {
  offsets_.reserve(adjacency.size() + 1);
  offsets_.push_back(0);
  for (std::size_t s = 0; s < adjacency.size(); ++s) {
    auto& list = adjacency[s];
    std::sort(list.begin(), list.end());
    targets_.insert(targets_.end(), list.begin(), list.end());
    sources_.insert(sources_.end(), list.size(), static_cast<SwitchId>(s));
    offsets_.push_back(targets_.size());
  }
}

Graph Graph::from_edges(std::size_t switches,
                        std::span<const std::pair<SwitchId, SwitchId>> edges) {
  std::vector<std::vector<SwitchId>> adjacency(switches);
  for (auto [a, b] : edges) {
    adjacency[a].push_back(b);
    adjacency[b].push_back(a);
  }
  return Graph(std::move(adjacency));
}

std::optional<LinkId> Graph::link(SwitchId from, SwitchId to) const {
  auto list = neighbors(from);
  auto it = std::lower_bound(list.begin(), list.end(), to);
  if (it == list.end() || *it != to) return std::nullopt;
  return static_cast<LinkId>(offsets_[from] + (it - list.begin()));
}

std::vector<std::vector<SwitchId>> Graph::adjacency() const {
  std::vector<std::vector<SwitchId>> out(size());
  for (SwitchId s = 0; s < size(); ++s) {
    auto list = neighbors(s);
    out[s].assign(list.begin(), list.end());
  }
  return out;
}

std::uint64_t Graph::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  feed(size());
  for (SwitchId s = 0; s < size(); ++s) {
    feed(degree(s));
    for (SwitchId v : neighbors(s)) feed(v);
  }
  return h;
}

std::vector<int> bfs_distances(const Graph& g, SwitchId src) {
  std::vector<int> dist(g.size(), kUnreachable);
  std::vector<SwitchId> queue;
  queue.reserve(g.size());
  dist[src] = 0;
  queue.push_back(src);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    SwitchId u = queue[head];
    for (SwitchId v : g.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

bool is_connected(const Graph& g) {
  if (g.size() == 0) return true;
  auto dist = bfs_distances(g, 0);
  return std::none_of(dist.begin(), dist.end(), [](int d) { return d == kUnreachable; });
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace jellyfish::topology
