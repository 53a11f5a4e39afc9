// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/pathsel.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "jellyfish/errors.hpp"
#include "jellyfish/parallel.hpp"

namespace jellyfish::pathsel {

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::KSP: return "KSP";
    case Scheme::rKSP: return "rKSP";
    case Scheme::EDKSP: return "EDKSP";
    case Scheme::rEDKSP: return "rEDKSP";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::KSP, Scheme::rKSP, Scheme::EDKSP, Scheme::rEDKSP})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown path scheme '" + std::string(name) + "'");
}

void EdgeMask::remove(SwitchId a, SwitchId b) {
  if (auto l = graph_->link(a, b)) removed_[*l] = 1;
  if (auto l = graph_->link(b, a)) removed_[*l] = 1;
}

void EdgeMask::restore(SwitchId a, SwitchId b) {
  if (auto l = graph_->link(a, b)) removed_[*l] = 0;
  if (auto l = graph_->link(b, a)) removed_[*l] = 0;
}

void EdgeMask::remove_path(PathView p) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i) remove(p[i], p[i + 1]);
}

namespace {

// Per-thread scratch for repeated searches; stamps avoid clearing arrays.
struct SearchSpace {
  std::vector<std::uint32_t> seen;
  std::vector<std::uint32_t> blocked;
  std::vector<int> dist;
  std::vector<double> sigma;
  std::vector<SwitchId> queue;
  std::uint32_t epoch = 0;

  void prepare(std::size_t n) {
    if (seen.size() != n || epoch == std::numeric_limits<std::uint32_t>::max()) {
      seen.assign(n, 0);
      blocked.assign(n, 0);
      dist.assign(n, 0);
      sigma.assign(n, 0.0);
      epoch = 0;
    }
    ++epoch;
    queue.clear();
  }
};

thread_local SearchSpace space;

}  // namespace

std::optional<Path> dijkstra(const Graph& g, SwitchId src, SwitchId dst, TieBreak mode, Rng& rng) {
  return dijkstra(g, src, dst, mode, rng, nullptr, {});
}

// Unit link costs, so the search is a breadth-first sweep that stops as
// soon as dst is labelled. Every switch one level closer to src than dst is
// final by then, which is all the backward walk needs. sigma counts the
// shortest paths reaching each switch so the randomized walk is uniform over
// whole paths.
std::optional<Path> dijkstra(const Graph& g, SwitchId src, SwitchId dst, TieBreak mode, Rng& rng,
                             const EdgeMask* mask, std::span<const SwitchId> removed_nodes) {
  if (src == dst) throw Error("shortest path requested from a switch to itself");
  auto& ws = space;
  ws.prepare(g.size());
  const auto epoch = ws.epoch;
  for (SwitchId v : removed_nodes) ws.blocked[v] = epoch;
  if (ws.blocked[src] == epoch || ws.blocked[dst] == epoch) return std::nullopt;

  ws.seen[src] = epoch;
  ws.dist[src] = 0;
  ws.sigma[src] = 1.0;
  ws.queue.push_back(src);
  bool found = false;
  for (std::size_t head = 0; head < ws.queue.size() && !found; ++head) {
    SwitchId u = ws.queue[head];
    const LinkId end = g.first_link(u) + static_cast<LinkId>(g.degree(u));
    for (LinkId l = g.first_link(u); l < end; ++l) {
      if (mask && mask->removed(l)) continue;
      SwitchId v = g.link_target(l);
      if (ws.blocked[v] == epoch) continue;
      if (ws.seen[v] != epoch) {
        ws.seen[v] = epoch;
        ws.dist[v] = ws.dist[u] + 1;
        ws.sigma[v] = ws.sigma[u];
        ws.queue.push_back(v);
        if (v == dst) {
          found = true;
          break;
        }
      } else if (ws.dist[v] == ws.dist[u] + 1) {
        ws.sigma[v] += ws.sigma[u];
      }
    }
  }
  if (!found) return std::nullopt;

  Path path{dst};
  SwitchId v = dst;
  while (v != src) {
    SwitchId chosen = kNoSwitch;
    double total = 0.0;
    const LinkId end = g.first_link(v) + static_cast<LinkId>(g.degree(v));
    for (LinkId l = g.first_link(v); l < end; ++l) {
      if (mask && mask->removed(l)) continue;
      SwitchId u = g.link_target(l);
      if (ws.seen[u] != epoch || ws.blocked[u] == epoch || ws.dist[u] != ws.dist[v] - 1) continue;
      if (mode == TieBreak::deterministic) {
        chosen = u;
        break;
      }
      total += ws.sigma[u];
      if (rng.uniform01() * total < ws.sigma[u]) chosen = u;
    }
    path.push_back(chosen);
    v = chosen;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Path> yen_ksp(const Graph& g, SwitchId src, SwitchId dst, std::size_t k, TieBreak mode,
                          Rng& rng) {
  if (k == 0) throw ConfigError("k must be positive");
  std::vector<Path> accepted;
  auto first = dijkstra(g, src, dst, mode, rng);
  if (!first) return accepted;
  accepted.push_back(std::move(*first));

  std::vector<Path> candidates;
  std::set<Path> known{accepted.front()};
  EdgeMask mask(g);
  std::vector<std::pair<SwitchId, SwitchId>> cut;

  while (accepted.size() < k) {
    const Path prev = accepted.back();
    for (std::size_t j = 0; j + 1 < prev.size(); ++j) {
      const SwitchId spur = prev[j];
      cut.clear();
      for (const Path& p : accepted) {
        if (p.size() > j + 1 && std::equal(p.begin(), p.begin() + j + 1, prev.begin())) {
          mask.remove(p[j], p[j + 1]);
          cut.emplace_back(p[j], p[j + 1]);
        }
      }
      auto spur_path = dijkstra(g, spur, dst, mode, rng, &mask,
                                std::span<const SwitchId>(prev.data(), j));
      for (auto [a, b] : cut) mask.restore(a, b);
      if (!spur_path) continue;
      Path total(prev.begin(), prev.begin() + j);
      total.insert(total.end(), spur_path->begin(), spur_path->end());
      if (known.insert(total).second) candidates.push_back(std::move(total));
    }
    if (candidates.empty()) break;

    std::size_t shortest = candidates.front().size();
    for (const Path& c : candidates) shortest = std::min(shortest, c.size());
    std::size_t pick = candidates.size();
    if (mode == TieBreak::deterministic) {
      for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].size() == shortest && (pick == candidates.size() || candidates[i] < candidates[pick]))
          pick = i;
    } else {
      std::size_t ties = 0;
      for (std::size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i].size() == shortest && rng.uniform(++ties) == 0) pick = i;
    }
    accepted.push_back(std::move(candidates[pick]));
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return accepted;
}

std::vector<Path> rf_edge_disjoint(const Graph& g, SwitchId src, SwitchId dst, std::size_t k,
                                   TieBreak mode, Rng& rng) {
  if (k == 0) throw ConfigError("k must be positive");
  std::vector<Path> paths;
  EdgeMask mask(g);
  while (paths.size() < k) {
    auto p = dijkstra(g, src, dst, mode, rng, &mask, {});
    if (!p) break;
    mask.remove_path(*p);
    paths.push_back(std::move(*p));
  }
  return paths;
}

PathSet::PathSet(Scheme scheme, std::size_t k, std::uint64_t seed, std::size_t switches,
                 std::uint64_t topo_hash)
    : scheme_(scheme),
      k_(k),
      seed_(seed),
      topo_hash_(topo_hash),
      switches_(switches),
      pair_offsets_(switches * switches + 1, 0),
      path_offsets_{0} {}

void PathSet::append_pair(SwitchId s, SwitchId d, const std::vector<Path>& paths) {
  const std::size_t idx = pair_index(s, d);
  if (idx < filled_pairs_) throw Error("path set pairs must be appended in increasing order");
  for (; filled_pairs_ < idx; ++filled_pairs_) pair_offsets_[filled_pairs_ + 1] = pair_offsets_[filled_pairs_];
  for (const Path& p : paths) {
    hops_.insert(hops_.end(), p.begin(), p.end());
    path_offsets_.push_back(static_cast<std::uint32_t>(hops_.size()));
    max_hops_ = std::max(max_hops_, p.size() - 1);
  }
  pair_offsets_[idx + 1] = pair_offsets_[idx] + static_cast<std::uint32_t>(paths.size());
  filled_pairs_ = idx + 1;
  if (!paths.empty()) ++computed_pairs_;
}

void PathSet::seal() {
  const std::size_t total = switches_ * switches_;
  for (; filled_pairs_ < total; ++filled_pairs_) pair_offsets_[filled_pairs_ + 1] = pair_offsets_[filled_pairs_];
}

std::vector<Path> pair_paths(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                             SwitchId src, SwitchId dst) {
  Rng rng(derive_seed(seed, {src, dst}));
  if (edge_disjoint(scheme)) return rf_edge_disjoint(g, src, dst, k, tie_break(scheme), rng);
  return yen_ksp(g, src, dst, k, tie_break(scheme), rng);
}

PathSet build_pathset(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                      std::span<const SwitchPair> pairs, unsigned jobs) {
  std::vector<SwitchPair> ordered(pairs.begin(), pairs.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());
  std::vector<std::vector<Path>> results(ordered.size());
  parallel_for(ordered.size(), jobs, [&](std::size_t i) {
    auto [s, d] = ordered[i];
    results[i] = pair_paths(g, scheme, k, seed, s, d);
  });
  PathSet ps(scheme, k, seed, g.size(), g.content_hash());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    ps.append_pair(ordered[i].first, ordered[i].second, results[i]);
    results[i] = {};
  }
  ps.seal();
  return ps;
}

PathSet build_pathset(const Graph& g, Scheme scheme, std::size_t k, std::uint64_t seed,
                      unsigned jobs) {
  std::vector<SwitchPair> pairs;
  pairs.reserve(g.size() * (g.size() - 1));
  for (SwitchId s = 0; s < g.size(); ++s)
    for (SwitchId d = 0; d < g.size(); ++d)
      if (s != d) pairs.emplace_back(s, d);
  return build_pathset(g, scheme, k, seed, pairs, jobs);
}

std::vector<SwitchPair> sample_pairs(std::size_t switches, std::size_t count, std::uint64_t seed) {
  std::vector<SwitchPair> out;
  const std::size_t all = switches * (switches - 1);
  if (count >= all) {
    for (SwitchId s = 0; s < switches; ++s)
      for (SwitchId d = 0; d < switches; ++d)
        if (s != d) out.emplace_back(s, d);
    return out;
  }
  Rng rng(seed);
  std::set<SwitchPair> chosen;
  while (chosen.size() < count) {
    auto s = static_cast<SwitchId>(rng.uniform(switches));
    auto d = static_cast<SwitchId>(rng.uniform(switches - 1));
    if (d >= s) ++d;
    chosen.emplace(s, d);
  }
  return {chosen.begin(), chosen.end()};
}

std::size_t max_edge_share(std::span<const PathView> paths) {
  std::vector<std::pair<SwitchId, SwitchId>> edges;
  for (PathView p : paths)
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
      edges.emplace_back(std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1]));
  std::sort(edges.begin(), edges.end());
  std::size_t best = 0;
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    best = std::max(best, j - i);
    i = j;
  }
  return best;
}

PathQualityReport quality_report(const PathSet& ps) {
  PathQualityReport r;
  std::size_t hops = 0, disjoint_pairs = 0;
  std::vector<PathView> views;
  for (SwitchId s = 0; s < ps.switch_count(); ++s) {
    for (SwitchId d = 0; d < ps.switch_count(); ++d) {
      const std::size_t n = s == d ? 0 : ps.path_count(s, d);
      if (n == 0) continue;
      views.clear();
      for (std::size_t i = 0; i < n; ++i) {
        views.push_back(ps.path(s, d, i));
        hops += hop_count(views.back());
      }
      const std::size_t share = max_edge_share(views);
      if (share == 1) ++disjoint_pairs;
      r.max_edge_share = std::max(r.max_edge_share, share);
      r.paths += n;
      ++r.pairs;
    }
  }
  if (r.paths > 0) r.avg_path_length = static_cast<double>(hops) / static_cast<double>(r.paths);
  if (r.pairs > 0) r.pct_pairs_fully_disjoint = 100.0 * static_cast<double>(disjoint_pairs) / static_cast<double>(r.pairs);
  return r;
}

void write(const PathSet& ps, std::ostream& out) {
  out << "paths scheme=" << to_string(ps.scheme()) << " k=" << ps.k() << " seed=" << ps.seed()
      << " topo=" << topology::hash_hex(ps.topo_hash()) << '\n';
  for (SwitchId s = 0; s < ps.switch_count(); ++s) {
    for (SwitchId d = 0; d < ps.switch_count(); ++d) {
      const std::size_t n = s == d ? 0 : ps.path_count(s, d);
      if (n == 0) continue;
      out << s << ' ' << d << ':';
      for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out << " |";
        for (SwitchId h : ps.path(s, d, i)) out << ' ' << h;
      }
      out << '\n';
    }
  }
}

namespace {

std::string header_value(const std::string& token, const std::string& key, std::size_t line) {
  if (token.rfind(key + "=", 0) != 0) throw ParseError(line, "expected '" + key + "=' in header");
  return token.substr(key.size() + 1);
}

void check_path(const Graph* g, std::size_t switches, const Path& p, SwitchId s, SwitchId d, std::size_t line) {
  if (p.size() < 2 || p.front() != s || p.back() != d)
    throw InvariantViolation("endpoints", "line " + std::to_string(line) + ": path does not join " +
                                              std::to_string(s) + " and " + std::to_string(d));
  std::vector<SwitchId> sorted(p);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvariantViolation("loopless", "line " + std::to_string(line));
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p[i] >= switches || p[i + 1] >= switches || (g && !g->adjacent(p[i], p[i + 1])))
      throw InvariantViolation("adjacency", "line " + std::to_string(line) + ": " +
                                                std::to_string(p[i]) + "-" + std::to_string(p[i + 1]));
}

// Without a graph the switch count is taken from the largest id seen.
PathSet read_impl(std::istream& in, const Graph* g) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  Scheme sch = Scheme::KSP;
  std::size_t kk = 0;
  std::uint64_t sd = 0, th = 0;
  const std::size_t limit = g ? g->size() : std::numeric_limits<SwitchId>::max();
  std::size_t switches = g ? g->size() : 0;
  std::map<SwitchPair, std::vector<Path>> pairs;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!have_header) {
      std::istringstream fields(line);
      std::string magic, scheme, k, seed, topo;
      if (!(fields >> magic >> scheme >> k >> seed >> topo) || magic != "paths")
        throw ParseError(line_no, "expected header 'paths scheme=<S> k=<K> seed=<seed> topo=<hash>'");
      try {
        sch = parse_scheme(header_value(scheme, "scheme", line_no));
        kk = std::stoull(header_value(k, "k", line_no));
        sd = std::stoull(header_value(seed, "seed", line_no));
        th = std::stoull(header_value(topo, "topo", line_no), nullptr, 16);
      } catch (const ParseError&) {
        throw;
      } catch (const std::exception& e) {
        throw ParseError(line_no, std::string("bad header value: ") + e.what());
      }
      if (kk == 0) throw ParseError(line_no, "k must be positive");
      if (g && th != g->content_hash())
        throw InvariantViolation("topology-hash", "path set was built for topology " +
                                                      topology::hash_hex(th) + ", got " +
                                                      topology::hash_hex(g->content_hash()));
      have_header = true;
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected '<src> <dst>: hops | hops'");
    std::istringstream key(line.substr(0, colon));
    long long s = -1, d = -1;
    std::string extra;
    if (!(key >> s >> d) || (key >> extra) || s < 0 || d < 0 ||
        static_cast<std::size_t>(s) >= limit || static_cast<std::size_t>(d) >= limit || s == d)
      throw ParseError(line_no, "bad switch pair");
    std::vector<Path> paths(1);
    std::istringstream body(line.substr(colon + 1));
    std::string token;
    while (body >> token) {
      if (token == "|") {
        paths.emplace_back();
        continue;
      }
      try {
        std::size_t used = 0;
        long long v = std::stoll(token, &used);
        if (used != token.size() || v < 0 || static_cast<std::size_t>(v) >= limit) throw std::invalid_argument(token);
        paths.back().push_back(static_cast<SwitchId>(v));
        if (!g) switches = std::max(switches, static_cast<std::size_t>(v) + 1);
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad hop '" + token + "'");
      }
    }
    if (paths.size() > kk) throw InvariantViolation("k", "line " + std::to_string(line_no) + " has more than k paths");
    for (std::size_t i = 0; i < paths.size(); ++i) {
      check_path(g, limit, paths[i], static_cast<SwitchId>(s), static_cast<SwitchId>(d), line_no);
      if (i > 0 && paths[i].size() < paths[i - 1].size())
        throw InvariantViolation("ordering", "line " + std::to_string(line_no));
    }
    if (!pairs.emplace(SwitchPair(s, d), std::move(paths)).second)
      throw ParseError(line_no, "duplicate switch pair");
  }
  if (!have_header) throw ParseError(line_no, "missing header");
  PathSet ps(sch, kk, sd, switches, th);
  for (const auto& [pair, paths] : pairs) ps.append_pair(pair.first, pair.second, paths);
  ps.seal();
  return ps;
}

}  // namespace

PathSet read(std::istream& in, const Graph& g) { return read_impl(in, &g); }

PathSet read(std::istream& in) { return read_impl(in, nullptr); }

void save(const PathSet& ps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write(ps, out);
}

PathSet load(const std::filesystem::path& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read(in, g);
}

PathSet load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read(in);
}

}  // namespace jellyfish::pathsel
