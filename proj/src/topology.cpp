// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "jellyfish/errors.hpp"
#include "jellyfish/rng.hpp"

namespace jellyfish::topology {

void TopoSpec::validate() const {
  if (n_switches == 0 || ports_per_switch == 0 || network_ports == 0)
    throw InfeasibleSpec(label() + ": all parameters must be positive");
  if (network_ports >= ports_per_switch)
    throw InfeasibleSpec(label() + ": each switch needs at least one compute-node port (y < x)");
  if ((static_cast<std::uint64_t>(n_switches) * network_ports) % 2 != 0)
    throw InfeasibleSpec(label() + ": N * y must be even");
  if (network_ports >= n_switches)
    throw InfeasibleSpec(label() + ": a simple y-regular graph needs y < N");
}

std::string TopoSpec::label() const {
  std::ostringstream os;
  os << "RRG(" << n_switches << "," << ports_per_switch << "," << network_ports << ")";
  return os.str();
}

Topology::Topology(TopoSpec spec, Graph graph) : spec_(spec), graph_(std::move(graph)) {
  try {
    spec_.validate();
  } catch (const InfeasibleSpec& e) {
    throw InvariantViolation("spec", e.what());
  }
  const std::size_t n = spec_.n_switches;
  if (graph_.size() != n)
    throw InvariantViolation("size", "expected " + std::to_string(n) + " switches, got " +
                                         std::to_string(graph_.size()));
  for (SwitchId s = 0; s < n; ++s) {
    auto list = graph_.neighbors(s);
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i] >= n)
        throw InvariantViolation("range", "switch " + std::to_string(s) + " lists neighbor " +
                                              std::to_string(list[i]));
      if (list[i] == s)
        throw InvariantViolation("self-loop", "switch " + std::to_string(s));
      if (i > 0 && list[i] == list[i - 1])
        throw InvariantViolation("multi-edge", "switch " + std::to_string(s) + " -> " +
                                                   std::to_string(list[i]));
    }
  }
  for (SwitchId s = 0; s < n; ++s)
    for (SwitchId v : graph_.neighbors(s))
      if (!graph_.adjacent(v, s))
        throw InvariantViolation("symmetry", std::to_string(s) + " lists " + std::to_string(v) +
                                                 " but not the reverse");
  for (SwitchId s = 0; s < n; ++s)
    if (graph_.degree(s) != spec_.network_ports)
      throw InvariantViolation("regularity", "switch " + std::to_string(s) + " has degree " +
                                                 std::to_string(graph_.degree(s)) + ", expected " +
                                                 std::to_string(spec_.network_ports));
  if (!is_connected(graph_)) throw InvariantViolation("connectivity", "graph is disconnected");
}

namespace {

// Partial y-regular multigraph-free construction state.
class Builder {
 public:
  explicit Builder(std::size_t n) : n_(n), adjacency_(n), linked_(n * n, 0) {}

  bool linked(SwitchId a, SwitchId b) const { return linked_[a * n_ + b] != 0; }

  void connect(SwitchId a, SwitchId b) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
    linked_[a * n_ + b] = linked_[b * n_ + a] = 1;
    edges_.emplace_back(a, b);
  }

  void disconnect(std::size_t edge_index) {
    auto [a, b] = edges_[edge_index];
    std::erase(adjacency_[a], b);
    std::erase(adjacency_[b], a);
    linked_[a * n_ + b] = linked_[b * n_ + a] = 0;
    edges_[edge_index] = edges_.back();
    edges_.pop_back();
  }

  const std::vector<std::pair<SwitchId, SwitchId>>& edges() const { return edges_; }
  std::vector<std::vector<SwitchId>> take_adjacency() { return std::move(adjacency_); }

 private:
  std::size_t n_;
  std::vector<std::vector<SwitchId>> adjacency_;
  std::vector<std::uint8_t> linked_;
  std::vector<std::pair<SwitchId, SwitchId>> edges_;
};

void remove_stub(std::vector<SwitchId>& stubs, SwitchId s) {
  auto it = std::find(stubs.begin(), stubs.end(), s);
  *it = stubs.back();
  stubs.pop_back();
}

std::vector<SwitchId> open_switches(const std::vector<SwitchId>& stubs) {
  std::vector<SwitchId> open(stubs);
  std::sort(open.begin(), open.end());
  open.erase(std::unique(open.begin(), open.end()), open.end());
  return open;
}

// Used when no stub pair can be joined: break an existing edge (a, b) and
// rewire its endpoints to the switches that still have free ports.
bool repair(Builder& b, std::vector<SwitchId>& stubs, Rng& rng) {
  auto open = open_switches(stubs);
  SwitchId s = open[rng.uniform(open.size())];
  auto free_ports = std::count(stubs.begin(), stubs.end(), s);
  const std::size_t attempts = 4 * b.edges().size() + 16;

  if (free_ports >= 2) {
    for (std::size_t i = 0; i < attempts && !b.edges().empty(); ++i) {
      std::size_t e = rng.uniform(b.edges().size());
      auto [x, y] = b.edges()[e];
      if (x == s || y == s || b.linked(s, x) || b.linked(s, y)) continue;
      b.disconnect(e);
      b.connect(s, x);
      b.connect(s, y);
      remove_stub(stubs, s);
      remove_stub(stubs, s);
      return true;
    }
    return false;
  }

  std::erase(open, s);
  if (open.empty()) return false;
  SwitchId t = open[rng.uniform(open.size())];
  for (std::size_t i = 0; i < attempts && !b.edges().empty(); ++i) {
    std::size_t e = rng.uniform(b.edges().size());
    auto [x, y] = b.edges()[e];
    if (rng.uniform(2) == 1) std::swap(x, y);
    if (x == s || x == t || y == s || y == t) continue;
    if (b.linked(s, x) || b.linked(t, y)) continue;
    b.disconnect(e);
    b.connect(s, x);
    b.connect(t, y);
    remove_stub(stubs, s);
    remove_stub(stubs, t);
    return true;
  }
  return false;
}

std::optional<Graph> try_build(const TopoSpec& spec, Rng& rng) {
  const std::size_t n = spec.n_switches;
  Builder b(n);
  std::vector<SwitchId> stubs;
  stubs.reserve(n * spec.network_ports);
  for (SwitchId s = 0; s < n; ++s) stubs.insert(stubs.end(), spec.network_ports, s);

  constexpr int kMaxRejections = 64;
  int rejections = 0;
  while (!stubs.empty()) {
    if (rejections < kMaxRejections) {
      std::size_t i = rng.uniform(stubs.size());
      std::size_t j = rng.uniform(stubs.size() - 1);
      if (j >= i) ++j;
      SwitchId a = stubs[i], c = stubs[j];
      if (a != c && !b.linked(a, c)) {
        b.connect(a, c);
        // Remove the higher index first so the lower one stays valid.
        for (std::size_t idx : {std::max(i, j), std::min(i, j)}) {
          stubs[idx] = stubs.back();
          stubs.pop_back();
        }
        rejections = 0;
      } else {
        ++rejections;
      }
      continue;
    }
    rejections = 0;

    auto open = open_switches(stubs);
    std::vector<std::pair<SwitchId, SwitchId>> joinable;
    for (std::size_t i = 0; i < open.size(); ++i)
      for (std::size_t j = i + 1; j < open.size(); ++j)
        if (!b.linked(open[i], open[j])) joinable.emplace_back(open[i], open[j]);
    if (!joinable.empty()) {
      auto [a, c] = joinable[rng.uniform(joinable.size())];
      b.connect(a, c);
      remove_stub(stubs, a);
      remove_stub(stubs, c);
      continue;
    }
    if (!repair(b, stubs, rng)) return std::nullopt;
  }

  Graph g(b.take_adjacency());
  if (!is_connected(g)) return std::nullopt;
  return g;
}

}  // namespace

Topology generate(const TopoSpec& spec) {
  spec.validate();
  for (int attempt = 0; attempt < kGenerateRetryBudget; ++attempt) {
    Rng rng(derive_seed(spec.rng_seed, {static_cast<std::uint64_t>(attempt)}));
    if (auto g = try_build(spec, rng)) return Topology(spec, std::move(*g));
  }
  throw ConstructionFailure(spec.label() + ": no connected simple regular graph after " +
                            std::to_string(kGenerateRetryBudget) + " attempts");
}

double avg_shortest_path_length(const Graph& g) {
  const std::size_t n = g.size();
  if (n < 2) return 0.0;
  std::uint64_t total = 0;
  for (SwitchId s = 0; s < n; ++s)
    for (int d : bfs_distances(g, s)) total += static_cast<std::uint64_t>(std::max(d, 0));
  return static_cast<double>(total) / static_cast<double>(n * (n - 1));
}

int diameter(const Graph& g) {
  int best = 0;
  for (SwitchId s = 0; s < g.size(); ++s) {
    auto dist = bfs_distances(g, s);
    best = std::max(best, *std::max_element(dist.begin(), dist.end()));
  }
  return best;
}

void write(const Topology& t, std::ostream& out) {
  const auto& spec = t.spec();
  out << "jellyfish " << spec.n_switches << ' ' << spec.ports_per_switch << ' '
      << spec.network_ports << ' ' << spec.rng_seed << '\n';
  for (SwitchId s = 0; s < t.switch_count(); ++s) {
    out << s << ':';
    for (SwitchId v : t.graph().neighbors(s)) out << ' ' << v;
    out << '\n';
  }
}

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  std::string body = pos == std::string::npos ? line : line.substr(0, pos);
  auto first = body.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  auto last = body.find_last_not_of(" \t\r");
  return body.substr(first, last - first + 1);
}

}  // namespace

Topology read(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<TopoSpec> spec;
  std::vector<std::vector<SwitchId>> adjacency;
  std::vector<bool> seen;

  while (std::getline(in, line)) {
    ++line_no;
    std::string body = strip_comment(line);
    if (body.empty()) continue;
    std::istringstream fields(body);
    if (!spec) {
      std::string magic;
      TopoSpec s;
      if (!(fields >> magic >> s.n_switches >> s.ports_per_switch >> s.network_ports >>
            s.rng_seed) ||
          magic != "jellyfish")
        throw ParseError(line_no, "expected header 'jellyfish N x y seed'");
      std::string extra;
      if (fields >> extra) throw ParseError(line_no, "trailing tokens in header");
      spec = s;
      adjacency.assign(s.n_switches, {});
      seen.assign(s.n_switches, false);
      continue;
    }
    auto colon = body.find(':');
    if (colon == std::string::npos) throw ParseError(line_no, "expected '<switch_id>: neighbors...'");
    std::istringstream id_field(body.substr(0, colon));
    long long id = -1;
    std::string rest;
    if (!(id_field >> id) || (id_field >> rest))
      throw ParseError(line_no, "bad switch identifier");
    if (id < 0 || static_cast<std::uint64_t>(id) >= spec->n_switches)
      throw ParseError(line_no, "switch identifier out of range");
    if (seen[id]) throw ParseError(line_no, "duplicate switch " + std::to_string(id));
    seen[id] = true;
    std::istringstream neighbor_fields(body.substr(colon + 1));
    std::string token;
    while (neighbor_fields >> token) {
      try {
        std::size_t used = 0;
        long long v = std::stoll(token, &used);
        if (used != token.size() || v < 0) throw std::invalid_argument(token);
        adjacency[id].push_back(static_cast<SwitchId>(v));
      } catch (const std::exception&) {
        throw ParseError(line_no, "bad neighbor identifier '" + token + "'");
      }
    }
  }
  if (!spec) throw ParseError(line_no, "missing header");
  for (std::size_t s = 0; s < seen.size(); ++s)
    if (!seen[s]) throw ParseError(line_no, "missing adjacency line for switch " + std::to_string(s));
  return Topology(*spec, Graph(std::move(adjacency)));
}

void save(const Topology& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write(t, out);
}

Topology load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read(in);
}

}  // namespace jellyfish::topology
