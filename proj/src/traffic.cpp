// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/traffic.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "jellyfish/errors.hpp"

namespace jellyfish::traffic {

void TrafficPattern::validate() const {
  std::set<std::pair<NodeId, NodeId>> seen;
  for (const Demand& d : demands) {
    if (d.src >= node_count || d.dst >= node_count)
      throw InvariantViolation("range", "demand " + std::to_string(d.src) + "->" + std::to_string(d.dst));
    if (d.src == d.dst) throw InvariantViolation("self-demand", "node " + std::to_string(d.src));
    if (!(d.weight >= 0.0)) throw InvariantViolation("weight", "negative weight");
    if (!seen.emplace(d.src, d.dst).second)
      throw InvariantViolation("duplicate", std::to_string(d.src) + "->" + std::to_string(d.dst));
  }
}

TrafficPattern random_permutation(std::size_t node_count, Rng& rng) {
  if (node_count < 2) throw ConfigError("permutation needs at least 2 nodes");
  std::vector<NodeId> target(node_count);
  // Shuffle until fixed-point free; about e attempts on average.
  for (;;) {
    std::iota(target.begin(), target.end(), 0);
    std::shuffle(target.begin(), target.end(), rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < node_count && !fixed_point; ++i) fixed_point = target[i] == i;
    if (!fixed_point) break;
  }
  TrafficPattern p{"permutation", {}, node_count};
  p.demands.reserve(node_count);
  for (NodeId i = 0; i < node_count; ++i) p.demands.push_back({i, target[i], 1.0});
  return p;
}

TrafficPattern shift(std::size_t node_count, std::size_t x) {
  if (node_count < 2 || x % node_count == 0)
    throw InvalidShift("shift " + std::to_string(x) + " on " + std::to_string(node_count) +
                       " nodes would create self demands");
  TrafficPattern p{"shift" + std::to_string(x), {}, node_count};
  p.demands.reserve(node_count);
  for (NodeId i = 0; i < node_count; ++i)
    p.demands.push_back({i, static_cast<NodeId>((i + x) % node_count), 1.0});
  return p;
}

TrafficPattern random_shift(std::size_t node_count, Rng& rng) {
  if (node_count < 2) throw ConfigError("shift needs at least 2 nodes");
  return shift(node_count, 1 + rng.uniform(node_count - 1));
}

TrafficPattern random_x(std::size_t node_count, std::size_t x, Rng& rng) {
  if (x < 1 || x >= node_count)
    throw ConfigError("random(X) needs 1 <= X <= nodes - 1, got X=" + std::to_string(x));
  TrafficPattern p{"random" + std::to_string(x), {}, node_count};
  p.demands.reserve(node_count * x);
  std::vector<NodeId> others(node_count - 1);
  const double weight = 1.0 / static_cast<double>(x);
  for (NodeId src = 0; src < node_count; ++src) {
    for (NodeId i = 0; i + 1 < node_count; ++i) others[i] = i >= src ? i + 1 : i;
    // Partial Fisher-Yates: the first x slots are a uniform x-subset.
    for (std::size_t i = 0; i < x; ++i) std::swap(others[i], others[i + rng.uniform(others.size() - i)]);
    std::vector<NodeId> chosen(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(x));
    std::sort(chosen.begin(), chosen.end());
    for (NodeId d : chosen) p.demands.push_back({src, d, weight});
  }
  return p;
}

TrafficPattern all_to_all(std::size_t node_count) {
  if (node_count < 2) throw ConfigError("all-to-all needs at least 2 nodes");
  TrafficPattern p{"all-to-all", {}, node_count};
  p.demands.reserve(node_count * (node_count - 1));
  const double weight = 1.0 / static_cast<double>(node_count - 1);
  for (NodeId s = 0; s < node_count; ++s)
    for (NodeId d = 0; d < node_count; ++d)
      if (s != d) p.demands.push_back({s, d, weight});
  return p;
}

UniformDestination::UniformDestination(std::size_t node_count) : node_count_(node_count) {
  if (node_count < 2) throw ConfigError("uniform traffic needs at least 2 nodes");
}

std::string_view to_string(StencilKind k) {
  switch (k) {
    case StencilKind::NN2D: return "2DNN";
    case StencilKind::NN2DDiag: return "2DNNdiag";
    case StencilKind::NN3D: return "3DNN";
    case StencilKind::NN3DDiag: return "3DNNdiag";
  }
  return "?";
}

StencilKind parse_stencil(std::string_view name) {
  for (auto k : {StencilKind::NN2D, StencilKind::NN2DDiag, StencilKind::NN3D, StencilKind::NN3DDiag})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown stencil '" + std::string(name) + "'");
}

std::string Mapping::label() const {
  return kind == MappingKind::linear ? "linear" : "random:" + std::to_string(seed);
}

std::vector<Message> Workload::node_messages() const {
  if (!mapped()) throw ConfigError("workload '" + name + "' has no process-to-node mapping");
  std::vector<Message> out(messages);
  for (Message& m : out) {
    m.src = rank_to_node[m.src];
    m.dst = rank_to_node[m.dst];
  }
  return out;
}

namespace {

std::vector<std::vector<int>> stencil_offsets(StencilKind kind) {
  const bool three_d = kind == StencilKind::NN3D || kind == StencilKind::NN3DDiag;
  const bool diagonal = kind == StencilKind::NN2DDiag || kind == StencilKind::NN3DDiag;
  const int dims = three_d ? 3 : 2;
  std::vector<std::vector<int>> out;
  std::vector<int> off(dims, -1);
  for (;;) {
    int nonzero = 0;
    for (int v : off) nonzero += v != 0;
    if (nonzero > 0 && (diagonal || nonzero == 1)) out.push_back(off);
    int i = 0;
    while (i < dims && off[i] == 1) off[i++] = -1;
    if (i == dims) break;
    ++off[i];
  }
  return out;
}

}  // namespace

Workload stencil(StencilKind kind, std::span<const std::size_t> dims, std::uint64_t bytes_per_process) {
  const bool three_d = kind == StencilKind::NN3D || kind == StencilKind::NN3DDiag;
  if (dims.size() != (three_d ? 3u : 2u))
    throw DimensionMismatch(std::string(to_string(kind)) + " needs " + (three_d ? "3" : "2") +
                            " dimensions, got " + std::to_string(dims.size()));
  for (std::size_t d : dims)
    if (d == 0) throw DimensionMismatch("stencil dimensions must be positive");
  if (bytes_per_process == 0) throw ConfigError("bytes per process must be positive");

  Workload w;
  w.name = std::string(to_string(kind));
  w.ranks = std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  w.bytes_per_process = bytes_per_process;
  const auto offsets = stencil_offsets(kind);
  std::vector<std::size_t> coord(dims.size());
  for (std::uint32_t r = 0; r < w.ranks; ++r) {
    std::size_t rest = r;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      coord[i] = rest % dims[i];
      rest /= dims[i];
    }
    std::set<std::uint32_t> neighbours;
    for (const auto& off : offsets) {
      std::size_t index = 0, stride = 1;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto n = static_cast<long long>(dims[i]);
        const long long c = ((static_cast<long long>(coord[i]) + off[i]) % n + n) % n;
        index += static_cast<std::size_t>(c) * stride;
        stride *= dims[i];
      }
      if (index != r) neighbours.insert(static_cast<std::uint32_t>(index));
    }
    if (neighbours.empty()) continue;
    const std::uint64_t share = bytes_per_process / neighbours.size();
    std::uint64_t extra = bytes_per_process % neighbours.size();
    for (std::uint32_t n : neighbours) {
      w.messages.push_back({r, n, share + (extra > 0 ? 1 : 0)});
      if (extra > 0) --extra;
    }
  }
  return w;
}

Workload apply_mapping(const Workload& w, Mapping mapping, std::size_t node_count) {
  if (w.ranks > node_count)
    throw TooManyRanks(std::to_string(w.ranks) + " ranks do not fit on " + std::to_string(node_count) + " nodes");
  Workload out(w);
  out.mapping = mapping;
  out.rank_to_node.resize(w.ranks);
  if (mapping.kind == MappingKind::linear) {
    std::iota(out.rank_to_node.begin(), out.rank_to_node.end(), 0);
  } else {
    std::vector<NodeId> nodes(node_count);
    std::iota(nodes.begin(), nodes.end(), 0);
    Rng rng(mapping.seed);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    std::copy_n(nodes.begin(), w.ranks, out.rank_to_node.begin());
  }
  return out;
}

void write(const TrafficPattern& p, std::ostream& out) {
  out << "pattern " << p.name << " nodes=" << p.node_count << '\n';
  out.precision(17);
  for (const Demand& d : p.demands) out << d.src << ' ' << d.dst << ' ' << d.weight << '\n';
}

namespace {

struct Header {
  std::string name;
  std::size_t nodes = 0;
  std::optional<Mapping> mapping;
};

Header parse_header(const std::string& line, std::size_t line_no) {
  std::istringstream fields(line);
  std::string magic, token;
  Header h;
  if (!(fields >> magic >> h.name) || magic != "pattern")
    throw ParseError(line_no, "expected header 'pattern <name> nodes=<n>'");
  bool have_nodes = false;
  while (fields >> token) {
    try {
      if (token.rfind("nodes=", 0) == 0) {
        h.nodes = std::stoull(token.substr(6));
        have_nodes = true;
      } else if (token == "mapping=linear") {
        h.mapping = Mapping{};
      } else if (token.rfind("mapping=random:", 0) == 0) {
        h.mapping = Mapping{MappingKind::random, std::stoull(token.substr(15))};
      } else {
        throw ParseError(line_no, "unknown header field '" + token + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad header field '" + token + "'");
    }
  }
  if (!have_nodes) throw ParseError(line_no, "header lacks nodes=<n>");
  return h;
}

template <typename OnLine>
Header read_lines(std::istream& in, OnLine on_line) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<Header> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header) {
      header = parse_header(line, line_no);
      continue;
    }
    std::istringstream fields(line);
    on_line(fields, line_no);
  }
  if (!header) throw ParseError(line_no, "missing header");
  return *header;
}

}  // namespace

TrafficPattern read_pattern(std::istream& in) {
  TrafficPattern p;
  auto header = read_lines(in, [&](std::istringstream& fields, std::size_t line_no) {
    Demand d;
    std::string extra;
    if (!(fields >> d.src >> d.dst >> d.weight) || (fields >> extra))
      throw ParseError(line_no, "expected '<src> <dst> <weight>'");
    p.demands.push_back(d);
  });
  p.name = header.name;
  p.node_count = header.nodes;
  p.validate();
  return p;
}

void write(const Workload& w, std::ostream& out) {
  out << "pattern " << w.name << " nodes=" << w.ranks << " mapping=" << w.mapping.label() << '\n';
  out.precision(17);
  for (const Message& m : w.messages)
    out << m.src << ' ' << m.dst << ' '
        << static_cast<double>(m.bytes) / static_cast<double>(w.bytes_per_process) << ' ' << m.bytes << '\n';
}

Workload read_workload(std::istream& in) {
  Workload w;
  auto header = read_lines(in, [&](std::istringstream& fields, std::size_t line_no) {
    Message m;
    double weight = 0.0;
    std::string extra;
    if (!(fields >> m.src >> m.dst >> weight >> m.bytes) || (fields >> extra))
      throw ParseError(line_no, "expected '<src> <dst> <weight> <bytes>'");
    if (m.bytes == 0) throw ParseError(line_no, "message bytes must be positive");
    w.messages.push_back(m);
  });
  w.name = header.name;
  w.ranks = header.nodes;
  w.mapping = header.mapping.value_or(Mapping{});
  std::vector<std::uint64_t> sent(w.ranks, 0);
  for (const Message& m : w.messages) {
    if (m.src >= w.ranks || m.dst >= w.ranks || m.src == m.dst)
      throw InvariantViolation("range", "message " + std::to_string(m.src) + "->" + std::to_string(m.dst));
    sent[m.src] += m.bytes;
  }
  w.bytes_per_process = sent.empty() ? 0 : *std::max_element(sent.begin(), sent.end());
  return w;
}

void save(const TrafficPattern& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write(p, out);
}

TrafficPattern load_pattern(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_pattern(in);
}

void save(const Workload& w, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write(w, out);
}

Workload load_workload(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_workload(in);
}

}  // namespace jellyfish::traffic
