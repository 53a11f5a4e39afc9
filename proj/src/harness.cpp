// SPDX-License-Identifier: Apache-2.0

#include "jellyfish/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "jellyfish/errors.hpp"
#include "jellyfish/model.hpp"
#include "jellyfish/parallel.hpp"

namespace jellyfish::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    std::string item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t to_u64(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty())
    throw ConfigError("bad " + std::string(what) + " '" + t + "'");
  return v;
}

double to_double(std::string_view text, std::string_view what) {
  const std::string t = trim(text);
  double v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty())
    throw ConfigError("bad " + std::string(what) + " '" + t + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string csv_field(const std::string& s, char delimiter) {
  if (s.find_first_of(std::string{delimiter, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' || c == '\r' ? ' ' : c;
  }
  return out + '"';
}

constexpr std::uint64_t kTopologyTag = 0x746f706f;
constexpr std::uint64_t kPatternTag = 0x70617474;
constexpr std::uint64_t kPathTag = 0x70617468;
constexpr std::uint64_t kSimTag = 0x73696d75;

std::vector<std::string> metrics_for(Evaluator e) {
  switch (e) {
    case Evaluator::paths: return {"avg_path_length", "pct_fully_disjoint", "max_edge_share"};
    case Evaluator::model: return {"mean_throughput", "min_throughput", "mean_raw_throughput"};
    case Evaluator::sim_sweep: return {"saturation_throughput"};
    case Evaluator::replay: return {"completion_cycles", "completion_seconds"};
  }
  return {};
}

}  // namespace

std::string_view to_string(Evaluator e) {
  switch (e) {
    case Evaluator::paths: return "paths";
    case Evaluator::model: return "model";
    case Evaluator::sim_sweep: return "sim_sweep";
    case Evaluator::replay: return "replay";
  }
  return "?";
}

Evaluator parse_evaluator(std::string_view name) {
  for (Evaluator e : {Evaluator::paths, Evaluator::model, Evaluator::sim_sweep, Evaluator::replay})
    if (to_string(e) == name) return e;
  if (name == "sweep") return Evaluator::sim_sweep;
  throw ConfigError("unknown evaluator '" + std::string(name) + "'");
}

PatternSpec PatternSpec::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.empty()) throw ConfigError("empty pattern");
  PatternSpec p;
  p.family = parts[0];
  const auto need = [&](std::size_t n) {
    if (parts.size() != n) throw ConfigError("bad pattern '" + std::string(text) + "'");
  };
  if (p.family == "permutation" || p.family == "random_shift" || p.family == "all_to_all" || p.family == "uniform") {
    need(1);
  } else if (p.family == "shift") {
    need(2);
    p.x = to_u64(parts[1], "shift distance");
  } else if (p.family == "random") {
    if (parts.size() > 2) need(2);
    p.x = parts.size() == 2 ? to_u64(parts[1], "destination count") : 50;
  } else if (p.family == "stencil") {
    if (parts.size() != 4 && parts.size() != 5) need(5);
    p.stencil = traffic::parse_stencil(parts[1]);
    for (const auto& d : split(parts[2], 'x')) p.dims.push_back(to_u64(d, "grid dimension"));
    p.bytes = to_u64(parts[3], "bytes per process");
    if (parts.size() == 5) {
      if (parts[4] == "linear") p.mapping = traffic::MappingKind::linear;
      else if (parts[4] == "random") p.mapping = traffic::MappingKind::random;
      else throw ConfigError("unknown mapping '" + parts[4] + "'");
    }
  } else {
    throw ConfigError("unknown pattern family '" + p.family + "'");
  }
  return p;
}

std::string PatternSpec::label() const {
  if (family == "shift" || family == "random") return family + ":" + std::to_string(x);
  if (family != "stencil") return family;
  std::string dims_text;
  for (std::size_t i = 0; i < dims.size(); ++i) dims_text += (i ? "x" : "") + std::to_string(dims[i]);
  return "stencil:" + std::string(traffic::to_string(stencil)) + ":" + dims_text + ":" + std::to_string(bytes) + ":" +
         (mapping == traffic::MappingKind::linear ? "linear" : "random");
}

void Experiment::validate() const {
  if (topologies.empty()) throw ConfigError(name + ": no topologies");
  for (const auto& t : topologies) {
    try {
      t.validate();
    } catch (const InfeasibleSpec& ex) {
      throw ConfigError(name + ": " + ex.what());
    }
  }
  if (topo_seeds.empty() || pattern_seeds.empty()) throw ConfigError(name + ": seed lists must be non-empty");
  if (schemes.empty() || ks.empty()) throw ConfigError(name + ": schemes and k must be non-empty");
  for (std::size_t k : ks)
    if (k == 0) throw ConfigError(name + ": k must be positive");
  if ((evaluator == Evaluator::sim_sweep || evaluator == Evaluator::replay) && mechanisms.empty())
    throw ConfigError(name + ": mechanisms must be non-empty");
  if (evaluator == Evaluator::replay && !pattern.is_stencil())
    throw ConfigError(name + ": replay needs a stencil pattern");
  if (evaluator != Evaluator::replay && evaluator != Evaluator::paths && pattern.is_stencil())
    throw ConfigError(name + ": stencil patterns are replay-only");
  if (pattern.is_stencil() && (pattern.dims.size() < 2 || pattern.dims.size() > 3))
    throw ConfigError(name + ": stencil grids have 2 or 3 dimensions");
  if (pattern.family == "shift" && pattern.x == 0) throw ConfigError(name + ": shift distance must be positive");
  if (pattern.family == "random" && pattern.x == 0) throw ConfigError(name + ": destination count must be positive");
  sim.validate();
  for (double r : rates)
    if (!(r > 0 && r <= 1)) throw ConfigError(name + ": rates must lie in (0, 1]");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split(text, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_u64(item, "seed"));
      continue;
    }
    const std::uint64_t lo = to_u64(item.substr(0, dots), "seed");
    const std::uint64_t hi = to_u64(item.substr(dots + 2), "seed");
    if (hi < lo || hi - lo > 1'000'000) throw ConfigError("bad seed range '" + item + "'");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

std::vector<double> parse_rates(std::string_view text) {
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("rates must be first:last:step");
    return simnet::rate_grid(to_double(parts[0], "rate"), to_double(parts[1], "rate"), to_double(parts[2], "rate"));
  }
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(item, "rate"));
  if (out.empty()) throw ConfigError("empty rate list");
  return out;
}

std::vector<Experiment> parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  std::vector<Experiment> out;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    Experiment e;
    e.name = section;
    e.topologies = {{36, 24, 16, 0}, {180, 24, 19, 0}};
    for (const auto& [key, node] : body) {
      const std::string v = node.get_value<std::string>();
      const std::string where = section + "." + key;
      try {
        if (key == "evaluator") {
          e.evaluator = parse_evaluator(trim(v));
        } else if (key == "topologies") {
          e.topologies.clear();
          for (const auto& t : split(v, ';')) {
            const auto f = split(t, ',');
            if (f.size() != 3) throw ConfigError("topology must be N,x,y");
            e.topologies.push_back({static_cast<std::uint32_t>(to_u64(f[0], "N")),
                                    static_cast<std::uint32_t>(to_u64(f[1], "x")),
                                    static_cast<std::uint32_t>(to_u64(f[2], "y")), 0});
          }
        } else if (key == "topo_seeds") {
          e.topo_seeds = parse_seed_list(v);
        } else if (key == "pattern_seeds") {
          e.pattern_seeds = parse_seed_list(v);
        } else if (key == "schemes") {
          e.schemes.clear();
          for (const auto& s : split(v, ',')) e.schemes.push_back(pathsel::parse_scheme(s));
        } else if (key == "k") {
          e.ks.clear();
          for (const auto& s : split(v, ',')) e.ks.push_back(to_u64(s, "k"));
        } else if (key == "mechanisms") {
          e.mechanisms.clear();
          for (const auto& s : split(v, ',')) e.mechanisms.push_back(simnet::parse_mechanism(s));
        } else if (key == "pattern") {
          e.pattern = PatternSpec::parse(v);
        } else if (key == "seed") {
          e.master_seed = to_u64(v, "seed");
        } else if (key == "sample_pairs") {
          e.sample_pairs = to_u64(v, "sample_pairs");
        } else if (key == "rates") {
          e.rates = parse_rates(v);
        } else if (key == "channel_latency") {
          e.sim.channel_latency = static_cast<int>(to_u64(v, key));
        } else if (key == "router_delay") {
          e.sim.router_delay = static_cast<int>(to_u64(v, key));
        } else if (key == "router_speedup") {
          e.sim.router_speedup = to_double(v, key);
        } else if (key == "vc_count") {
          e.sim.vc_count = static_cast<int>(to_u64(v, key));
        } else if (key == "buffer_per_vc") {
          e.sim.buffer_per_vc = static_cast<int>(to_u64(v, key));
        } else if (key == "warmup_cycles") {
          e.sim.warmup_cycles = static_cast<int>(to_u64(v, key));
        } else if (key == "sample_cycles") {
          e.sim.sample_cycles = static_cast<int>(to_u64(v, key));
        } else if (key == "samples") {
          e.sim.samples = static_cast<int>(to_u64(v, key));
        } else if (key == "saturation_latency") {
          e.sim.saturation_latency = to_double(v, key);
        } else if (key == "ugal_bias") {
          e.sim.ugal_bias = static_cast<int>(to_u64(v, key));
        } else if (key == "packet_bytes") {
          e.sim.packet_bytes = to_u64(v, key);
        } else if (key == "link_bandwidth") {
          e.sim.link_bandwidth = to_double(v, key);
        } else {
          throw ConfigError("unknown key");
        }
      } catch (const ConfigError& ex) {
        throw ConfigError(where + ": " + ex.what());
      }
    }
    e.validate();
    out.push_back(std::move(e));
  }
  if (out.empty()) throw ConfigError("config defines no experiments");
  return out;
}

std::vector<Experiment> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_config(in);
}

std::uint64_t topology_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed) {
  return derive_seed(e.master_seed, {kTopologyTag, t.n_switches, t.ports_per_switch, t.network_ports, topo_seed});
}

std::uint64_t pattern_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                           std::uint64_t pattern) {
  return derive_seed(e.master_seed,
                     {kPatternTag, t.n_switches, t.ports_per_switch, t.network_ports, topo_seed, pattern});
}

std::uint64_t path_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                        pathsel::Scheme scheme, std::size_t k) {
  return derive_seed(e.master_seed, {kPathTag, t.n_switches, t.ports_per_switch, t.network_ports, topo_seed,
                                     static_cast<std::uint64_t>(scheme), k});
}

std::uint64_t sim_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                       std::uint64_t pattern, pathsel::Scheme scheme, std::size_t k, simnet::Mechanism m) {
  return derive_seed(e.master_seed, {kSimTag, t.n_switches, t.ports_per_switch, t.network_ports, topo_seed, pattern,
                                     static_cast<std::uint64_t>(scheme), k, static_cast<std::uint64_t>(m)});
}

namespace {

traffic::TrafficPattern make_pattern(const PatternSpec& p, std::size_t nodes, std::uint64_t seed) {
  Rng rng(seed);
  if (p.family == "permutation") return traffic::random_permutation(nodes, rng);
  if (p.family == "shift") return traffic::shift(nodes, p.x);
  if (p.family == "random_shift") return traffic::random_shift(nodes, rng);
  if (p.family == "random") return traffic::random_x(nodes, p.x, rng);
  if (p.family == "all_to_all" || p.family == "uniform") return traffic::all_to_all(nodes);
  throw ConfigError("pattern '" + p.label() + "' has no synthetic form");
}

struct TopoEntry {
  std::shared_ptr<const topology::Topology> topo;
  std::string error;
};

struct PathEntry {
  std::shared_ptr<const pathsel::PathSet> paths;
  std::string error;
};

struct Cell {
  std::size_t topo = 0;  // index into the topology cache
  std::size_t paths = 0;  // index into the path cache
  std::size_t spec = 0;
  std::uint64_t topo_seed = 0;
  std::optional<std::uint64_t> pattern_seed;
  pathsel::Scheme scheme = pathsel::Scheme::KSP;
  std::size_t k = 0;
  std::optional<simnet::Mechanism> mechanism;
};

struct Measured {
  std::vector<std::pair<std::string, double>> values;
};

Measured evaluate(const Experiment& e, const Cell& c, const topology::Topology& t, const pathsel::PathSet* ps) {
  Measured m;
  const topology::TopoSpec& spec = e.topologies[c.spec];
  switch (e.evaluator) {
    case Evaluator::paths: {
      const std::uint64_t seed = path_seed(e, spec, c.topo_seed, c.scheme, c.k);
      pathsel::PathSet built;
      if (e.sample_pairs > 0) {
        const auto pairs = pathsel::sample_pairs(t.switch_count(), e.sample_pairs, derive_seed(seed, {kPathTag}));
        built = pathsel::build_pathset(t.graph(), c.scheme, c.k, seed, pairs);
      } else {
        built = pathsel::build_pathset(t.graph(), c.scheme, c.k, seed);
      }
      const auto q = pathsel::quality_report(built);
      m.values = {{"avg_path_length", q.avg_path_length},
                  {"pct_fully_disjoint", q.pct_pairs_fully_disjoint},
                  {"max_edge_share", static_cast<double>(q.max_edge_share)}};
      break;
    }
    case Evaluator::model: {
      const auto pattern = make_pattern(e.pattern, t.node_count(), pattern_seed(e, spec, c.topo_seed, *c.pattern_seed));
      const auto r = model::flow_rates(t, *ps, pattern);
      m.values = {{"mean_throughput", r.mean_clipped},
                  {"min_throughput", r.min_clipped},
                  {"mean_raw_throughput", r.mean_raw}};
      break;
    }
    case Evaluator::sim_sweep: {
      simnet::SimConfig cfg = e.sim;
      cfg.routing = *c.mechanism;
      cfg.rng_seed = sim_seed(e, spec, c.topo_seed, *c.pattern_seed, c.scheme, c.k, *c.mechanism);
      const auto injection =
          e.pattern.family == "uniform"
              ? simnet::Injection::uniform(t.node_count())
              : simnet::Injection::from_pattern(
                    make_pattern(e.pattern, t.node_count(), pattern_seed(e, spec, c.topo_seed, *c.pattern_seed)));
      const auto rates = e.rates.empty() ? simnet::rate_grid(0.05, 1.0, 0.05) : e.rates;
      const auto sweep = simnet::saturation_sweep(t, *ps, cfg, injection, rates);
      m.values.emplace_back("saturation_throughput", sweep.saturation_throughput);
      for (const auto& p : sweep.curve) {
        m.values.emplace_back("latency@" + format_number(p.rate), p.mean_latency);
        m.values.emplace_back("accepted@" + format_number(p.rate), p.accepted_throughput);
      }
      break;
    }
    case Evaluator::replay: {
      simnet::SimConfig cfg = e.sim;
      cfg.routing = *c.mechanism;
      const std::uint64_t pseed = pattern_seed(e, spec, c.topo_seed, *c.pattern_seed);
      cfg.rng_seed = sim_seed(e, spec, c.topo_seed, *c.pattern_seed, c.scheme, c.k, *c.mechanism);
      const auto w = traffic::stencil(e.pattern.stencil, e.pattern.dims, e.pattern.bytes);
      const auto mapped = traffic::apply_mapping(w, {e.pattern.mapping, pseed}, t.node_count());
      const auto r = simnet::replay(t, *ps, cfg, mapped);
      if (r.deadlock) throw Error("replay deadlocked");
      m.values = {{"completion_cycles", static_cast<double>(r.completion_cycles)},
                  {"completion_seconds", r.completion_seconds}};
      break;
    }
  }
  return m;
}

std::string error_text(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

}  // namespace

ExperimentResult run_experiment(const Experiment& e, unsigned jobs) {
  e.validate();
  ExperimentResult result;
  result.name = e.name;

  // Topologies.
  struct TopoKey {
    std::size_t spec;
    std::uint64_t seed;
  };
  std::vector<TopoKey> topo_keys;
  for (std::size_t i = 0; i < e.topologies.size(); ++i)
    for (std::uint64_t s : e.topo_seeds) topo_keys.push_back({i, s});
  std::vector<TopoEntry> topos(topo_keys.size());
  parallel_for(topo_keys.size(), jobs, [&](std::size_t i) {
    topology::TopoSpec spec = e.topologies[topo_keys[i].spec];
    spec.rng_seed = topology_seed(e, spec, topo_keys[i].seed);
    try {
      topos[i].topo = std::make_shared<const topology::Topology>(topology::generate(spec));
    } catch (...) {
      topos[i].error = error_text(std::current_exception());
    }
  });

  // Path sets, shared by every pattern seed and mechanism of a topology.
  struct PathKey {
    std::size_t topo;
    pathsel::Scheme scheme;
    std::size_t k;
  };
  std::vector<PathKey> path_keys;
  for (std::size_t i = 0; i < topo_keys.size(); ++i)
    for (auto scheme : e.schemes)
      for (std::size_t k : e.ks) path_keys.push_back({i, scheme, k});
  std::vector<PathEntry> paths(path_keys.size());
  if (e.evaluator != Evaluator::paths) {
    parallel_for(path_keys.size(), jobs, [&](std::size_t i) {
      const PathKey& pk = path_keys[i];
      if (!topos[pk.topo].topo) return;
      const auto& spec = e.topologies[topo_keys[pk.topo].spec];
      try {
        paths[i].paths = std::make_shared<const pathsel::PathSet>(pathsel::build_pathset(
            topos[pk.topo].topo->graph(), pk.scheme, pk.k, path_seed(e, spec, topo_keys[pk.topo].seed, pk.scheme, pk.k)));
      } catch (...) {
        paths[i].error = error_text(std::current_exception());
      }
    });
  }

  std::vector<Cell> cells;
  for (std::size_t pi = 0; pi < path_keys.size(); ++pi) {
    const PathKey& pk = path_keys[pi];
    Cell base;
    base.topo = pk.topo;
    base.paths = pi;
    base.spec = topo_keys[pk.topo].spec;
    base.topo_seed = topo_keys[pk.topo].seed;
    base.scheme = pk.scheme;
    base.k = pk.k;
    if (e.evaluator == Evaluator::paths) {
      cells.push_back(base);
      continue;
    }
    for (std::uint64_t ps : e.pattern_seeds) {
      base.pattern_seed = ps;
      if (e.evaluator == Evaluator::model) {
        cells.push_back(base);
        continue;
      }
      for (auto mech : e.mechanisms) {
        base.mechanism = mech;
        cells.push_back(base);
      }
    }
  }

  std::vector<std::vector<ResultRow>> per_cell(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    ResultRow proto;
    proto.topology = e.topologies[c.spec].label();
    proto.topo_seed = std::to_string(c.topo_seed);
    proto.pattern_seed = c.pattern_seed ? std::to_string(*c.pattern_seed) : "-";
    proto.scheme = std::string(pathsel::to_string(c.scheme));
    proto.k = std::to_string(c.k);
    proto.mechanism = c.mechanism ? std::string(simnet::to_string(*c.mechanism)) : "-";
    std::string error = topos[c.topo].error;
    if (error.empty() && e.evaluator != Evaluator::paths) error = paths[c.paths].error;
    if (error.empty()) {
      try {
        const Measured m = evaluate(e, c, *topos[c.topo].topo, paths[c.paths].paths.get());
        for (const auto& [metric, value] : m.values) {
          ResultRow row = proto;
          row.metric = metric;
          row.value = value;
          per_cell[i].push_back(std::move(row));
        }
        return;
      } catch (...) {
        error = error_text(std::current_exception());
      }
    }
    for (const auto& metric : metrics_for(e.evaluator)) {
      ResultRow row = proto;
      row.metric = metric;
      row.error = error;
      per_cell[i].push_back(std::move(row));
    }
  });

  for (auto& rows : per_cell) {
    if (!rows.empty() && !rows.front().error.empty()) ++result.failed_cells;
    for (auto& r : rows) result.rows.push_back(std::move(r));
  }
  result.summary = summarize(result.rows);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::vector<std::string>, std::size_t> index;
  std::vector<double> sums;
  for (const auto& r : rows) {
    std::vector<std::string> key{r.topology, r.scheme, r.k, r.mechanism, r.metric};
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      out.push_back({r.topology, r.scheme, r.k, r.mechanism, r.metric, std::nullopt, 0, 0});
      sums.push_back(0.0);
    }
    SummaryRow& s = out[it->second];
    ++s.cells;
    if (!r.error.empty() || !r.value) {
      ++s.errors;
      continue;
    }
    sums[it->second] += *r.value;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t ok = out[i].cells - out[i].errors;
    if (ok > 0) out[i].mean = sums[i] / static_cast<double>(ok);
  }
  return out;
}

void write_rows(const std::vector<ResultRow>& rows, std::ostream& out, char d) {
  out << "topology" << d << "topo_seed" << d << "pattern_seed" << d << "scheme" << d << "k" << d << "mechanism" << d
      << "metric" << d << "value" << d << "error" << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.topology, d) << d << r.topo_seed << d << r.pattern_seed << d << r.scheme << d << r.k << d
        << r.mechanism << d << csv_field(r.metric, d) << d << (r.value ? format_number(*r.value) : "") << d
        << csv_field(r.error, d) << '\n';
  }
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out, char d) {
  out << "topology" << d << "scheme" << d << "k" << d << "mechanism" << d << "metric" << d << "mean" << d << "cells"
      << d << "errors" << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.topology, d) << d << r.scheme << d << r.k << d << r.mechanism << d << csv_field(r.metric, d)
        << d << (r.mean ? format_number(*r.mean) : "") << d << r.cells << d << r.errors << '\n';
  }
}

std::vector<Table> report_tables(const std::vector<SummaryRow>& summary) {
  std::vector<Table> tables;
  if (summary.empty()) {
    tables.emplace_back();
    return tables;
  }
  std::map<std::string, std::size_t> by_metric;
  for (const auto& r : summary) {
    auto [it, fresh] = by_metric.emplace(r.metric, tables.size());
    if (fresh) {
      tables.emplace_back();
      tables.back().metric = r.metric;
    }
    Table& t = tables[it->second];
    const std::string column = r.scheme + "(" + r.k + ")";
    const std::string row = r.mechanism == "-" ? r.topology : r.topology + " " + r.mechanism;
    auto col = std::find(t.columns.begin(), t.columns.end(), column);
    if (col == t.columns.end()) {
      t.columns.push_back(column);
      for (auto& cells : t.cells) cells.emplace_back();
      col = t.columns.end() - 1;
    }
    auto rit = std::find(t.row_labels.begin(), t.row_labels.end(), row);
    if (rit == t.row_labels.end()) {
      t.row_labels.push_back(row);
      t.cells.emplace_back(t.columns.size());
      rit = t.row_labels.end() - 1;
    }
    std::string text;
    if (r.errors > 0 || !r.mean) {
      text = "ERR";
      t.error_cells += r.errors;
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *r.mean);
      text = buf;
    }
    t.cells[rit - t.row_labels.begin()][col - t.columns.begin()] = text;
  }
  return tables;
}

void write_table(const Table& t, std::ostream& out, char d) {
  out << "topology";
  for (const auto& c : t.columns) out << d << csv_field(c, d);
  out << '\n';
  for (std::size_t i = 0; i < t.row_labels.size(); ++i) {
    out << csv_field(t.row_labels[i], d);
    for (const auto& c : t.cells[i]) out << d << c;
    out << '\n';
  }
  if (t.error_cells > 0) out << "# ERR: " << t.error_cells << " failed cell(s)\n";
}

void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir, char d) {
  std::filesystem::create_directories(dir);
  const std::string ext = d == '\t' ? ".tsv" : ".csv";
  const auto open = [&](const std::string& file) {
    std::ofstream out(dir / file);
    if (!out) throw Error("cannot write " + (dir / file).string());
    return out;
  };
  {
    auto out = open(r.name + ext);
    write_rows(r.rows, out, d);
  }
  {
    auto out = open(r.name + "_summary" + ext);
    write_summary(r.summary, out, d);
  }
  for (const Table& t : report_tables(r.summary)) {
    if (t.metric.find('@') != std::string::npos) continue;
    auto out = open(r.name + "_" + (t.metric.empty() ? std::string("table") : t.metric) + ext);
    write_table(t, out, d);
  }
}

}  // namespace jellyfish::harness
