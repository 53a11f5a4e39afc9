// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: topology generation, path selection, the flow
// model, the simulator and batch experiments.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "jellyfish/errors.hpp"
#include "jellyfish/harness.hpp"
#include "jellyfish/model.hpp"
#include "jellyfish/pathsel.hpp"
#include "jellyfish/simnet.hpp"
#include "jellyfish/topology.hpp"
#include "jellyfish/traffic.hpp"

namespace {

using namespace jellyfish;

enum Exit { kOk = 0, kValidation = 1, kPartial = 2, kInternal = 3 };

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  unsigned jobs = 1;
  std::string format = "csv";
  char delim() const { return format == "tsv" ? '\t' : ','; }
};

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_.open(path);
    if (!file_) throw Error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

simnet::Injection make_injection(const harness::PatternSpec& p, std::size_t nodes, std::uint64_t seed,
                                 const std::string& pattern_file) {
  if (!pattern_file.empty()) return simnet::Injection::from_pattern(traffic::load_pattern(pattern_file));
  if (p.family == "uniform") return simnet::Injection::uniform(nodes);
  Rng rng(seed);
  if (p.family == "permutation") return simnet::Injection::from_pattern(traffic::random_permutation(nodes, rng));
  if (p.family == "shift") return simnet::Injection::from_pattern(traffic::shift(nodes, p.x));
  if (p.family == "random_shift") return simnet::Injection::from_pattern(traffic::random_shift(nodes, rng));
  if (p.family == "random") return simnet::Injection::from_pattern(traffic::random_x(nodes, p.x, rng));
  if (p.family == "all_to_all") return simnet::Injection::from_pattern(traffic::all_to_all(nodes));
  throw ConfigError("pattern '" + p.label() + "' cannot drive open-loop injection");
}

traffic::TrafficPattern make_pattern(const harness::PatternSpec& p, std::size_t nodes, std::uint64_t seed,
                                     const std::string& pattern_file) {
  if (!pattern_file.empty()) return traffic::load_pattern(pattern_file);
  Rng rng(seed);
  if (p.family == "permutation") return traffic::random_permutation(nodes, rng);
  if (p.family == "shift") return traffic::shift(nodes, p.x);
  if (p.family == "random_shift") return traffic::random_shift(nodes, rng);
  if (p.family == "random") return traffic::random_x(nodes, p.x, rng);
  if (p.family == "all_to_all" || p.family == "uniform") return traffic::all_to_all(nodes);
  throw ConfigError("pattern '" + p.label() + "' has no demand form");
}

struct SimOptions {
  std::string mechanism = "ksp-adaptive";
  int channel_latency = 10;
  int buffer_per_vc = 32;
  int vc_count = 0;
  int warmup = 500;
  int sample_cycles = 500;
  int samples = 10;
  int ugal_bias = 0;

  void add(CLI::App* app) {
    app->add_option("--mechanism", mechanism, "SP, RANDOM, ROUND_ROBIN, UGAL_VANILLA, KSP_UGAL, KSP_ADAPTIVE");
    app->add_option("--channel-latency", channel_latency);
    app->add_option("--buffer", buffer_per_vc, "flits per VC");
    app->add_option("--vcs", vc_count, "0 = diameter");
    app->add_option("--warmup", warmup);
    app->add_option("--sample-cycles", sample_cycles);
    app->add_option("--samples", samples);
    app->add_option("--ugal-bias", ugal_bias);
  }

  simnet::SimConfig config(std::uint64_t seed) const {
    simnet::SimConfig c;
    c.routing = simnet::parse_mechanism(mechanism);
    c.channel_latency = channel_latency;
    c.buffer_per_vc = buffer_per_vc;
    c.vc_count = vc_count;
    c.warmup_cycles = warmup;
    c.sample_cycles = sample_cycles;
    c.samples = samples;
    c.ugal_bias = ugal_bias;
    c.rng_seed = seed;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jellyfish topology, path selection and network simulation workbench", "jellyfish"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--out", g.out, "output file (directory for experiment)");
  app.add_option("--jobs", g.jobs, "parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "csv or tsv")->check(CLI::IsMember({"csv", "tsv"}));

  std::string topo_path, paths_path, scheme = "rEDKSP", pattern = "permutation", pattern_file, rates_text,
                                      config_path, stencil = "2DNN", dims = "16x18", mapping = "linear",
                                      workload_file;
  std::uint32_t n = 36, ports = 24, net_ports = 16;
  std::size_t k = 8, pairs = 0;
  std::uint64_t pattern_seed = 1, bytes = 65536;
  double rate = 0.1;
  bool link_dump = false, stop_at_saturation = true, all_rates = false;
  SimOptions sim;

  auto* gen = app.add_subcommand("gen-topo", "generate an RRG(N, x, y) topology");
  gen->add_option("--n", n, "switches")->required();
  gen->add_option("--ports", ports, "ports per switch")->required();
  gen->add_option("--net-ports", net_ports, "switch-to-switch ports per switch")->required();

  auto* paths = app.add_subcommand("paths", "compute path sets for every switch pair");
  paths->add_option("--topo", topo_path)->required();
  paths->add_option("--scheme", scheme, "KSP, rKSP, EDKSP, rEDKSP");
  paths->add_option("--k", k)->check(CLI::PositiveNumber);
  paths->add_option("--pairs", pairs, "sample this many random pairs instead of all");

  auto* quality = app.add_subcommand("path-quality", "path length, disjointness and edge sharing");
  quality->add_option("--paths", paths_path)->required();
  quality->add_option("--topo", topo_path, "also check the paths against this topology");

  auto* model_cmd = app.add_subcommand("model", "multipath flow throughput model");
  model_cmd->add_option("--topo", topo_path)->required();
  model_cmd->add_option("--paths", paths_path)->required();
  model_cmd->add_option("--pattern", pattern, "permutation, shift:<x>, random_shift, random:<x>, all_to_all");
  model_cmd->add_option("--pattern-file", pattern_file);
  model_cmd->add_option("--pattern-seed", pattern_seed);
  model_cmd->add_flag("--link-loads", link_dump, "print per-link loads instead of flow rates");

  auto* sim_cmd = app.add_subcommand("sim", "one open-loop simulation run");
  sim_cmd->add_option("--topo", topo_path)->required();
  sim_cmd->add_option("--paths", paths_path)->required();
  sim_cmd->add_option("--pattern", pattern, "as for model, plus uniform");
  sim_cmd->add_option("--pattern-file", pattern_file);
  sim_cmd->add_option("--pattern-seed", pattern_seed);
  sim_cmd->add_option("--rate", rate, "packets per node per cycle");
  sim_cmd->add_flag("--link-utilization", link_dump, "append per-link utilization");
  sim.add(sim_cmd);

  auto* sweep = app.add_subcommand("sweep", "latency curve and saturation throughput");
  sweep->add_option("--topo", topo_path)->required();
  sweep->add_option("--paths", paths_path)->required();
  sweep->add_option("--pattern", pattern);
  sweep->add_option("--pattern-file", pattern_file);
  sweep->add_option("--pattern-seed", pattern_seed);
  sweep->add_option("--rates", rates_text, "first:last:step or a comma list")->default_str("0.05:1.0:0.05");
  sweep->add_flag("--all-rates", all_rates, "keep going past saturation");
  sim.add(sweep);

  auto* replay_cmd = app.add_subcommand("replay", "stencil communication time");
  replay_cmd->add_option("--topo", topo_path)->required();
  replay_cmd->add_option("--paths", paths_path)->required();
  replay_cmd->add_option("--stencil", stencil, "2DNN, 2DNNdiag, 3DNN, 3DNNdiag");
  replay_cmd->add_option("--dims", dims, "process grid, e.g. 16x18");
  replay_cmd->add_option("--bytes", bytes, "bytes sent per process");
  replay_cmd->add_option("--mapping", mapping)->check(CLI::IsMember({"linear", "random"}));
  replay_cmd->add_option("--workload", workload_file, "mapped workload file instead of a stencil");
  sim.add(replay_cmd);

  auto* experiment = app.add_subcommand("experiment", "run every experiment in a config file");
  experiment->add_option("--config", config_path)->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    const char d = g.delim();
    if (*gen) {
      topology::TopoSpec spec{n, ports, net_ports, g.seed};
      const auto t = topology::generate(spec);
      if (!g.out.empty()) topology::save(t, g.out);
      else topology::write(t, std::cout);
      std::cerr << spec.label() << " seed=" << g.seed << " hash=" << topology::hash_hex(t.graph().content_hash())
                << " diameter=" << topology::diameter(t.graph())
                << " avg_shortest_path=" << topology::avg_shortest_path_length(t.graph()) << '\n';
    } else if (*paths) {
      const auto t = topology::load(topo_path);
      const auto sch = pathsel::parse_scheme(scheme);
      pathsel::PathSet ps;
      if (pairs > 0) {
        const auto sample = pathsel::sample_pairs(t.switch_count(), pairs, g.seed);
        ps = pathsel::build_pathset(t.graph(), sch, k, g.seed, sample, g.jobs);
      } else {
        ps = pathsel::build_pathset(t.graph(), sch, k, g.seed, g.jobs);
      }
      if (!g.out.empty()) pathsel::save(ps, g.out);
      else pathsel::write(ps, std::cout);
    } else if (*quality) {
      const auto ps = topo_path.empty() ? pathsel::load(paths_path)
                                        : pathsel::load(paths_path, topology::load(topo_path).graph());
      const auto q = pathsel::quality_report(ps);
      Sink sink(g.out);
      auto& out = sink.stream();
      out << "scheme" << d << "k" << d << "pairs" << d << "paths" << d << "avg_path_length" << d
          << "pct_fully_disjoint" << d << "max_edge_share" << '\n';
      out << pathsel::to_string(ps.scheme()) << d << ps.k() << d << q.pairs << d << q.paths << d
          << q.avg_path_length << d << q.pct_pairs_fully_disjoint << d << q.max_edge_share << '\n';
    } else if (*model_cmd) {
      const auto t = topology::load(topo_path);
      const auto ps = pathsel::load(paths_path, t.graph());
      const auto pat = make_pattern(harness::PatternSpec::parse(pattern), t.node_count(), pattern_seed, pattern_file);
      const auto r = model::flow_rates(t, ps, pat);
      Sink sink(g.out);
      if (link_dump) model::write_link_loads(t.graph(), r, sink.stream(), d);
      else model::write_csv(r, sink.stream(), d);
    } else if (*sim_cmd) {
      const auto t = topology::load(topo_path);
      const auto ps = pathsel::load(paths_path, t.graph());
      auto cfg = sim.config(g.seed);
      cfg.injection_rate = rate;
      const auto inj = make_injection(harness::PatternSpec::parse(pattern), t.node_count(), pattern_seed, pattern_file);
      const auto stats = simnet::run(t, ps, cfg, inj);
      Sink sink(g.out);
      simnet::write_csv(stats, sink.stream(), d);
      if (link_dump) {
        sink.stream() << "link" << d << "src" << d << "dst" << d << "utilization" << '\n';
        for (jellyfish::LinkId l = 0; l < stats.link_utilization.size(); ++l)
          sink.stream() << l << d << t.graph().link_source(l) << d << t.graph().link_target(l) << d
                        << stats.link_utilization[l] << '\n';
      }
      if (stats.deadlock) throw Error("simulation deadlocked");
    } else if (*sweep) {
      const auto t = topology::load(topo_path);
      const auto ps = pathsel::load(paths_path, t.graph());
      const auto cfg = sim.config(g.seed);
      const auto rates = harness::parse_rates(rates_text.empty() ? "0.05:1.0:0.05" : rates_text);
      const auto inj = make_injection(harness::PatternSpec::parse(pattern), t.node_count(), pattern_seed, pattern_file);
      const auto result = simnet::saturation_sweep(t, ps, cfg, inj, rates, stop_at_saturation && !all_rates);
      Sink sink(g.out);
      auto& out = sink.stream();
      out << "rate" << d << "mean_latency" << d << "accepted_throughput" << d << "saturated" << '\n';
      for (const auto& p : result.curve)
        out << p.rate << d << p.mean_latency << d << p.accepted_throughput << d << (p.saturated ? 1 : 0) << '\n';
      out.flush();
      std::cout << "saturation_throughput=" << result.saturation_throughput << '\n';
    } else if (*replay_cmd) {
      const auto t = topology::load(topo_path);
      const auto ps = pathsel::load(paths_path, t.graph());
      const auto cfg = sim.config(g.seed);
      traffic::Workload w;
      if (!workload_file.empty()) {
        w = traffic::load_workload(workload_file);
        if (!w.mapped()) w = traffic::apply_mapping(w, w.mapping, t.node_count());
      } else {
        std::vector<std::size_t> grid;
        std::stringstream ss(dims);
        for (std::string part; std::getline(ss, part, 'x');) {
          std::size_t v = 0;
          const auto [end, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
          if (ec != std::errc{} || end != part.data() + part.size() || v == 0)
            throw ConfigError("bad --dims '" + dims + "'");
          grid.push_back(v);
        }
        w = traffic::stencil(traffic::parse_stencil(stencil), grid, bytes);
        const traffic::Mapping m{mapping == "random" ? traffic::MappingKind::random : traffic::MappingKind::linear,
                                 g.seed};
        w = traffic::apply_mapping(w, m, t.node_count());
      }
      const auto r = simnet::replay(t, ps, cfg, w);
      Sink sink(g.out);
      auto& out = sink.stream();
      out << "workload" << d << "mechanism" << d << "packets" << d << "completion_cycles" << d
          << "completion_seconds" << d << "deadlock" << '\n';
      out << w.name << d << simnet::to_string(cfg.routing) << d << r.packets << d << r.completion_cycles << d
          << r.completion_seconds << d << (r.deadlock ? 1 : 0) << '\n';
      if (r.deadlock) throw Error("replay deadlocked");
    } else if (*experiment) {
      const auto experiments = harness::load_config(config_path);
      const std::string dir = g.out.empty() ? "results" : g.out;
      std::size_t failed = 0;
      for (const auto& e : experiments) {
        const auto r = harness::run_experiment(e, g.jobs);
        harness::write_outputs(r, dir, d);
        failed += r.failed_cells;
        std::cerr << e.name << ": " << r.rows.size() << " rows, " << r.failed_cells << " failed cell(s)\n";
      }
      if (failed > 0) return kPartial;
    }
  } catch (const ParseError& e) {
    std::cerr << "error: parse: " << e.what() << "\n";
    return kValidation;
  } catch (const InvariantViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}
