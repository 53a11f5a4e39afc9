// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jellyfish/pathsel.hpp"
#include "jellyfish/simnet.hpp"
#include "jellyfish/topology.hpp"
#include "jellyfish/traffic.hpp"

namespace jellyfish::harness {

enum class Evaluator { paths, model, sim_sweep, replay };

std::string_view to_string(Evaluator e);
Evaluator parse_evaluator(std::string_view name);

// Traffic family for model, sweep and replay cells.
//   permutation | shift:<x> | random_shift | random:<x> | all_to_all | uniform
//   stencil:<kind>:<d1>x<d2>[x<d3>]:<bytes>[:linear|:random]
struct PatternSpec {
  std::string family = "permutation";
  std::size_t x = 0;

  traffic::StencilKind stencil = traffic::StencilKind::NN2D;
  std::vector<std::size_t> dims;
  std::uint64_t bytes = 0;
  traffic::MappingKind mapping = traffic::MappingKind::linear;

  static PatternSpec parse(std::string_view text);  // throws ConfigError
  std::string label() const;
  bool is_stencil() const { return family == "stencil"; }
};

struct Experiment {
  std::string name = "experiment";
  Evaluator evaluator = Evaluator::model;
  std::vector<topology::TopoSpec> topologies;  // rng_seed ignored; see topo_seeds
  std::vector<std::uint64_t> topo_seeds{1};
  std::vector<std::uint64_t> pattern_seeds{1};
  std::vector<pathsel::Scheme> schemes{pathsel::Scheme::KSP};
  std::vector<std::size_t> ks{8};
  std::vector<simnet::Mechanism> mechanisms{simnet::Mechanism::KSP_ADAPTIVE};
  PatternSpec pattern;
  std::uint64_t master_seed = 1;
  std::size_t sample_pairs = 0;  // paths evaluator: 0 = every ordered pair
  simnet::SimConfig sim;
  std::vector<double> rates;  // sweep grid; empty = 0.05:1.0:0.05

  void validate() const;  // throws ConfigError
};

// INI text: one section per experiment, the section name is the experiment
// name. Keys are documented in the README.
std::vector<Experiment> parse_config(std::istream& in);
std::vector<Experiment> load_config(const std::filesystem::path& path);

// "1,2,5" or "1..10" (inclusive) or a mix.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
// "first:last:step" or a comma list.
std::vector<double> parse_rates(std::string_view text);

// Seeds are hashes of the master seed and the cell coordinates, so adding a
// scheme or mechanism leaves every existing cell unchanged.
std::uint64_t topology_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed);
std::uint64_t pattern_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                           std::uint64_t pattern_seed);
std::uint64_t path_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                        pathsel::Scheme scheme, std::size_t k);
std::uint64_t sim_seed(const Experiment& e, const topology::TopoSpec& t, std::uint64_t topo_seed,
                       std::uint64_t pattern_seed, pathsel::Scheme scheme, std::size_t k, simnet::Mechanism m);

// Long-format row. Columns that do not apply to an evaluator hold "-".
struct ResultRow {
  std::string topology;
  std::string topo_seed;
  std::string pattern_seed;
  std::string scheme;
  std::string k;
  std::string mechanism;
  std::string metric;
  std::optional<double> value;
  std::string error;
};

struct SummaryRow {
  std::string topology;
  std::string scheme;
  std::string k;
  std::string mechanism;
  std::string metric;
  std::optional<double> mean;  // empty when every cell failed
  std::size_t cells = 0;
  std::size_t errors = 0;
};

struct ExperimentResult {
  std::string name;
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::size_t failed_cells = 0;
};

ExperimentResult run_experiment(const Experiment& e, unsigned jobs = 1);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_rows(const std::vector<ResultRow>& rows, std::ostream& out, char delimiter = ',');
void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out, char delimiter = ',');

// Pivot of one metric: a row per topology (and mechanism when one is set),
// a column per scheme(k). Failed cells print as ERR with a footnote count.
struct Table {
  std::string metric;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  std::vector<std::vector<std::string>> cells;
  std::size_t error_cells = 0;
};

std::vector<Table> report_tables(const std::vector<SummaryRow>& summary);
void write_table(const Table& t, std::ostream& out, char delimiter = ',');

// Writes <name>.csv, <name>_summary.csv and <name>_<metric>.csv tables.
void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir, char delimiter = ',');

}  // namespace jellyfish::harness
