#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "brw/engine.hpp"
#include "brw/mobile.hpp"
#include "brw/multitype.hpp"
#include "brw/scheme.hpp"

namespace brw {

enum class ExperimentKind { tail, pdf, laplace_gt, laplace_le, laplace_eq, grid, multitype_reduce, mobile, ode_check };
const char* to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

// Declared acceptance band for one column of one table. When `where_column` is
// set, only rows whose value in that column equals `where_value` are checked.
struct Tolerance {
  std::string table;
  std::string column;
  double low = -std::numeric_limits<double>::infinity();
  double high = std::numeric_limits<double>::infinity();
  std::string where_column;
  double where_value = 0;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::tail;
  std::string name;
  std::optional<SchemeSpec> scheme;
  std::optional<MultitypeSpec> multitype;
  std::string base_type;
  BoltzmannWeights boltzmann;
  std::vector<double> r_list;
  std::optional<double> alpha;
  std::uint64_t n = 0;
  std::uint64_t n_trees = 10'000;
  int r_max = 0;  // 0 picks a default from r_list
  std::optional<std::uint64_t> seed;
  int workers = 1;
  SimCaps caps;
  std::optional<int> laplace_r;
  double weight_cutoff = 50;
  std::vector<Tolerance> tolerances;
  std::string out_dir;  // empty: no files written
};

// Field-level validation; throws ConfigError naming the field.
void validate(const ExperimentConfig& cfg);

// `base_dir` resolves relative scheme paths. The output directory defaults to
// $BRWLAB_OUT_DIR when the config does not name one.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Named scheme presets accepted wherever a scheme is expected.
std::optional<SchemeSpec> scheme_preset(const std::string& name);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // NaN marks an empty cell

  std::size_t column_index(const std::string& c) const;  // throws when absent
  bool has_column(const std::string& c) const;
  double at(std::size_t row, const std::string& c) const { return rows.at(row)[column_index(c)]; }
};

struct Check {
  std::string table;
  std::string column;
  std::size_t row = 0;
  double value = 0;
  double low = 0;
  double high = 0;
  bool passed = false;
};

struct Report {
  std::string name;
  ExperimentKind kind = ExperimentKind::tail;
  nlohmann::json config;   // canonical echo, without run-specific fields
  nlohmann::json summary;  // kind-specific scalars
  std::vector<Table> tables;
  std::vector<Tolerance> tolerances;
  std::vector<Check> checks;
  int workers = 1;
  double wall_seconds = 0;

  bool passed() const;
  const Table& table(const std::string& name) const;
};

// Tolerances that apply unless the config declares its own for the same table and column.
std::vector<Tolerance> default_tolerances(ExperimentKind kind);

Report run_experiment(const ExperimentConfig& cfg);

// Evaluates tolerances and appends a `pass` column (1, 0, or empty when unchecked).
void apply_tolerances(Report& report);

std::string to_csv(const Table& t);
nlohmann::json to_json(const Report& r, bool include_run = true);
// Writes <dir>/<name>.json and <dir>/<name>_<table>.csv.
void write_report(const Report& r, const std::string& dir);

// 0 when every check passes, 2 otherwise.
int exit_code(const Report& r);

}  // namespace brw
