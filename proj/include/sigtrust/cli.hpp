#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sigtrust/simulator.hpp"

namespace sigtrust {

inline constexpr std::string_view kToolVersion = "0.3.0";

/// One `key = value` line; `origin` is "file:line" or "--set" for diagnostics.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::string origin;
};

/// Flat key/value text: `#` starts a comment, blank lines are skipped.
std::vector<ConfigEntry> parse_config(std::istream& in, std::string_view origin);

/// Splits a `--set key=value` argument.
ConfigEntry parse_override(std::string_view text);

struct FigureSpec {
  std::string_view name;
  AttackKind kind;
  AttackScale scale;
  SweepAxis axis;
};

inline constexpr FigureSpec kFigures[] = {
    {"fig3a", AttackKind::SelfPromoting, AttackScale::Small, SweepAxis::MaliciousFraction},
    {"fig3b", AttackKind::SelfPromoting, AttackScale::Large, SweepAxis::MaliciousFraction},
    {"fig4a", AttackKind::SelfPromoting, AttackScale::Small, SweepAxis::AttackDensity},
    {"fig4b", AttackKind::SelfPromoting, AttackScale::Large, SweepAxis::AttackDensity},
    {"fig5a", AttackKind::BadMouthing, AttackScale::Small, SweepAxis::MaliciousFraction},
    {"fig5b", AttackKind::BadMouthing, AttackScale::Large, SweepAxis::MaliciousFraction},
    {"fig6a", AttackKind::BadMouthing, AttackScale::Small, SweepAxis::AttackDensity},
    {"fig6b", AttackKind::BadMouthing, AttackScale::Large, SweepAxis::AttackDensity},
};

std::optional<FigureSpec> find_figure(std::string_view name);

/// Everything a run needs once defaults, preset, config file and flags are merged.
struct RunPlan {
  ScenarioConfig scenario{};
  std::optional<SweepAxis> axis;   // unset: a single run_scenario
  std::vector<double> values;
  std::vector<TmsKind> tms;        // sweep series; empty means {scenario.tms}
  std::size_t jobs{1};
  std::filesystem::path out{"results"};
  std::string name{"run"};
  std::optional<std::string> figure;
};

/// Loads a figure grid: ten points 0.05..0.50 on the figure's axis, the
/// other fraction held at 0.25 (density) or 0.2 (malicious), all six TMSs.
/// Throws ConfigParseError naming `preset` for unknown names.
void apply_preset(RunPlan& plan, std::string_view name);

/// Throws ConfigParseError naming the key for unknown keys or unparsable values.
void apply_setting(RunPlan& plan, const ConfigEntry& entry);

/// Checks ranges; InvalidRange names the offending key.
void validate_plan(const RunPlan& plan);

struct CliOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::filesystem::path> out;
  std::vector<std::string> sets;
  bool unsafe_ranges{false};
};

/// Precedence, lowest first: defaults, preset, config file, --set, dedicated flags.
RunPlan resolve_plan(const CliOptions& options);

/// Every key with its resolved value, readable back through parse_config.
void write_manifest(std::ostream& out, const RunPlan& plan);

struct RunOutputs {
  std::filesystem::path results;
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> plot;
  std::vector<MetricsRecord> records;
};

/// Runs the plan and writes <out>/<name>.csv, <name>.manifest and, for a
/// figure, <name>.plot.csv. Throws IoError when a file cannot be written.
RunOutputs execute(const RunPlan& plan);

struct PlotTable {
  std::string axis;                  // x column name
  std::vector<std::string> series;   // one per TMS
  std::vector<double> x;
  std::vector<std::vector<double>> y;  // [row][series]

  bool operator==(const PlotTable&) const = default;
};

/// Reshapes a results CSV into one row per x value and one ASR column per
/// TMS in `series`. Repeated cells are averaged. Throws MissingSeries naming
/// the absent (tms, x) cells.
PlotTable emit_plot_data(std::istream& results_csv, const FigureSpec& figure,
                         std::span<const TmsKind> series = kFigureTms);
void write_plot_table(std::ostream& out, const PlotTable& table);
PlotTable read_plot_table(std::istream& in);

}  // namespace sigtrust
