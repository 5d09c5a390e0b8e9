#include "sigtrust/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace sigtrust {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(Errc::ConfigParseError,
              std::string(key) + ": cannot parse '" + std::string(value) + "' as " + std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, std::string_view expected) {
  text = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || end != text.data() + text.size()) bad_value(key, text, expected);
  return value;
}

std::size_t to_size(std::string_view key, std::string_view v) {
  return parse_number<std::size_t>(key, v, "a non-negative integer");
}
std::uint64_t to_u64(std::string_view key, std::string_view v) {
  return parse_number<std::uint64_t>(key, v, "a non-negative integer");
}
double to_double(std::string_view key, std::string_view v) { return parse_number<double>(key, v, "a number"); }

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

template <typename T>
T require(std::string_view key, std::string_view v, std::optional<T> parsed, std::string_view expected) {
  if (!parsed) bad_value(key, v, expected);
  return *parsed;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + format_double(values[i]);
  return out;
}

std::string join_tms(const std::vector<TmsKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) out += (i ? "," : "") + std::string(to_string(kinds[i]));
  return out;
}

struct KeyDef {
  std::string_view key;
  std::function<void(RunPlan&, std::string_view)> set;
  std::function<std::string(const RunPlan&)> get;
};

#define SIZE_KEY(name, field)                                                          \
  KeyDef{name, [](RunPlan& p, std::string_view v) { p.field = to_size(name, v); }, \
         [](const RunPlan& p) { return std::to_string(p.field); }}
#define DOUBLE_KEY(name, field)                                                          \
  KeyDef{name, [](RunPlan& p, std::string_view v) { p.field = to_double(name, v); }, \
         [](const RunPlan& p) { return format_double(p.field); }}
#define BOOL_KEY(name, field)                                                          \
  KeyDef{name, [](RunPlan& p, std::string_view v) { p.field = to_bool(name, v); }, \
         [](const RunPlan& p) { return std::string(p.field ? "true" : "false"); }}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      SIZE_KEY("device_count", scenario.device_count),
      SIZE_KEY("cluster_count", scenario.cluster_count),
      DOUBLE_KEY("intra_cluster_interaction_prob", scenario.intra_cluster_interaction_prob),
      SIZE_KEY("partners_per_device", scenario.partners_per_device),
      DOUBLE_KEY("benign_positive_prob", scenario.benign_positive_prob),
      KeyDef{"attack_kind",
             [](RunPlan& p, std::string_view v) {
               p.scenario.attack_kind =
                   require("attack_kind", v, parse_attack_kind(v), "self_promoting or bad_mouthing");
             },
             [](const RunPlan& p) { return std::string(to_string(p.scenario.attack_kind)); }},
      KeyDef{"attack_scale",
             [](RunPlan& p, std::string_view v) {
               p.scenario.attack_scale = require("attack_scale", v, parse_attack_scale(v), "small or large");
             },
             [](const RunPlan& p) { return std::string(to_string(p.scenario.attack_scale)); }},
      DOUBLE_KEY("malicious_fraction", scenario.malicious_fraction),
      DOUBLE_KEY("attack_density", scenario.attack_density),
      SIZE_KEY("total_reports", scenario.total_reports),
      KeyDef{"tms",
             [](RunPlan& p, std::string_view v) { p.scenario.tms = require("tms", v, parse_tms(v), "a TMS name"); },
             [](const RunPlan& p) { return std::string(to_string(p.scenario.tms)); }},
      KeyDef{"seed", [](RunPlan& p, std::string_view v) { p.scenario.seed = to_u64("seed", v); },
             [](const RunPlan& p) { return std::to_string(p.scenario.seed); }},
      SIZE_KEY("retrain_interval", scenario.retrain_interval),
      SIZE_KEY("width", scenario.train.width),
      SIZE_KEY("walks_per_device", scenario.train.walks_per_device),
      SIZE_KEY("walk_length", scenario.train.walk_length),
      SIZE_KEY("window", scenario.train.window),
      DOUBLE_KEY("lr0", scenario.train.lr0),
      DOUBLE_KEY("lr_floor", scenario.train.lr_floor),
      KeyDef{"train_seed", [](RunPlan& p, std::string_view v) { p.scenario.train.seed = to_u64("train_seed", v); },
             [](const RunPlan& p) { return std::to_string(p.scenario.train.seed); }},
      DOUBLE_KEY("alpha", scenario.thresholds.alpha),
      SIZE_KEY("beta", scenario.thresholds.beta),
      DOUBLE_KEY("gamma", scenario.thresholds.gamma),
      DOUBLE_KEY("ddtms_alpha", scenario.baseline.ddtms_alpha),
      DOUBLE_KEY("ddtms_beta", scenario.baseline.ddtms_beta),
      DOUBLE_KEY("td2d_omega", scenario.baseline.td2d_omega),
      DOUBLE_KEY("liu_alpha", scenario.baseline.liu_alpha),
      DOUBLE_KEY("liu_beta", scenario.baseline.liu_beta),
      SIZE_KEY("kmeans_k", scenario.baseline.kmeans_k),
      DOUBLE_KEY("block_threshold", scenario.baseline.block_threshold),
      SIZE_KEY("repeat_limit", scenario.baseline.repeat_limit),
      SIZE_KEY("repeat_window", scenario.baseline.repeat_window),
      SIZE_KEY("cluster_interval", scenario.baseline.cluster_interval),
      BOOL_KEY("unsafe_ranges", scenario.unsafe_ranges),
      BOOL_KEY("timing", scenario.timing),
      KeyDef{"sweep_axis",
             [](RunPlan& p, std::string_view v) {
               if (v == "none") {
                 p.axis.reset();
               } else {
                 p.axis = require("sweep_axis", v, parse_axis(v), "malicious_fraction, attack_density or none");
               }
             },
             [](const RunPlan& p) { return p.axis ? std::string(to_string(*p.axis)) : std::string("none"); }},
      KeyDef{"sweep_values",
             [](RunPlan& p, std::string_view v) {
               p.values.clear();
               if (trim(v).empty()) return;
               for (auto part : split(v, ',')) p.values.push_back(to_double("sweep_values", part));
             },
             [](const RunPlan& p) { return join_doubles(p.values); }},
      KeyDef{"sweep_tms",
             [](RunPlan& p, std::string_view v) {
               p.tms.clear();
               if (trim(v).empty()) return;
               for (auto part : split(v, ',')) {
                 part = trim(part);
                 p.tms.push_back(require("sweep_tms", part, parse_tms(part), "a TMS name"));
               }
             },
             [](const RunPlan& p) { return join_tms(p.tms); }},
      SIZE_KEY("jobs", jobs),
      KeyDef{"out", [](RunPlan& p, std::string_view v) { p.out = std::string(v); },
             [](const RunPlan& p) { return p.out.string(); }},
      KeyDef{"name", [](RunPlan& p, std::string_view v) { p.name = std::string(v); },
             [](const RunPlan& p) { return p.name; }},
      KeyDef{"figure",
             [](RunPlan& p, std::string_view v) {
               if (v == "none") {
                 p.figure.reset();
                 return;
               }
               if (!find_figure(v)) bad_value("figure", v, "fig3a..fig6b or none");
               p.figure = std::string(v);
             },
             [](const RunPlan& p) { return p.figure.value_or("none"); }},
  };
  return table;
}

#undef SIZE_KEY
#undef DOUBLE_KEY
#undef BOOL_KEY

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.flush();
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
}

std::vector<std::string> read_csv_row(std::string_view line) {
  std::vector<std::string> cells;
  for (auto c : split(trim(line), ',')) cells.emplace_back(trim(c));
  return cells;
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in, std::string_view origin) {
  std::vector<ConfigEntry> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view(line);
    if (number == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(number);
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::ConfigParseError, where + ": expected 'key = value', got '" + std::string(view) + "'");
    }
    const auto key = trim(view.substr(0, eq));
    if (key.empty()) throw Error(Errc::ConfigParseError, where + ": missing key before '='");
    entries.push_back({std::string(key), std::string(trim(view.substr(eq + 1))), where});
  }
  return entries;
}

ConfigEntry parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || trim(text.substr(0, eq)).empty()) {
    throw Error(Errc::ConfigParseError, "--set expects key=value, got '" + std::string(text) + "'");
  }
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))), "--set"};
}

std::optional<FigureSpec> find_figure(std::string_view name) {
  for (const auto& f : kFigures) {
    if (f.name == name) return f;
  }
  return std::nullopt;
}

void apply_preset(RunPlan& plan, std::string_view name) {
  const auto figure = find_figure(name);
  if (!figure) {
    throw Error(Errc::ConfigParseError, "preset: unknown preset '" + std::string(name) + "' (fig3a..fig6b)");
  }
  plan.scenario.attack_kind = figure->kind;
  plan.scenario.attack_scale = figure->scale;
  plan.scenario.malicious_fraction = 0.2;
  plan.scenario.attack_density = 0.25;
  plan.axis = figure->axis;
  plan.values.clear();
  for (int i = 1; i <= 10; ++i) plan.values.push_back(i / 20.0);
  plan.tms.assign(std::begin(kFigureTms), std::end(kFigureTms));
  plan.name = std::string(figure->name);
  plan.figure = std::string(figure->name);
}

void apply_setting(RunPlan& plan, const ConfigEntry& entry) {
  if (entry.key == "preset") {
    apply_preset(plan, entry.value);
    return;
  }
  for (const auto& def : key_table()) {
    if (def.key == entry.key) {
      def.set(plan, entry.value);
      return;
    }
  }
  throw Error(Errc::ConfigParseError, entry.origin + ": unknown key '" + entry.key + "'");
}

void validate_plan(const RunPlan& plan) {
  plan.scenario.validate();
  if (plan.jobs == 0) throw Error(Errc::InvalidRange, "jobs must be at least 1");
  if (plan.name.empty() || plan.name.find('/') != std::string::npos) {
    throw Error(Errc::InvalidRange, "name must be a non-empty file stem");
  }
  if (!plan.axis) return;
  if (plan.values.empty()) throw Error(Errc::InvalidRange, "sweep_values must not be empty for a sweep");
  const bool unsafe = plan.scenario.unsafe_ranges;
  for (double v : plan.values) {
    if (unsafe ? (v < 0.0 || v > 1.0) : (v < 0.05 || v > 0.5)) {
      throw Error(Errc::InvalidRange, "sweep_values contains " + format_double(v) +
                                          (unsafe ? " outside [0, 1]" : " outside [0.05, 0.5]"));
    }
  }
}

RunPlan resolve_plan(const CliOptions& options) {
  RunPlan plan;
  std::vector<ConfigEntry> file;
  if (options.config) {
    std::ifstream in(*options.config);
    if (!in) throw Error(Errc::IoError, "cannot open config " + options.config->string());
    file = parse_config(in, options.config->string());
  }
  std::optional<std::string> preset = options.preset;
  for (const auto& e : file) {
    if (e.key == "preset" && !preset) preset = e.value;
  }
  if (preset) apply_preset(plan, *preset);
  for (const auto& e : file) {
    if (e.key != "preset") apply_setting(plan, e);
  }
  for (const auto& s : options.sets) apply_setting(plan, parse_override(s));
  if (options.seed) plan.scenario.seed = *options.seed;
  if (options.jobs) plan.jobs = *options.jobs;
  if (options.out) plan.out = *options.out;
  if (options.unsafe_ranges) plan.scenario.unsafe_ranges = true;
  validate_plan(plan);
  return plan;
}

void write_manifest(std::ostream& out, const RunPlan& plan) {
  out << "# sigtrust " << kToolVersion << '\n';
  out << "# results = " << (plan.out / (plan.name + ".csv")).string() << '\n';
  for (const auto& def : key_table()) out << def.key << " = " << def.get(plan) << '\n';
}

RunOutputs execute(const RunPlan& plan) {
  validate_plan(plan);
  RunOutputs outputs;
  std::error_code ec;
  std::filesystem::create_directories(plan.out, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + plan.out.string() + ": " + ec.message());

  if (plan.axis) {
    std::vector<TmsKind> series = plan.tms;
    if (series.empty()) series.push_back(plan.scenario.tms);
    outputs.records = sweep(plan.scenario, *plan.axis, plan.values, series, plan.jobs);
  } else {
    outputs.records.push_back(run_scenario(plan.scenario));
  }

  std::ostringstream csv;
  write_results(csv, outputs.records);
  outputs.results = plan.out / (plan.name + ".csv");
  outputs.manifest = plan.out / (plan.name + ".manifest");
  write_file(outputs.results, csv.str());
  std::ostringstream manifest;
  write_manifest(manifest, plan);
  write_file(outputs.manifest, manifest.str());

  if (plan.figure) {
    std::istringstream back(csv.str());
    std::vector<TmsKind> series = plan.tms;
    if (series.empty()) series.push_back(plan.scenario.tms);
    const auto table = emit_plot_data(back, *find_figure(*plan.figure), series);
    std::ostringstream plot;
    write_plot_table(plot, table);
    outputs.plot = plan.out / (plan.name + ".plot.csv");
    write_file(*outputs.plot, plot.str());
  }
  return outputs;
}

PlotTable emit_plot_data(std::istream& results_csv, const FigureSpec& figure, std::span<const TmsKind> series) {
  std::string line;
  if (!std::getline(results_csv, line)) throw Error(Errc::ParseError, "results file is empty");
  const auto header = read_csv_row(line);
  auto column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::ParseError, "results header lacks '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto c_tms = column("tms");
  const auto c_kind = column("attack_kind");
  const auto c_scale = column("scale");
  const auto c_x = column(to_string(figure.axis));
  const auto c_asr = column("asr");

  PlotTable table;
  table.axis = std::string(to_string(figure.axis));
  for (auto kind : series) table.series.emplace_back(to_string(kind));
  std::map<double, std::vector<std::pair<double, std::size_t>>> cells;  // x -> per series (sum, count)
  std::size_t row = 1;
  while (std::getline(results_csv, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells_in = read_csv_row(line);
    if (cells_in.size() != header.size()) {
      throw Error(Errc::ParseError, "results line " + std::to_string(row) + " has " +
                                        std::to_string(cells_in.size()) + " cells, expected " +
                                        std::to_string(header.size()));
    }
    if (cells_in[c_kind] != to_string(figure.kind) || cells_in[c_scale] != to_string(figure.scale)) continue;
    const auto column_of = std::find(table.series.begin(), table.series.end(), cells_in[c_tms]);
    if (column_of == table.series.end()) continue;
    const double x = to_double(table.axis, cells_in[c_x]);
    auto& slots = cells[x];
    slots.resize(table.series.size());
    auto& slot = slots[static_cast<std::size_t>(column_of - table.series.begin())];
    slot.first += to_double("asr", cells_in[c_asr]);
    ++slot.second;
  }
  if (cells.empty()) {
    throw Error(Errc::MissingSeries, std::string(figure.name) + ": no matching rows in results");
  }
  std::string missing;
  std::size_t absent = 0;
  for (const auto& [x, slots] : cells) {
    std::vector<double> values;
    for (std::size_t s = 0; s < table.series.size(); ++s) {
      if (slots[s].second == 0) {
        if (++absent <= 8) missing += (missing.empty() ? "" : ", ") + table.series[s] + "@" + format_double(x);
        values.push_back(0.0);
      } else {
        values.push_back(slots[s].first / static_cast<double>(slots[s].second));
      }
    }
    table.x.push_back(x);
    table.y.push_back(std::move(values));
  }
  if (absent > 8) missing += " and " + std::to_string(absent - 8) + " more";
  if (!missing.empty()) {
    throw Error(Errc::MissingSeries, std::string(figure.name) + " lacks " + missing);
  }
  return table;
}

void write_plot_table(std::ostream& out, const PlotTable& table) {
  out << table.axis;
  for (const auto& s : table.series) out << ',' << s;
  out << '\n';
  for (std::size_t r = 0; r < table.x.size(); ++r) {
    out << format_double(table.x[r]);
    for (double v : table.y[r]) out << ',' << format_double(v);
    out << '\n';
  }
}

PlotTable read_plot_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "plot table is empty");
  const auto header = read_csv_row(line);
  if (header.size() < 2) throw Error(Errc::ParseError, "plot table needs an x column and a series");
  PlotTable table;
  table.axis = header.front();
  table.series.assign(header.begin() + 1, header.end());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = read_csv_row(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::ParseError, "plot line " + std::to_string(row) + " is ragged");
    }
    table.x.push_back(to_double(table.axis, cells[0]));
    std::vector<double> values;
    for (std::size_t c = 1; c < cells.size(); ++c) values.push_back(to_double(header[c], cells[c]));
    table.y.push_back(std::move(values));
  }
  return table;
}

}  // namespace sigtrust
