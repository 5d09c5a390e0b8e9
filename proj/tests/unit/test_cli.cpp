#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "sigtrust/cli.hpp"

using namespace sigtrust;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("sigtrust_cli_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::IoError;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

// Small enough that a full figure grid runs in seconds.
const std::vector<std::string> kTiny = {"device_count=100", "cluster_count=4", "total_reports=600"};

}  // namespace

TEST_CASE("config text parsing", "[cli]") {
  std::istringstream in("\xEF\xBB\xBF# comment\n\nseed = 9   # trailing\n  tms=DDTMS\n");
  const auto entries = parse_config(in, "x.conf");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].key == "seed");
  CHECK(entries[0].value == "9");
  CHECK(entries[0].origin == "x.conf:3");
  CHECK(entries[1].value == "DDTMS");

  std::istringstream bad("seed 9\n");
  const auto msg = message_of([&] { (void)parse_config(bad, "b.conf"); });
  CHECK(msg.find("b.conf:1") != std::string::npos);
  CHECK(code_of([] { (void)parse_override("seed"); }) == Errc::ConfigParseError);
  CHECK(parse_override("alpha=0.9").value == "0.9");
}

TEST_CASE("settings reject unknown keys and bad values by name", "[cli]") {
  RunPlan plan;
  const auto unknown = message_of([&] { apply_setting(plan, {"colour", "red", "c.conf:4"}); });
  CHECK(unknown.find("colour") != std::string::npos);
  CHECK(unknown.find("c.conf:4") != std::string::npos);

  const auto bad = message_of([&] { apply_setting(plan, {"device_count", "many", "--set"}); });
  CHECK(bad.find("device_count") != std::string::npos);
  CHECK(code_of([&] { apply_setting(plan, {"tms", "Magic", "--set"}); }) == Errc::ConfigParseError);
  CHECK(code_of([&] { apply_setting(plan, {"preset", "fig9z", "--set"}); }) == Errc::ConfigParseError);
}

TEST_CASE("out-of-range fractions name the key", "[cli]") {
  CliOptions options;
  options.sets = {"malicious_fraction=0.9"};
  const auto msg = message_of([&] { (void)resolve_plan(options); });
  CHECK(msg.rfind("InvalidRange", 0) == 0);
  CHECK(msg.find("malicious_fraction") != std::string::npos);

  options.sets = {"attack_density=0.01"};
  CHECK(message_of([&] { (void)resolve_plan(options); }).find("attack_density") != std::string::npos);

  options.sets = {"sweep_axis=attack_density", "sweep_values=0.1,0.7"};
  CHECK(message_of([&] { (void)resolve_plan(options); }).find("sweep_values") != std::string::npos);

  options.unsafe_ranges = true;
  CHECK_NOTHROW(resolve_plan(options));
}

TEST_CASE("precedence runs defaults, preset, file, --set, flags", "[cli]") {
  TempDir dir;
  const auto conf = dir.path / "run.conf";
  write(conf, "preset = fig5a\nseed = 3\njobs = 2\nalpha = 0.9\nname = fromfile\n");

  CliOptions options;
  options.config = conf;
  auto plan = resolve_plan(options);
  CHECK(plan.scenario.attack_kind == AttackKind::BadMouthing);
  CHECK(plan.scenario.attack_scale == AttackScale::Small);
  CHECK(plan.axis == SweepAxis::MaliciousFraction);
  CHECK(plan.values.size() == 10);
  CHECK(plan.scenario.seed == 3);
  CHECK(plan.jobs == 2);
  CHECK(plan.scenario.thresholds.alpha == 0.9);
  CHECK(plan.name == "fromfile");

  options.sets = {"seed=4", "alpha=0.8"};
  plan = resolve_plan(options);
  CHECK(plan.scenario.seed == 4);
  CHECK(plan.scenario.thresholds.alpha == 0.8);

  options.seed = 5;
  options.jobs = 1;
  options.preset = "fig6b";
  plan = resolve_plan(options);
  CHECK(plan.scenario.seed == 5);
  CHECK(plan.jobs == 1);
  CHECK(plan.axis == SweepAxis::AttackDensity);
  CHECK(plan.scenario.attack_scale == AttackScale::Large);
  CHECK(plan.name == "fromfile");  // the file still overrides the preset's name
}

TEST_CASE("presets cover every figure", "[cli]") {
  for (const auto& f : kFigures) {
    RunPlan plan;
    apply_preset(plan, f.name);
    CHECK(plan.axis == f.axis);
    CHECK(plan.tms.size() == 6);
    REQUIRE(plan.values.size() == 10);
    CHECK(plan.values.front() == 0.05);
    CHECK(plan.values.back() == 0.5);
    CHECK(plan.values[2] == 0.15);
    CHECK_NOTHROW(validate_plan(plan));
  }
}

TEST_CASE("figure preset writes a full grid, plot table and replayable manifest", "[cli]") {
  TempDir dir;
  CliOptions options;
  options.preset = "fig3b";
  options.out = dir.path;
  options.sets = kTiny;
  const auto plan = resolve_plan(options);
  const auto outputs = execute(plan);
  CHECK(outputs.records.size() == 60);
  REQUIRE(outputs.plot);

  std::ifstream plot_in(*outputs.plot);
  const auto table = read_plot_table(plot_in);
  CHECK(table.axis == "malicious_fraction");
  CHECK(table.series.size() == 6);
  CHECK(table.series.front() == "Trust2Vec");
  CHECK(table.x.size() == 10);

  std::ifstream csv(outputs.results);
  CHECK(emit_plot_data(csv, *find_figure("fig3b")) == table);

  // Rerunning from the manifest reproduces the results byte for byte.
  const auto first = slurp(outputs.results);
  CliOptions again;
  again.config = outputs.manifest;
  again.out = dir.path / "again";
  const auto rerun = execute(resolve_plan(again));
  CHECK(slurp(rerun.results) == first);
  CHECK(slurp(rerun.manifest).find("seed = 1") != std::string::npos);
}

TEST_CASE("plot tables round-trip and report missing cells", "[cli]") {
  const std::string header =
      "tms,attack_kind,scale,malicious_fraction,attack_density,asr,true_positives,false_positives,runtime_ms\n";
  std::string rows;
  for (auto tms : kFigureTms) {
    for (double x : {0.05, 0.1}) {
      rows += std::string(to_string(tms)) + ",self_promoting,small,0.2," + format_double(x) + ",0.5,1,0,0\n";
    }
  }
  rows += "Trust2Vec,self_promoting,small,0.2,0.1,0.25,1,0,0\n";  // repeated cell is averaged
  rows += "DDTMS,bad_mouthing,small,0.2,0.1,0.9,1,0,0\n";        // other figure, ignored

  std::istringstream in(header + rows);
  const auto table = emit_plot_data(in, *find_figure("fig4a"));
  CHECK(table.axis == "attack_density");
  CHECK(table.x == std::vector<double>{0.05, 0.1});
  CHECK(table.y[1][0] == 0.375);
  CHECK(table.y[1][1] == 0.5);

  std::ostringstream out;
  write_plot_table(out, table);
  std::istringstream back(out.str());
  CHECK(read_plot_table(back) == table);

  std::istringstream partial(header + "DDTMS,self_promoting,small,0.2,0.05,0.5,1,0,0\n");
  const auto msg = message_of([&] { (void)emit_plot_data(partial, *find_figure("fig4a")); });
  CHECK(msg.rfind("MissingSeries", 0) == 0);
  CHECK(msg.find("Trust2Vec") != std::string::npos);

  std::istringstream none(header);
  CHECK(code_of([&] { (void)emit_plot_data(none, *find_figure("fig4a")); }) == Errc::MissingSeries);
  std::istringstream headless("a,b\n1,2\n");
  CHECK(code_of([&] { (void)emit_plot_data(headless, *find_figure("fig4a")); }) == Errc::ParseError);
}

TEST_CASE("single runs write one row", "[cli]") {
  TempDir dir;
  CliOptions options;
  options.out = dir.path;
  options.sets = kTiny;
  options.sets.push_back("tms=LightTrust");
  const auto outputs = execute(resolve_plan(options));
  CHECK(outputs.records.size() == 1);
  CHECK_FALSE(outputs.plot);
  const auto text = slurp(outputs.results);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.find("\nLightTrust,self_promoting,large,0.2,0.25,") != std::string::npos);
}
