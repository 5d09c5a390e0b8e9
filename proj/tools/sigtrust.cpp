#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "sigtrust/cli.hpp"

namespace {

int exit_code(sigtrust::Errc code) {
  switch (code) {
    case sigtrust::Errc::ConfigParseError:
    case sigtrust::Errc::InvalidRange:
    case sigtrust::Errc::InvalidConfig:
    case sigtrust::Errc::ConfigMismatch:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-based trust management: scenario runs, sweeps and figure data"};
  app.set_version_flag("--version", std::string(sigtrust::kToolVersion));

  sigtrust::CliOptions options;
  std::string config, preset, out;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  auto* config_opt = app.add_option("--config", config, "flat key = value configuration file");
  auto* preset_opt = app.add_option("--preset", preset, "figure grid: fig3a fig3b fig4a fig4b fig5a fig5b fig6a fig6b");
  auto* seed_opt = app.add_option("--seed", seed, "base seed (sweep point i uses seed + i)");
  auto* jobs_opt = app.add_option("--jobs", jobs, "scenarios run in parallel; 1 is deterministic order");
  auto* out_opt = app.add_option("--out", out, "output directory");
  app.add_option("--set", options.sets, "override one key, key=value (repeatable)");
  app.add_flag("--unsafe-ranges", options.unsafe_ranges, "allow fractions outside [0.05, 0.5]");

  auto* plot = app.add_subcommand("plot", "reshape a results CSV into a per-figure wide table");
  std::string plot_results, plot_figure, plot_out;
  plot->add_option("results", plot_results, "results CSV")->required();
  plot->add_option("figure", plot_figure, "fig3a..fig6b")->required();
  plot->add_option("-o,--output", plot_out, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      const auto figure = sigtrust::find_figure(plot_figure);
      if (!figure) throw sigtrust::Error(sigtrust::Errc::ConfigParseError, "figure: unknown '" + plot_figure + "'");
      std::ifstream in(plot_results);
      if (!in) throw sigtrust::Error(sigtrust::Errc::IoError, "cannot open " + plot_results);
      const auto table = sigtrust::emit_plot_data(in, *figure);
      if (plot_out.empty()) {
        sigtrust::write_plot_table(std::cout, table);
      } else {
        std::ofstream file(plot_out);
        sigtrust::write_plot_table(file, table);
        if (!file) throw sigtrust::Error(sigtrust::Errc::IoError, "cannot write " + plot_out);
      }
      return 0;
    }

    if (*config_opt) options.config = config;
    if (*preset_opt) options.preset = preset;
    if (*seed_opt) options.seed = seed;
    if (*jobs_opt) options.jobs = jobs;
    if (*out_opt) options.out = out;
    const auto plan = sigtrust::resolve_plan(options);
    const auto outputs = sigtrust::execute(plan);
    std::cout << "results  " << outputs.results.string() << " (" << outputs.records.size() << " rows)\n";
    std::cout << "manifest " << outputs.manifest.string() << '\n';
    if (outputs.plot) std::cout << "plot     " << outputs.plot->string() << '\n';
    return 0;
  } catch (const sigtrust::Error& e) {
    std::cerr << "sigtrust: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "sigtrust: " << e.what() << '\n';
    return 1;
  }
}
