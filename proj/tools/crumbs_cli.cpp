// crumbs: run single chains, sweep experiment grids, and render reports.
//
//   crumbs run --target n4-pos --method shrinking-rank --sigma-c 10 --out r.csv
//   crumbs sweep --spec grid.txt --out-dir results/
//   crumbs report --in results/results.csv --plot results/plot.py
//
// Exit codes: 0 success, 1 configuration or i/o error, 2 some chains failed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "crumbs/diagnostics.hpp"
#include "crumbs/harness.hpp"
#include "crumbs/samplers.hpp"
#include "crumbs/targets.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

crumbs::Vector parse_point(const std::string& text) {
  crumbs::Vector x;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find(',', pos);
    const std::string item = text.substr(pos, next - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw crumbs::ConfigError("--x0: bad number '" + item + "'");
    }
    x.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return x;
}

void write_samples(const crumbs::ChainResult& chain,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw crumbs::IoError("cannot open '" + path.string() + "'");
  out.precision(17);
  for (std::size_t i = 0; i < chain.n(); ++i) {
    for (std::size_t j = 0; j < chain.dim; ++j) {
      if (j) out << ',';
      out << chain.at(i, j);
    }
    out << '\n';
  }
  if (!out) throw crumbs::IoError("write to '" + path.string() + "' failed");
}

struct RunOptions {
  std::string target;
  std::string method;
  double sigma_c = 1.0;
  double theta = 1.0;
  double shrink = 0.9;
  bool approx_u = false;
  std::size_t n = 150000;
  std::uint64_t seed = 1;
  std::string x0;
  std::string out;
  std::string samples;
};

int cmd_run(const RunOptions& o) {
  crumbs::SamplerConfig config;
  config.method = crumbs::parse_method(o.method);
  config.sigma_c = o.sigma_c;
  config.theta = o.theta;
  config.shrink_factor = o.shrink;
  config.approximate_u = o.approx_u;
  try {
    config.validate();
  } catch (const crumbs::InvalidInput& e) {
    throw crumbs::ConfigError(e.what());
  }

  crumbs::Target target = crumbs::make_target(o.target);
  std::optional<crumbs::Vector> x0;
  if (!o.x0.empty()) {
    x0 = parse_point(o.x0);
    if (x0->size() != target.dim()) {
      throw crumbs::ConfigError("--x0 needs " + std::to_string(target.dim()) +
                                " values");
    }
  }

  const crumbs::ChainResult chain =
      crumbs::run_chain(config, target, o.n, o.seed, x0);

  crumbs::Cell cell;
  cell.target = o.target;
  cell.method = config.method;
  cell.tuning = config.sigma_c;
  cell.seed = o.seed;
  const crumbs::ResultRow row = crumbs::make_row(cell, chain, true);
  crumbs::write_csv({row}, o.out);
  if (!o.samples.empty()) write_samples(chain, o.samples);

  std::printf("%s %s sigma_c=%g: n=%zu evals=%llu status=%s\n",
              o.target.c_str(), std::string(crumbs::method_name(config.method)).c_str(),
              config.sigma_c, chain.n(),
              static_cast<unsigned long long>(chain.total_density_evals),
              std::string(crumbs::status_name(chain.status)).c_str());
  if (row.evals_per_indep) {
    std::printf("tau=%.4g ess=%.4g evals/indep=%.4g reliable=%s\n", *row.tau,
                *row.ess, *row.evals_per_indep,
                row.reliable.value_or(false) ? "true" : "false");
  }
  return row.error_flag ? kExitPartial : kExitOk;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir) {
  const crumbs::ExperimentSpec spec = crumbs::load_experiment_spec(spec_path);
  std::filesystem::create_directories(out_dir);
  const auto rows = crumbs::run_experiment(spec);
  const std::filesystem::path dir(out_dir);
  crumbs::write_csv(rows, dir / "results.csv");
  crumbs::emit_plot_script(rows, dir / "plot.py");
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error_flag ? 1 : 0;
  std::printf("%zu rows written to %s (%zu failed)\n", rows.size(),
              (dir / "results.csv").string().c_str(), failed);
  return failed > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const std::string& in, const std::string& plot) {
  const auto rows = crumbs::read_csv(in);
  if (rows.empty()) throw crumbs::ConfigError("no rows in '" + in + "'");
  crumbs::emit_plot_script(rows, plot);
  std::printf("plot script for %zu rows written to %s\n", rows.size(),
              plot.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance-adaptive crumb slice samplers and benchmark harness"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run one chain and write its result row");
  run_cmd->add_option("--target", run.target, "n4-pos | n4-neg | eight-schools | mixture10")
      ->required();
  run_cmd->add_option("--method", run.method,
                      "covariance-matching | shrinking-rank | nonadaptive-crumb | metropolis-trials")
      ->required();
  run_cmd->add_option("--sigma-c", run.sigma_c, "Tuning parameter")->required();
  run_cmd->add_option("--theta", run.theta, "Covariance-matching precision growth");
  run_cmd->add_option("--shrink", run.shrink, "Per-crumb sd shrink factor");
  run_cmd->add_flag("--approx-u", run.approx_u, "Use log f(u) ~= log y0");
  run_cmd->add_option("--n", run.n, "Chain length");
  run_cmd->add_option("--seed", run.seed, "RNG seed");
  run_cmd->add_option("--x0", run.x0, "Starting point, comma-separated");
  run_cmd->add_option("--out", run.out, "Result CSV path")->required();
  run_cmd->add_option("--samples", run.samples, "Optional sample matrix CSV path");

  std::string spec_path, out_dir;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment grid");
  sweep_cmd->add_option("--spec", spec_path, "key = value experiment file")->required();
  sweep_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  std::string report_in, report_plot;
  auto* report_cmd = app.add_subcommand("report", "Emit a plot script from a result CSV");
  report_cmd->add_option("--in", report_in, "Result CSV")->required();
  report_cmd->add_option("--plot", report_plot, "Plot script path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*sweep_cmd) return cmd_sweep(spec_path, out_dir);
    if (*report_cmd) return cmd_report(report_in, report_plot);
  } catch (const crumbs::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const crumbs::InvalidInput& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const crumbs::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
  return kExitConfig;
}
