// Command-line driver for the spectral-pollution laboratory.
//
//   speclab run <config.json>    size-ladder run + detector + report files
//   speclab probe <config.json>  parameter-sweep probe table
//
// Exit codes: 0 = run passed (all spurious points predicted), 1 = run failed,
// 2 = configuration/validation error, 3 = numerical error.
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "speclab/config.hpp"
#include "speclab/errors.hpp"
#include "speclab/run.hpp"

namespace {

unsigned env_threads(unsigned fallback) {
  const char* raw = std::getenv("SPECLAB_THREADS");
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1 || v > 1024) {
    throw speclab::ConfigError(
        "SPECLAB_THREADS must be an integer between 1 and 1024");
  }
  return static_cast<unsigned>(v);
}

std::string joined(const std::string& directory, const std::string& file) {
  return (std::filesystem::path(directory) / file).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-pollution laboratory for gapped operators"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::size_t> sizes_override;
  std::int64_t seed_override = -1;
  std::string out_dir_override;
  int threads_override = 0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment configuration (JSON)")
        ->required();
    cmd->add_option("--sizes", sizes_override,
                    "override the trial-space size ladder");
    cmd->add_option("--seed", seed_override, "override the random seed");
    cmd->add_option("--out-dir", out_dir_override,
                    "override the output directory");
    cmd->add_option("--threads", threads_override,
                    "worker threads over the size ladder")
        ->check(CLI::Range(1, 1024));
  };

  CLI::App* cmd_run = app.add_subcommand(
      "run", "collect the spectra ladder, detect spurious points, write "
             "spectra.csv and report.json");
  CLI::App* cmd_probe = app.add_subcommand(
      "probe", "sample a quadratic-form diagnostic sweep, write probe.csv");
  add_common(cmd_run);
  add_common(cmd_probe);

  CLI11_PARSE(app, argc, argv);

  try {
    speclab::ExperimentConfig cfg =
        speclab::load_experiment_config(config_path);
    if (!sizes_override.empty()) cfg.sizes = sizes_override;
    if (seed_override >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (!out_dir_override.empty()) cfg.output.directory = out_dir_override;
    cfg.threads = threads_override > 0
                      ? static_cast<unsigned>(threads_override)
                      : env_threads(cfg.threads);

    std::filesystem::create_directories(cfg.output.directory);

    if (cmd_run->parsed()) {
      const speclab::ExperimentResult res = speclab::run_experiment(cfg);
      const std::string spectra_path =
          joined(cfg.output.directory, cfg.output.spectra_file);
      const std::string report_path =
          joined(cfg.output.directory, cfg.output.report_file);
      speclab::write_file_atomic(spectra_path, speclab::spectra_csv(res.runs));
      speclab::write_file_atomic(
          report_path,
          speclab::report_json(res.runs, res.report, res.predicted,
                               res.spectrum_model, res.pass));
      std::printf(
          "%s: %zu spurious, %zu true, %zu unresolved candidate(s); %zu "
          "predicted interval(s)\n",
          res.pass ? "PASS" : "FAIL", res.report.spurious().size(),
          res.report.true_hits().size(), res.report.unresolved().size(),
          res.predicted.intervals.size());
      std::printf("spectra: %s\nreport:  %s\n", spectra_path.c_str(),
                  report_path.c_str());
      return res.pass ? 0 : 1;
    }

    const speclab::ProbeResult res = speclab::run_probe(cfg);
    const std::string probe_path =
        joined(cfg.output.directory, cfg.output.probe_file);
    speclab::write_file_atomic(probe_path,
                               speclab::probe_csv(res.header, res.rows));
    std::printf("wrote %zu probe row(s) (%s) to %s\n", res.rows.size(),
                res.header.c_str(), probe_path.c_str());
    return 0;
  } catch (const speclab::ValidationError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const speclab::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const speclab::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
