// Experiment configuration: plain data describing one laboratory run (model,
// discretization scheme, size ladder, detector settings, references, probes,
// outputs) plus strict JSON parsing and deterministic result serialization.
// Unknown JSON keys are rejected so that a typo cannot silently change an
// experiment.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "speclab/dirac.hpp"
#include "speclab/periodic.hpp"
#include "speclab/pollution.hpp"
#include "speclab/toy.hpp"

namespace speclab {

// Rule producing the rotation angle for the 1-based pair index n.
struct AngleRuleConfig {
  enum class Kind { inv_sqrt_2n, power, constant };
  Kind kind = Kind::inv_sqrt_2n;
  double alpha = 0.75;  // power: theta_n = n^-alpha
  double value = 0.0;   // constant
  std::function<double(std::size_t)> make() const;
  std::string label() const;
};

struct ToyModelConfig {
  ToyVariant variant = ToyVariant::bounded_below;
  AngleRuleConfig angles;
};

// Geometrically graded clamped B-spline basis on [0, r_max].
struct DiracBasisConfig {
  double r_max = 40.0;
  std::size_t breakpoints = 200;
  double grading_ratio = 1.02;  // adjacent panel length ratio; 1.0 = uniform
  int order = 6;
  int points_per_panel = 0;  // quadrature points per panel; 0 = order + 2
};

struct DiracModelConfig {
  int kappa = -1;
  PotentialSpec potential = PotentialSpec::zero();
  DiracBasisConfig basis;
};

struct PeriodicModelConfig {
  PeriodicModel model = PeriodicModel::mathieu_default();
  std::size_t n_xi = 128;        // Brillouin-zone samples (even)
  int max_translate = 32;        // largest Wannier translate radius kept
  std::size_t kept_bands = 4;    // bands carried through the Bloch solve
  std::vector<std::size_t> below_bands = {0};
  std::vector<std::size_t> above_bands = {1, 2};
};

struct ModelConfig {
  enum class Kind { toy, dirac, periodic };
  Kind kind = Kind::toy;
  ToyModelConfig toy;
  DiracModelConfig dirac;
  PeriodicModelConfig periodic;
};

struct SchemeConfig {
  SchemeSpec::Kind kind = SchemeSpec::Kind::upper_lower;
  double epsilon = 0.5;                     // dual / dual-kinetic-balance
  std::optional<AngleRuleConfig> mixing;    // naive component mixing
  SchemeSpec make() const;
  std::string label() const;
};

// Where trusted reference eigenvalues come from.
struct ReferenceConfig {
  enum class Kind { none, closed_form_levels, converged_scheme, supercell };
  Kind kind = Kind::none;
  int count = 3;                // closed_form_levels: number of levels
  double tolerance = 0.0;       // accuracy radius attached to each reference
  SchemeConfig scheme;          // converged_scheme: which clean scheme
  double refine_factor = 1.4;   // converged_scheme: breakpoint multiplier
  std::size_t cells = 64;       // supercell: primitive cells (even)
  int cell_cutoff = 8;          // supercell: plane waves per cell
};

// Parameter-sweep probes that sample quadratic-form diagnostics instead of
// running the detector.
struct ProbeConfig {
  enum class Kind { balance_samples, hardy_sweep, bump_sweep };
  Kind kind = Kind::balance_samples;
  SchemeConfig scheme;                             // balance / bump probes
  std::size_t samples = 200;                       // per parameter value
  std::vector<double> kappas = {0.3, 0.6, 0.86};   // hardy_sweep
  double m_param = 0.0;  // hardy_sweep mass; 0 = tight value per kappa
  std::vector<double> bump_n = {64.0, 128.0, 256.0, 512.0};
  double bump_delta = 256.0;
};

struct OutputConfig {
  std::string directory = ".";
  std::string spectra_file = "spectra.csv";
  std::string report_file = "report.json";
  std::string probe_file = "probe.csv";
};

struct ExperimentConfig {
  ModelConfig model;
  SchemeConfig scheme;
  std::vector<std::size_t> sizes;
  DetectorParams detector;
  ReferenceConfig references;
  ProbeConfig probe;
  OutputConfig output;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Strict parsing: throws ConfigError on malformed JSON, unknown keys, wrong
// types, or out-of-range values.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Deterministic serialization (fixed %.17g float formatting, fixed key
// order) so a given (config, seed) pair reproduces byte-identical outputs.
std::string spectra_csv(const RunSequence& runs);
std::string report_json(const RunSequence& runs, const PollutionReport& report,
                        const PredictedSpurious& predicted,
                        const SpectrumModel& model, bool pass);
std::string probe_csv(const std::string& header,
                      const std::vector<std::array<double, 3>>& rows);

// Writes via a temporary file in the target directory plus rename, so other
// processes never observe a half-written result.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace speclab
