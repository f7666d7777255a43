// Laboratory orchestration: concrete Galerkin families for the three model
// classes, spectrum-model and reference builders, a-priori predictions of
// where each scheme pollutes the gap, and the top-level experiment / probe
// drivers used by both the command-line tool and the acceptance suite.
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "speclab/config.hpp"
#include "speclab/dirac.hpp"
#include "speclab/periodic.hpp"
#include "speclab/pollution.hpp"
#include "speclab/toy.hpp"

namespace speclab {

// Rotated-frame toy family; size is the truncation index n (dimension 2n-1).
class ToyFamily : public GalerkinFamily {
 public:
  ToyFamily(ToyVariant variant, std::function<double(std::size_t)> theta_rule,
            std::string label);
  std::string id() const override { return label_; }
  std::vector<double> spectrum(std::size_t size) const override;

 private:
  ToyVariant variant_;
  std::function<double(std::size_t)> theta_rule_;
  std::string label_;
};

// Radial Dirac channel under one discretization scheme; size is the number
// of spline functions per component (modes per sign for the free-splitting
// scheme).  The free-splitting workspace is built once in the constructor.
class DiracFamily : public GalerkinFamily {
 public:
  DiracFamily(DiracChannelModel model, SchemeSpec scheme, std::string label);
  std::string id() const override { return label_; }
  std::vector<double> spectrum(std::size_t size) const override;
  const DiracChannelModel& model() const { return model_; }
  const FreeSplitWorkspace* workspace() const { return workspace_.get(); }

 private:
  DiracChannelModel model_;
  SchemeSpec scheme_;
  std::string label_;
  std::shared_ptr<const FreeSplitWorkspace> workspace_;
};

// Periodic operator with defect discretized in translated Wannier functions.
// size is the total trial dimension (groups) * (2R + 1); it must map back to
// an integer translate radius R in [2, max_translate].
class PeriodicFamily : public GalerkinFamily {
 public:
  PeriodicFamily(PeriodicModel model, WannierSet below, WannierSet above,
                 std::string label);
  std::string id() const override { return label_; }
  std::vector<double> spectrum(std::size_t size) const override;

  std::size_t functions_per_cell() const;
  std::size_t size_for_radius(int radius) const;
  int radius_for_size(std::size_t size) const;  // throws if not representable
  const WannierSet& below() const { return below_; }
  const WannierSet& above() const { return above_; }

 private:
  PeriodicModel model_;
  WannierSet below_;
  WannierSet above_;
  std::string label_;
};

// ---- builders ------------------------------------------------------------

BSplineBasis make_dirac_basis(const DiracBasisConfig& cfg);
QuadratureRule make_dirac_rule(const DiracBasisConfig& cfg);
DiracChannelModel make_dirac_model(const DiracModelConfig& cfg);

// Bloch solve + gauge fixing + Wannier construction for both groups.
struct PeriodicWorkspace {
  BandStructure bands;
  WannierSet below;
  WannierSet above;
};
PeriodicWorkspace make_periodic_workspace(const PeriodicModelConfig& cfg);

SpectrumModel toy_spectrum_model(ToyVariant variant);
SpectrumModel dirac_spectrum_model();
SpectrumModel periodic_spectrum_model(const BandStructure& bands);

// ---- a-priori pollution predictions --------------------------------------

// Toy models: numerically follows the in-gap tail eigenvalue to its
// truncation limit; a convergent in-gap limit yields a point interval.
PredictedSpurious predicted_spurious_toy(const ToyModelConfig& cfg);

// Dirac schemes: closed-form intervals in terms of sup V and inf V.
PredictedSpurious predicted_spurious_dirac(const SchemeSpec& scheme,
                                           const PotentialSpec& potential);

// Wannier discretizations are pollution-free by construction.
PredictedSpurious predicted_spurious_periodic();

// ---- experiment drivers ---------------------------------------------------

struct ExperimentResult {
  SpectrumModel spectrum_model;
  RunSequence runs;
  PollutionReport report;
  PredictedSpurious predicted;
  bool pass = false;  // every spurious point inside a predicted interval
};

// Builds the family/model/references from the config, runs the ladder, the
// detector, and the containment check.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct ProbeResult {
  std::string header;  // CSV header naming the three columns
  std::vector<std::array<double, 3>> rows;
};

// Parameter-sweep diagnostics (quadratic-form floors, Hardy gaps, bump
// collapse), deterministic for a fixed (config, seed).
ProbeResult run_probe(const ExperimentConfig& cfg);

}  // namespace speclab
