// Spectral-pollution detector: runs a Galerkin family over an increasing
// ladder of trial-space sizes, restricts each spectrum to the spectral-gap
// window, and classifies the in-gap points of the final size as spurious,
// genuine, or unresolved by their persistence under refinement, their drift,
// and their distance to trusted reference eigenvalues.  The detector is a
// pure fold over the collected spectra; nothing here depends on any model.
#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace speclab {

// Reference eigenvalue trusted a priori (closed form or an independent
// converged computation), with its own accuracy radius.
struct ReferenceEig {
  double value = 0.0;
  double tolerance = 0.0;
};

// Where the spectrum of the full operator is allowed to live: closed
// essential intervals, an open gap (gap_lo, gap_hi) under scrutiny, trusted
// reference eigenvalues, and flags saying the essential spectrum continues
// down to -infinity / up to +infinity.
struct SpectrumModel {
  std::vector<std::pair<double, double>> ess_intervals;
  double gap_lo = 0.0;
  double gap_hi = 0.0;
  std::vector<ReferenceEig> reference_eigs;
  bool hat_extends_below = false;
  bool hat_extends_above = false;

  double gap_width() const { return gap_hi - gap_lo; }
};

// All detector length scales are fractions of the gap width.
struct DetectorParams {
  double cluster_fraction = 5e-3;        // single-linkage break distance
  double drift_fraction = 2e-3;          // admissible wobble of a candidate
  double true_fraction = 1e-3;           // capture radius of a reference
  double window_margin_fraction = 1e-2;  // inward shrink of the gap window
};

// One refinement ladder: strictly increasing sizes and, for each size, the
// ascending spectrum restricted to the shrunken gap window.
struct RunSequence {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> spectra;
  std::string model_id;
  std::string scheme_id;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

// A family of Galerkin discretizations indexed by trial-space size.
// spectrum() must return the full ascending eigenvalue list and must be safe
// to call from concurrent workers.
class GalerkinFamily {
 public:
  virtual ~GalerkinFamily() = default;
  virtual std::string id() const = 0;
  virtual std::vector<double> spectrum(std::size_t size) const = 0;
};

enum class Verdict { spurious, genuine, unresolved };

std::string to_string(Verdict v);  // "spurious" / "true" / "unresolved"

// An in-gap cluster of the final-size spectrum with its refinement history.
struct CandidatePoint {
  double location = 0.0;             // final-size cluster centroid
  std::size_t persistence_score = 0; // consecutive sizes matched, counted
                                     // back from the final one
  double drift = 0.0;                // spread of the matched values over the
                                     // later half of the ladder
  Verdict verdict = Verdict::unresolved;
};

struct PollutionReport {
  std::vector<CandidatePoint> candidates;  // ascending by location
  std::vector<CandidatePoint> spurious() const;
  std::vector<CandidatePoint> true_hits() const;
  std::vector<CandidatePoint> unresolved() const;
};

// Closed intervals inside the closure of the gap where spurious eigenvalues
// are predicted, each with a human-readable provenance line.
struct PredictedSpurious {
  std::vector<std::pair<double, double>> intervals;
  std::vector<std::string> provenance;
};

// Collects the spectra for every size (optionally with a worker pool over
// sizes) and restricts them to the gap window shrunk inward by the margin.
RunSequence run_sequence(const GalerkinFamily& family,
                         const std::vector<std::size_t>& sizes,
                         const SpectrumModel& model,
                         const DetectorParams& params = {},
                         unsigned threads = 1);

// Classifies the final-size in-gap clusters.  Requires at least four sizes
// (a shorter ladder cannot separate persistence from drift).
PollutionReport detect_spurious(const RunSequence& runs,
                                const SpectrumModel& model,
                                const DetectorParams& params = {});

// One-sided containment check: every detected spurious point must lie in
// some predicted interval dilated by the drift tolerance.  An empty
// prediction passes exactly when nothing spurious was detected.
bool compare_report(const PollutionReport& report,
                    const PredictedSpurious& predicted,
                    const SpectrumModel& model,
                    const DetectorParams& params = {});

}  // namespace speclab
