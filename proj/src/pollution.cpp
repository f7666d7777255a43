#include "speclab/pollution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "speclab/errors.hpp"

namespace speclab {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void validate_model(const SpectrumModel& model) {
  if (!(model.gap_hi > model.gap_lo))
    throw ValidationError("spectral gap must be a nonempty open interval");
  for (const auto& [lo, hi] : model.ess_intervals)
    if (hi < lo)
      throw ValidationError("essential interval with negative length");
}

void validate_params(const DetectorParams& p) {
  if (p.cluster_fraction <= 0.0 || p.drift_fraction <= 0.0 ||
      p.true_fraction <= 0.0 || p.window_margin_fraction < 0.0)
    throw ValidationError("detector fractions must be positive");
}

void validate_sizes(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw ValidationError("size ladder is empty");
  for (std::size_t i = 1; i < sizes.size(); ++i)
    if (sizes[i] <= sizes[i - 1])
      throw ValidationError("size ladder must be strictly increasing");
}

// Distance from x to the nearest element of an ascending list.
double nearest_distance(const std::vector<double>& ascending, double x,
                        double* nearest_value) {
  if (ascending.empty()) {
    if (nearest_value) *nearest_value = std::numeric_limits<double>::quiet_NaN();
    return std::numeric_limits<double>::infinity();
  }
  auto it = std::lower_bound(ascending.begin(), ascending.end(), x);
  double best = std::numeric_limits<double>::infinity();
  double value = 0.0;
  if (it != ascending.end() && std::abs(*it - x) < best) {
    best = std::abs(*it - x);
    value = *it;
  }
  if (it != ascending.begin() && std::abs(*(it - 1) - x) < best) {
    best = std::abs(*(it - 1) - x);
    value = *(it - 1);
  }
  if (nearest_value) *nearest_value = value;
  return best;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::spurious:
      return "spurious";
    case Verdict::genuine:
      return "true";
    case Verdict::unresolved:
      return "unresolved";
  }
  return "unresolved";
}

std::vector<CandidatePoint> PollutionReport::spurious() const {
  std::vector<CandidatePoint> out;
  for (const CandidatePoint& c : candidates)
    if (c.verdict == Verdict::spurious) out.push_back(c);
  return out;
}

std::vector<CandidatePoint> PollutionReport::true_hits() const {
  std::vector<CandidatePoint> out;
  for (const CandidatePoint& c : candidates)
    if (c.verdict == Verdict::genuine) out.push_back(c);
  return out;
}

std::vector<CandidatePoint> PollutionReport::unresolved() const {
  std::vector<CandidatePoint> out;
  for (const CandidatePoint& c : candidates)
    if (c.verdict == Verdict::unresolved) out.push_back(c);
  return out;
}

RunSequence run_sequence(const GalerkinFamily& family,
                         const std::vector<std::size_t>& sizes,
                         const SpectrumModel& model,
                         const DetectorParams& params, unsigned threads) {
  validate_model(model);
  validate_params(params);
  validate_sizes(sizes);

  const double margin = params.window_margin_fraction * model.gap_width();
  RunSequence runs;
  runs.sizes = sizes;
  runs.model_id = family.id();
  runs.window_lo = model.gap_lo + margin;
  runs.window_hi = model.gap_hi - margin;
  if (!(runs.window_hi > runs.window_lo))
    throw ValidationError("window margin swallows the whole gap");
  runs.spectra.assign(sizes.size(), {});

  const unsigned workers = std::max(1u, std::min<unsigned>(
                                            threads,
                                            static_cast<unsigned>(sizes.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_lock;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= sizes.size()) return;
      try {
        std::vector<double> full = family.spectrum(sizes[i]);
        if (!std::is_sorted(full.begin(), full.end()))
          throw NumericalError("family returned an unsorted spectrum");
        std::vector<double> windowed;
        for (double v : full)
          if (v > runs.window_lo && v < runs.window_hi) windowed.push_back(v);
        runs.spectra[i] = std::move(windowed);
      } catch (...) {
        std::lock_guard<std::mutex> hold(error_lock);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return runs;
}

PollutionReport detect_spurious(const RunSequence& runs,
                                const SpectrumModel& model,
                                const DetectorParams& params) {
  validate_model(model);
  validate_params(params);
  validate_sizes(runs.sizes);
  if (runs.sizes.size() < 4)
    throw ValidationError(
        "protocol error: the refinement ladder needs at least 4 sizes to "
        "separate persistent points from drifting ones (got " +
        fmt(static_cast<double>(runs.sizes.size())) + ")");
  if (runs.spectra.size() != runs.sizes.size())
    throw ValidationError("run sequence has a spectrum count mismatch");
  for (const std::vector<double>& s : runs.spectra)
    if (!std::is_sorted(s.begin(), s.end()))
      throw ValidationError("run sequence spectra must be ascending");

  const double w = model.gap_width();
  const double delta_cluster = params.cluster_fraction * w;
  const double delta_drift = params.drift_fraction * w;
  const double delta_true = params.true_fraction * w;
  const std::size_t k = runs.sizes.size();
  const std::size_t half_start = (k + 1) / 2;  // ceil(k/2)

  // Single-linkage clusters of the final-size window spectrum.
  const std::vector<double>& final_spec = runs.spectra.back();
  std::vector<std::pair<std::size_t, std::size_t>> clusters;  // [begin, end)
  for (std::size_t i = 0; i < final_spec.size();) {
    std::size_t j = i + 1;
    while (j < final_spec.size() &&
           final_spec[j] - final_spec[j - 1] <= delta_cluster)
      ++j;
    clusters.emplace_back(i, j);
    i = j;
  }

  PollutionReport report;
  for (const auto& [lo, hi] : clusters) {
    CandidatePoint c;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += final_spec[i];
    c.location = sum / static_cast<double>(hi - lo);

    // Match the centroid against every size of the ladder.
    std::vector<bool> matched(k, false);
    std::vector<double> matched_value(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      double nearest = 0.0;
      const double d = nearest_distance(runs.spectra[i], c.location, &nearest);
      matched[i] = d <= delta_cluster;
      matched_value[i] = nearest;
    }

    c.persistence_score = 0;
    for (std::size_t i = k; i-- > 0;) {
      if (!matched[i]) break;
      ++c.persistence_score;
    }

    bool persistent = true;
    double vmin = std::numeric_limits<double>::infinity();
    double vmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = half_start; i < k; ++i) {
      if (!matched[i]) {
        persistent = false;
        continue;
      }
      vmin = std::min(vmin, matched_value[i]);
      vmax = std::max(vmax, matched_value[i]);
    }
    c.drift = (vmax >= vmin) ? vmax - vmin : 0.0;

    if (!persistent || c.drift > delta_drift) {
      c.verdict = Verdict::unresolved;
    } else {
      bool is_reference = false;
      for (const ReferenceEig& r : model.reference_eigs)
        if (std::abs(c.location - r.value) <=
            std::max(delta_true, r.tolerance)) {
          is_reference = true;
          break;
        }
      c.verdict = is_reference ? Verdict::genuine : Verdict::spurious;
    }
    report.candidates.push_back(c);
  }
  return report;
}

bool compare_report(const PollutionReport& report,
                    const PredictedSpurious& predicted,
                    const SpectrumModel& model, const DetectorParams& params) {
  validate_model(model);
  validate_params(params);
  if (predicted.intervals.size() != predicted.provenance.size())
    throw ValidationError(
        "every predicted interval needs exactly one provenance line");
  const double dilation = params.drift_fraction * model.gap_width();
  for (const CandidatePoint& c : report.candidates) {
    if (c.verdict != Verdict::spurious) continue;
    bool covered = false;
    for (const auto& [lo, hi] : predicted.intervals)
      if (c.location >= lo - dilation && c.location <= hi + dilation) {
        covered = true;
        break;
      }
    if (!covered) return false;
  }
  return true;
}

}  // namespace speclab
