#include "speclab/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <utility>

#include "speclab/errors.hpp"

namespace speclab {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string potential_label(const PotentialSpec& p) {
  using K = PotentialSpec::Kind;
  switch (p.kind) {
    case K::zero:
      return "V=0";
    case K::gaussian_bump:
      return "bump(v0=" + fmt(p.v0) + ",w=" + fmt(p.width) + ")";
    case K::gaussian_well:
      return "well(v0=" + fmt(p.v0) + ",w=" + fmt(p.width) + ")";
    case K::coulomb:
      return "coulomb(kc=" + fmt(p.kappa_c) + ")";
    case K::smeared_coulomb:
      return "smeared-coulomb(kc=" + fmt(p.kappa_c) + ",rc=" + fmt(p.r_cut) +
             ")";
  }
  return "potential";
}

// Evaluate a spline coefficient vector (and derivative) using only the
// `order` functions that can be nonzero at r.
double eval_spline(const BSplineBasis& basis, const std::vector<double>& coef,
                   double r, int derivative_order) {
  constexpr int kMaxOrder = 32;
  if (basis.order() > kMaxOrder) {
    throw ValidationError("spline evaluation buffer supports order <= 32");
  }
  double buf[kMaxOrder];
  std::size_t first_full = 0;
  basis.eval_nonzero(r, derivative_order, first_full, buf);
  double acc = 0.0;
  for (int j = 0; j < basis.order(); ++j) {
    const std::size_t f = first_full + static_cast<std::size_t>(j);
    if (f >= 1 && f <= coef.size()) acc += coef[f - 1] * buf[j];
  }
  return acc;
}

RadialChannelFunction spline_channel_function(const BSplineBasis& basis,
                                              std::vector<double> coef) {
  auto held = std::make_shared<const std::vector<double>>(std::move(coef));
  auto base = std::make_shared<const BSplineBasis>(basis);
  RadialChannelFunction g;
  g.value = [held, base](double r) { return eval_spline(*base, *held, r, 0); };
  g.derivative = [held, base](double r) {
    return eval_spline(*base, *held, r, 1);
  };
  return g;
}

// Clip a predicted interval to the closed gap and keep it only when it still
// has interior content (a point interval sitting exactly on a gap edge names
// no in-gap pollution).
void push_clipped(PredictedSpurious& out, double lo, double hi,
                  const std::string& why, double gap_lo, double gap_hi) {
  lo = std::max(lo, gap_lo);
  hi = std::min(hi, gap_hi);
  if (!(lo <= hi)) return;
  if (lo == hi && (lo == gap_lo || hi == gap_hi)) return;
  out.intervals.emplace_back(lo, hi);
  out.provenance.push_back(why);
}

}  // namespace

// ---- families --------------------------------------------------------------

ToyFamily::ToyFamily(ToyVariant variant,
                     std::function<double(std::size_t)> theta_rule,
                     std::string label)
    : variant_(variant),
      theta_rule_(std::move(theta_rule)),
      label_(std::move(label)) {
  if (!theta_rule_) {
    throw ValidationError("toy family needs an angle rule");
  }
}

std::vector<double> ToyFamily::spectrum(std::size_t size) const {
  ToyRotatedModel m;
  m.variant = variant_;
  m.theta_rule = theta_rule_;
  m.truncation = size;
  return eig_hermitian(assemble_toy(m), false).values;
}

DiracFamily::DiracFamily(DiracChannelModel model, SchemeSpec scheme,
                         std::string label)
    : model_(std::move(model)),
      scheme_(std::move(scheme)),
      label_(std::move(label)) {
  if (scheme_.kind == SchemeSpec::Kind::free_split) {
    workspace_ = std::make_shared<const FreeSplitWorkspace>(
        make_free_split_workspace(model_));
  }
}

std::vector<double> DiracFamily::spectrum(std::size_t size) const {
  GeneralizedPencil p = assemble_dirac(model_, scheme_, size, workspace_.get());
  return eig_generalized(p, false).values;
}

PeriodicFamily::PeriodicFamily(PeriodicModel model, WannierSet below,
                               WannierSet above, std::string label)
    : model_(std::move(model)),
      below_(std::move(below)),
      above_(std::move(above)),
      label_(std::move(label)) {
  if (below_.size() == 0 || above_.size() == 0) {
    throw ValidationError(
        "periodic family needs nonempty Wannier groups on both sides of the "
        "gap");
  }
}

std::size_t PeriodicFamily::functions_per_cell() const {
  return below_.size() + above_.size();
}

std::size_t PeriodicFamily::size_for_radius(int radius) const {
  if (radius < 2) {
    throw ValidationError("translate radius must be at least 2, got " +
                          std::to_string(radius));
  }
  return functions_per_cell() * static_cast<std::size_t>(2 * radius + 1);
}

int PeriodicFamily::radius_for_size(std::size_t size) const {
  const std::size_t per = functions_per_cell();
  if (size == 0 || size % per != 0) {
    throw ValidationError(
        "trial dimension " + std::to_string(size) + " is not a multiple of " +
        std::to_string(per) + " Wannier functions per cell");
  }
  const std::size_t cells = size / per;
  if (cells % 2 == 0 || cells < 5) {
    throw ValidationError("trial dimension " + std::to_string(size) +
                          " does not cover an odd number of cells 2R+1 with "
                          "translate radius R >= 2");
  }
  const int radius = static_cast<int>((cells - 1) / 2);
  if (radius > below_.max_translate || radius > above_.max_translate) {
    throw ValidationError(
        "translate radius " + std::to_string(radius) +
        " exceeds the prepared Wannier translate range " +
        std::to_string(std::min(below_.max_translate, above_.max_translate)));
  }
  return radius;
}

std::vector<double> PeriodicFamily::spectrum(std::size_t size) const {
  const int radius = radius_for_size(size);
  return eig_generalized(assemble_periodic(model_, below_, above_, radius),
                         false)
      .values;
}

// ---- builders --------------------------------------------------------------

namespace {
std::vector<double> dirac_breakpoints(const DiracBasisConfig& cfg) {
  if (!(cfg.r_max > 0.0)) {
    throw ConfigError("radial domain length must be positive");
  }
  if (cfg.breakpoints < 2) {
    throw ConfigError("radial grid needs at least 2 breakpoints");
  }
  if (!(cfg.grading_ratio >= 1.0)) {
    throw ConfigError("grading ratio must be >= 1 (1 = uniform grid)");
  }
  if (cfg.grading_ratio == 1.0) {
    return uniform_breakpoints(0.0, cfg.r_max, cfg.breakpoints);
  }
  return geometric_breakpoints(cfg.r_max, cfg.breakpoints, cfg.grading_ratio);
}
}  // namespace

BSplineBasis make_dirac_basis(const DiracBasisConfig& cfg) {
  return BSplineBasis(cfg.order, dirac_breakpoints(cfg));
}

QuadratureRule make_dirac_rule(const DiracBasisConfig& cfg) {
  const int per_panel =
      cfg.points_per_panel == 0 ? cfg.order + 2 : cfg.points_per_panel;
  return make_rule(dirac_breakpoints(cfg), per_panel);
}

DiracChannelModel make_dirac_model(const DiracModelConfig& cfg) {
  return DiracChannelModel{cfg.kappa, cfg.potential,
                           make_dirac_basis(cfg.basis),
                           make_dirac_rule(cfg.basis)};
}

PeriodicWorkspace make_periodic_workspace(const PeriodicModelConfig& cfg) {
  BandStructure b = bloch_bands(cfg.model, cfg.n_xi, cfg.kept_bands);
  b = gauge_fix(std::move(b), cfg.below_bands);
  b = gauge_fix(std::move(b), cfg.above_bands);
  WannierSet below = wannier_build(b, cfg.below_bands,
                                   WannierSet::Group::below_gap,
                                   cfg.max_translate);
  WannierSet above = wannier_build(b, cfg.above_bands,
                                   WannierSet::Group::above_gap,
                                   cfg.max_translate);
  return PeriodicWorkspace{std::move(b), std::move(below), std::move(above)};
}

SpectrumModel toy_spectrum_model(ToyVariant variant) {
  SpectrumModel m;
  if (variant == ToyVariant::bounded_below) {
    m.ess_intervals = {{0.0, 0.0}, {1.0, 1.0}};
    m.gap_lo = 0.0;
    m.gap_hi = 1.0;
    m.hat_extends_above = true;
  } else {
    m.ess_intervals = {{-1.0, -1.0}, {1.0, 1.0}};
    m.gap_lo = -1.0;
    m.gap_hi = 1.0;
    m.hat_extends_below = true;
    m.hat_extends_above = true;
  }
  return m;
}

SpectrumModel dirac_spectrum_model() {
  SpectrumModel m;
  m.ess_intervals = {{-1.0, -1.0}, {1.0, 1.0}};
  m.gap_lo = -1.0;
  m.gap_hi = 1.0;
  m.hat_extends_below = true;
  m.hat_extends_above = true;
  return m;
}

SpectrumModel periodic_spectrum_model(const BandStructure& bands) {
  SpectrumModel m;
  for (std::size_t k = 0; k < bands.n_bands; ++k) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t t = 0; t < bands.n_xi; ++t) {
      const double v = bands.bands[k * bands.n_xi + t];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    m.ess_intervals.emplace_back(lo, hi);
  }
  const auto gap = find_first_gap(bands);
  m.gap_lo = gap.first;
  m.gap_hi = gap.second;
  m.hat_extends_above = true;
  return m;
}

// ---- a-priori pollution predictions ----------------------------------------

PredictedSpurious predicted_spurious_toy(const ToyModelConfig& cfg) {
  PredictedSpurious out;
  const SpectrumModel sm = toy_spectrum_model(cfg.variant);
  const auto rule = cfg.angles.make();
  const bool bounded = cfg.variant == ToyVariant::bounded_below;
  // In-gap tail element of the closed-form truncated spectrum, followed to
  // large truncations; only a numerically convergent in-gap limit is
  // predicted.
  double tail[3] = {0.0, 0.0, 0.0};
  for (int k = 0; k < 3; ++k) {
    const auto n = static_cast<std::size_t>(1) << (18 + k);
    const double theta = rule(n);
    const double s = std::sin(theta);
    tail[k] = bounded ? static_cast<double>(n) * s * s
                      : -static_cast<double>(n) * std::cos(2.0 * theta);
  }
  const double tol = 1e-4;
  if (std::abs(tail[1] - tail[0]) <= tol &&
      std::abs(tail[2] - tail[1]) <= tol) {
    const double limit = tail[2];
    if (limit > sm.gap_lo && limit < sm.gap_hi) {
      out.intervals.emplace_back(limit, limit);
      out.provenance.push_back(
          "convergent in-gap limit of the rotated-frame tail eigenvalue "
          "under growing truncation (angle rule " +
          cfg.angles.label() + ")");
    }
  }
  return out;
}

PredictedSpurious predicted_spurious_dirac(const SchemeSpec& scheme,
                                           const PotentialSpec& potential) {
  PredictedSpurious out;
  const double gap_lo = -1.0;
  const double gap_hi = 1.0;
  const double sup = potential.sup_v;
  const double inf = potential.inf_v;
  const bool unbounded_below = std::isinf(inf);
  using K = SchemeSpec::Kind;
  switch (scheme.kind) {
    case K::naive:
      push_clipped(out, gap_lo, gap_hi,
                   "rotated component mixing leaves the whole gap open to "
                   "pollution",
                   gap_lo, gap_hi);
      break;
    case K::upper_lower:
      if (unbounded_below) {
        push_clipped(out, gap_lo, gap_hi,
                     "independent two-component truncation over an unbounded "
                     "potential can pollute the whole gap",
                     gap_lo, gap_hi);
      } else {
        push_clipped(out, gap_lo, -1.0 + sup,
                     "trial vectors dominated by the lower component sample "
                     "-1 + V: pollution in (-1, -1 + sup V]",
                     gap_lo, gap_hi);
        push_clipped(out, 1.0 + inf, gap_hi,
                     "trial vectors dominated by the upper component sample "
                     "1 + V: pollution in [1 + inf V, 1)",
                     gap_lo, gap_hi);
      }
      break;
    case K::dual:
    case K::dual_kinetic_balance:
      if (unbounded_below) {
        push_clipped(out, gap_lo, gap_hi,
                     "dual pairing over an unbounded potential can pollute "
                     "the whole gap",
                     gap_lo, gap_hi);
      } else {
        push_clipped(out, gap_lo, 1.0 - 2.0 / scheme.epsilon + sup,
                     "dual-partner directions cost at least 2/epsilon - 2: "
                     "pollution confined to (-1, 1 - 2/epsilon + sup V]",
                     gap_lo, gap_hi);
        push_clipped(out, 2.0 / scheme.epsilon - 1.0 + inf, gap_hi,
                     "dual-partner directions cost at least 2/epsilon - 2: "
                     "pollution confined to [2/epsilon - 1 + inf V, 1)",
                     gap_lo, gap_hi);
      }
      break;
    case K::kinetic_balance:
      if (unbounded_below) {
        push_clipped(out, gap_lo, gap_hi,
                     "kinetic balance over an unbounded potential can pollute "
                     "the whole gap",
                     gap_lo, gap_hi);
      } else {
        push_clipped(out, gap_lo, -1.0 + sup,
                     "kinetically balanced lower components still sample "
                     "-1 + V: pollution in (-1, -1 + sup V]",
                     gap_lo, gap_hi);
      }
      break;
    case K::atomic_balance:
      push_clipped(out, gap_lo, -1.0 + sup,
                   "atomically balanced lower components still sample "
                   "-1 + V: pollution in (-1, -1 + sup V]",
                   gap_lo, gap_hi);
      break;
    case K::free_split:
      // Spectral splitting of the free operator commutes with the gap
      // projections; nothing is predicted.
      break;
  }
  return out;
}

PredictedSpurious predicted_spurious_periodic() { return {}; }

// ---- experiment drivers ----------------------------------------------------

namespace {

std::vector<ReferenceEig> build_references(const ExperimentConfig& cfg,
                                           const DiracChannelModel* dirac,
                                           const PeriodicModel* periodic,
                                           const SpectrumModel& sm) {
  const ReferenceConfig& rc = cfg.references;
  std::vector<ReferenceEig> out;
  switch (rc.kind) {
    case ReferenceConfig::Kind::none:
      break;
    case ReferenceConfig::Kind::closed_form_levels: {
      if (dirac == nullptr) {
        throw ConfigError(
            "closed-form reference levels require the radial channel model");
      }
      const double kc = dirac->potential.kappa_c;
      if (!(kc > 0.0)) {
        throw ConfigError(
            "closed-form reference levels require a coulomb-type potential "
            "strength");
      }
      for (int i = 0; i < rc.count; ++i) {
        out.push_back(
            {dirac_coulomb_eigenvalue(kc, dirac->kappa_d, i), rc.tolerance});
      }
      break;
    }
    case ReferenceConfig::Kind::converged_scheme: {
      if (dirac == nullptr) {
        throw ConfigError(
            "converged-scheme references require the radial channel model");
      }
      if (!(rc.refine_factor >= 1.0)) {
        throw ConfigError("reference grid refine factor must be >= 1");
      }
      DiracModelConfig refined_cfg = cfg.model.dirac;
      refined_cfg.basis.breakpoints = static_cast<std::size_t>(std::lround(
          static_cast<double>(refined_cfg.basis.breakpoints) *
          rc.refine_factor));
      const DiracChannelModel refined = make_dirac_model(refined_cfg);
      const SchemeSpec clean = rc.scheme.make();
      DiracFamily reference_family(refined, clean, "reference");
      const auto values = reference_family.spectrum(refined.basis.count());
      const double margin =
          cfg.detector.window_margin_fraction * sm.gap_width();
      const double lo = sm.gap_lo + margin;
      const double hi = sm.gap_hi - margin;
      for (double v : values) {
        if (v > lo && v < hi) out.push_back({v, rc.tolerance});
      }
      break;
    }
    case ReferenceConfig::Kind::supercell: {
      if (periodic == nullptr) {
        throw ConfigError("supercell references require the periodic model");
      }
      for (double v : supercell_reference(*periodic, rc.cells,
                                          rc.cell_cutoff)) {
        out.push_back({v, rc.tolerance});
      }
      break;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ReferenceEig& x, const ReferenceEig& y) {
              return x.value < y.value;
            });
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  std::unique_ptr<GalerkinFamily> family;
  const DiracChannelModel* dirac_model = nullptr;
  const PeriodicModel* periodic_model = nullptr;
  std::string scheme_id;

  switch (cfg.model.kind) {
    case ModelConfig::Kind::toy: {
      const ToyModelConfig& t = cfg.model.toy;
      const std::string label =
          std::string("toy-") +
          (t.variant == ToyVariant::bounded_below ? "bounded" : "unbounded");
      family = std::make_unique<ToyFamily>(t.variant, t.angles.make(), label);
      scheme_id = "rotated-frame " + t.angles.label();
      res.spectrum_model = toy_spectrum_model(t.variant);
      res.predicted = predicted_spurious_toy(t);
      break;
    }
    case ModelConfig::Kind::dirac: {
      DiracChannelModel model = make_dirac_model(cfg.model.dirac);
      const SchemeSpec scheme = cfg.scheme.make();
      const std::string label =
          "dirac-channel kappa=" + std::to_string(cfg.model.dirac.kappa) +
          " " + potential_label(cfg.model.dirac.potential);
      auto fam = std::make_unique<DiracFamily>(std::move(model), scheme, label);
      dirac_model = &fam->model();
      family = std::move(fam);
      scheme_id = cfg.scheme.label();
      res.spectrum_model = dirac_spectrum_model();
      res.predicted = predicted_spurious_dirac(scheme,
                                               cfg.model.dirac.potential);
      break;
    }
    case ModelConfig::Kind::periodic: {
      PeriodicWorkspace ws = make_periodic_workspace(cfg.model.periodic);
      res.spectrum_model = periodic_spectrum_model(ws.bands);
      res.predicted = predicted_spurious_periodic();
      periodic_model = &cfg.model.periodic.model;
      family = std::make_unique<PeriodicFamily>(
          cfg.model.periodic.model, std::move(ws.below), std::move(ws.above),
          "periodic-defect");
      scheme_id = "wannier-translates";
      break;
    }
  }

  res.spectrum_model.reference_eigs =
      build_references(cfg, dirac_model, periodic_model, res.spectrum_model);
  res.runs = run_sequence(*family, cfg.sizes, res.spectrum_model, cfg.detector,
                          cfg.threads);
  res.runs.scheme_id = scheme_id;
  res.report = detect_spurious(res.runs, res.spectrum_model, cfg.detector);
  res.pass = compare_report(res.report, res.predicted, res.spectrum_model,
                            cfg.detector);
  return res;
}

ProbeResult run_probe(const ExperimentConfig& cfg) {
  if (cfg.model.kind != ModelConfig::Kind::dirac) {
    throw ConfigError(
        "probes sample radial-channel quadratic forms; set model.kind to "
        "\"dirac\"");
  }
  const DiracChannelModel model = make_dirac_model(cfg.model.dirac);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  ProbeResult out;
  switch (cfg.probe.kind) {
    case ProbeConfig::Kind::balance_samples: {
      const SchemeSpec scheme = cfg.probe.scheme.make();
      out.header = "sample,mu_1,mu_2";
      const std::size_t m = model.basis.count();
      for (std::size_t s = 0; s < cfg.probe.samples; ++s) {
        std::vector<double> phi(m);
        for (double& c : phi) c = uni(rng);
        const auto [mu1, mu2] = mu2_probe(model, scheme, phi);
        out.rows.push_back({static_cast<double>(s), mu1, mu2});
      }
      break;
    }
    case ProbeConfig::Kind::hardy_sweep: {
      out.header = "kappa,sample,hardy_gap";
      const std::size_t m = model.basis.count();
      for (double kappa : cfg.probe.kappas) {
        const double s = std::sqrt(std::max(0.0, 1.0 - kappa * kappa));
        const double mass =
            cfg.probe.m_param > 0.0 ? cfg.probe.m_param : 1.0 + s;
        for (std::size_t i = 0; i < cfg.probe.samples; ++i) {
          std::vector<double> coef(m);
          for (double& c : coef) c = uni(rng);
          const RadialChannelFunction g =
              spline_channel_function(model.basis, std::move(coef));
          out.rows.push_back(
              {kappa, static_cast<double>(i),
               hardy_gap(g, kappa, mass, model.rule)});
        }
      }
      break;
    }
    case ProbeConfig::Kind::bump_sweep: {
      const SchemeSpec scheme = cfg.probe.scheme.make();
      out.header = "n,mu_1,mu_2";
      for (double n : cfg.probe.bump_n) {
        const auto u = two_scale_bump(model.basis, n, cfg.probe.bump_delta);
        const auto [mu1, mu2] = mu2_probe(model, scheme, u);
        out.rows.push_back({n, mu1, mu2});
      }
      break;
    }
  }
  return out;
}

}  // namespace speclab
