#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "speclab/config.hpp"
#include "speclab/errors.hpp"
#include "speclab/run.hpp"

namespace {

using namespace speclab;

ExperimentConfig parse(const std::string& text) {
  return parse_experiment_config(text);
}

bool parse_fails_with(const std::string& text, const std::string& needle) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("config: minimal toy block fills every default") {
  const ExperimentConfig cfg = parse(R"({"model": {"kind": "toy"}})");
  CHECK(cfg.model.kind == ModelConfig::Kind::toy);
  CHECK(cfg.model.toy.variant == ToyVariant::bounded_below);
  CHECK(cfg.model.toy.angles.kind == AngleRuleConfig::Kind::inv_sqrt_2n);
  CHECK(cfg.sizes.empty());
  CHECK(cfg.detector.cluster_fraction == doctest::Approx(5e-3));
  CHECK(cfg.detector.drift_fraction == doctest::Approx(2e-3));
  CHECK(cfg.detector.true_fraction == doctest::Approx(1e-3));
  CHECK(cfg.detector.window_margin_fraction == doctest::Approx(1e-2));
  CHECK(cfg.references.kind == ReferenceConfig::Kind::none);
  CHECK(cfg.output.directory == ".");
  CHECK(cfg.output.report_file == "report.json");
  CHECK(cfg.seed == 0);
  CHECK(cfg.threads == 1);
}

TEST_CASE("config: unknown keys are rejected at every level") {
  CHECK(parse_fails_with(R"({"model": {"kind": "toy"}, "extra": 1})",
                         "unknown key \"extra\""));
  CHECK(parse_fails_with(R"({"model": {"kind": "toy", "bogus": 2}})",
                         "unknown key \"bogus\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "scheme": {"kind": "upper_lower", "x": 0}})",
      "unknown key \"x\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "detector": {"cluster_fraction": 0.01, "typo": 1}})",
      "unknown key \"typo\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "dirac", "potential": {"kind": "coulomb", "kappa_c": 0.5, "oops": 3}}})",
      "unknown key \"oops\""));
}

TEST_CASE("config: keys that do not belong to the chosen kind are rejected") {
  // A zero potential accepts no parameters.
  CHECK(parse_fails_with(
      R"({"model": {"kind": "dirac", "potential": {"kind": "zero", "v0": 1}}})",
      "unknown key \"v0\""));
  // The power angle rule has no "value", the constant rule no "alpha".
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy", "angles": {"kind": "power", "value": 1}}})",
      "unknown key \"value\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy", "angles": {"kind": "constant", "alpha": 1}}})",
      "unknown key \"alpha\""));
  // Only the dual pair takes epsilon; only naive takes mixing.
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "scheme": {"kind": "upper_lower", "epsilon": 0.5}})",
      "unknown key \"epsilon\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "scheme": {"kind": "dual", "mixing": {"kind": "inv_sqrt_2n"}}})",
      "unknown key \"mixing\""));
}

TEST_CASE("config: malformed values carry a pointed message") {
  CHECK(parse_fails_with("not json at all", "not valid JSON"));
  CHECK(parse_fails_with(R"([1, 2, 3])", "top-level config"));
  CHECK(parse_fails_with(R"({"sizes": [4]})", "missing required key \"model\""));
  CHECK(parse_fails_with(R"({"model": {"kind": "nope"}})",
                         "expected one of toy, dirac, periodic"));
  CHECK(parse_fails_with(R"({"model": {"kind": "toy"}, "sizes": [0]})",
                         "positive integer"));
  CHECK(parse_fails_with(R"({"model": {"kind": "toy"}, "sizes": [2.5]})",
                         "expected an integer"));
  CHECK(parse_fails_with(R"({"model": {"kind": "toy"}, "seed": -1})",
                         "nonnegative"));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "scheme": {"kind": "dual", "epsilon": 1.5}})",
      "0 < epsilon <= 1"));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "dirac", "potential": {"kind": "gaussian_well"}}})",
      "missing required key \"v0\""));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy", "variant": "sideways"}})",
      "bounded_below or unbounded_both"));
  CHECK(parse_fails_with(
      R"({"model": {"kind": "toy"}, "detector": {"drift_fraction": 0}})",
      "strictly between 0 and 1"));
}

TEST_CASE("config: periodic radii translate into trial dimensions") {
  const std::string base = R"({
    "model": {
      "kind": "periodic",
      "below_bands": [0],
      "above_bands": [1, 2],
      "max_translate": 8,
      "radii": [2, 4, 6, 8]
    }
  })";
  const ExperimentConfig cfg = parse(base);
  // 3 functions per cell, dimensions 3 * (2R + 1).
  const std::vector<std::size_t> expect = {15, 27, 39, 51};
  CHECK(cfg.sizes == expect);
  CHECK(cfg.model.periodic.model.defect.amplitude < 0.0);

  CHECK(parse_fails_with(R"({
    "model": {"kind": "periodic", "radii": [4]},
    "sizes": [27]
  })",
                         "not both"));
  CHECK(parse_fails_with(R"({
    "model": {"kind": "periodic", "max_translate": 4, "radii": [6]}
  })",
                         "outside [2, max_translate]"));
}

TEST_CASE("config: angle rules and schemes materialize faithfully") {
  AngleRuleConfig constant;
  constant.kind = AngleRuleConfig::Kind::constant;
  constant.value = 0.3;
  CHECK(constant.make()(5) == doctest::Approx(0.3));

  AngleRuleConfig power;
  power.kind = AngleRuleConfig::Kind::power;
  power.alpha = 0.75;
  CHECK(power.make()(16) == doctest::Approx(std::pow(16.0, -0.75)));

  AngleRuleConfig root;
  CHECK(root.make()(8) == doctest::Approx(1.0 / std::sqrt(16.0)));

  SchemeConfig dual;
  dual.kind = SchemeSpec::Kind::dual;
  dual.epsilon = 0.4;
  const SchemeSpec spec = dual.make();
  CHECK(spec.kind == SchemeSpec::Kind::dual);
  CHECK(spec.epsilon == doctest::Approx(0.4));
  CHECK(dual.label() == "dual(eps=0.4)");

  SchemeConfig naive;
  naive.kind = SchemeSpec::Kind::naive;
  naive.mixing = constant;
  const SchemeSpec nspec = naive.make();
  REQUIRE(static_cast<bool>(nspec.mixing_angles));
  CHECK(nspec.mixing_angles(3) == doctest::Approx(0.3));
}

TEST_CASE("serialization: spectra csv is laid out row per eigenvalue") {
  RunSequence runs;
  runs.sizes = {2, 3};
  runs.spectra = {{0.5}, {0.25, 0.75}};
  const std::string csv = spectra_csv(runs);
  CHECK(csv ==
        "size,index,value\n"
        "2,0,0.5\n"
        "3,0,0.25\n"
        "3,1,0.75\n");
}

TEST_CASE("serialization: probe csv uses full precision") {
  const std::string csv =
      probe_csv("a,b,c", {{1.0, 0.1, -2.0}});
  CHECK(csv == "a,b,c\n1,0.10000000000000001,-2\n");
}

TEST_CASE("serialization: report json carries the full tree and is stable") {
  RunSequence runs;
  runs.sizes = {4, 8, 12, 16};
  runs.spectra = {{}, {}, {}, {}};
  runs.model_id = "toy-bounded";
  runs.scheme_id = "rotated-frame";
  runs.window_lo = 0.01;
  runs.window_hi = 0.99;

  SpectrumModel model;
  model.gap_lo = 0.0;
  model.gap_hi = 1.0;
  model.reference_eigs = {{0.5, 1e-3}};

  PollutionReport report;
  CandidatePoint c;
  c.location = 0.499;
  c.persistence_score = 4;
  c.drift = 1e-4;
  c.verdict = Verdict::spurious;
  report.candidates = {c};

  PredictedSpurious predicted;
  predicted.intervals = {{0.5, 0.5}};
  predicted.provenance = {"tail limit"};

  const std::string text = report_json(runs, report, predicted, model, true);
  CHECK(text == report_json(runs, report, predicted, model, true));

  const auto j = nlohmann::json::parse(text);
  CHECK(j.at("model") == "toy-bounded");
  CHECK(j.at("scheme") == "rotated-frame");
  CHECK(j.at("sizes").size() == 4);
  CHECK(j.at("gap").at("hi") == 1.0);
  CHECK(j.at("window").at("lo") == 0.01);
  CHECK(j.at("references").at(0).at("tolerance") == 1e-3);
  CHECK(j.at("candidates").at(0).at("verdict") == "spurious");
  CHECK(j.at("candidates").at(0).at("persistence") == 4);
  CHECK(j.at("predicted").at(0).at("provenance") == "tail limit");
  CHECK(j.at("counts").at("spurious") == 1);
  CHECK(j.at("counts").at("true") == 0);
  CHECK(j.at("pass") == true);
}

TEST_CASE("serialization: atomic write lands complete and leaves no temp") {
  const std::string path = "config_test_atomic.txt";
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream f(path);
  std::string content((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  CHECK(content == "second\n");
  CHECK(!std::ifstream(path + ".tmp").good());
  std::remove(path.c_str());
}

TEST_CASE("run: toy experiment detects the predicted near-half point") {
  const ExperimentConfig cfg = parse(R"({
    "model": {"kind": "toy", "angles": {"kind": "inv_sqrt_2n"}},
    "sizes": [16, 32, 48, 64]
  })");
  const ExperimentResult res = run_experiment(cfg);
  CHECK(res.pass);
  REQUIRE(res.report.spurious().size() == 1);
  const CandidatePoint hit = res.report.spurious().front();
  CHECK(std::abs(hit.location - 0.5) < 5e-3);
  CHECK(hit.persistence_score == 4);
  REQUIRE(res.predicted.intervals.size() == 1);
  CHECK(std::abs(res.predicted.intervals[0].first - 0.5) < 1e-6);
  CHECK(res.runs.model_id == "toy-bounded");
  CHECK(res.runs.scheme_id == "rotated-frame theta=1/sqrt(2n)");

  // Byte-identical outputs on a repeated run of the same config.
  const ExperimentResult again = run_experiment(cfg);
  CHECK(spectra_csv(res.runs) == spectra_csv(again.runs));
  CHECK(report_json(res.runs, res.report, res.predicted, res.spectrum_model,
                    res.pass) ==
        report_json(again.runs, again.report, again.predicted,
                    again.spectrum_model, again.pass));
}

TEST_CASE("run: toy tail-limit predictions per angle rule") {
  ToyModelConfig cfg;

  SUBCASE("bounded slow-vanishing angles leave a point at one half") {
    cfg.variant = ToyVariant::bounded_below;
    cfg.angles.kind = AngleRuleConfig::Kind::inv_sqrt_2n;
    const PredictedSpurious p = predicted_spurious_toy(cfg);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].first == p.intervals[0].second);
    CHECK(std::abs(p.intervals[0].first - 0.5) < 1e-6);
  }
  SUBCASE("bounded fast-vanishing angles predict nothing") {
    cfg.variant = ToyVariant::bounded_below;
    cfg.angles.kind = AngleRuleConfig::Kind::power;
    cfg.angles.alpha = 0.75;
    CHECK(predicted_spurious_toy(cfg).intervals.empty());
  }
  SUBCASE("bounded constant angles escape the gap") {
    cfg.variant = ToyVariant::bounded_below;
    cfg.angles.kind = AngleRuleConfig::Kind::constant;
    cfg.angles.value = 0.5;
    CHECK(predicted_spurious_toy(cfg).intervals.empty());
  }
  SUBCASE("unbounded quarter-pi angles pin a point at zero") {
    cfg.variant = ToyVariant::unbounded_both;
    cfg.angles.kind = AngleRuleConfig::Kind::constant;
    cfg.angles.value = std::atan(1.0);  // pi/4
    const PredictedSpurious p = predicted_spurious_toy(cfg);
    REQUIRE(p.intervals.size() == 1);
    CHECK(std::abs(p.intervals[0].first) < 1e-9);
  }
  SUBCASE("unbounded slow-vanishing angles diverge and predict nothing") {
    cfg.variant = ToyVariant::unbounded_both;
    cfg.angles.kind = AngleRuleConfig::Kind::inv_sqrt_2n;
    CHECK(predicted_spurious_toy(cfg).intervals.empty());
  }
}

TEST_CASE("run: predicted dirac intervals follow the scheme closed forms") {
  const PotentialSpec well = PotentialSpec::gaussian_well(0.5, 2.0);
  const PotentialSpec bump = PotentialSpec::gaussian_bump(0.3, 2.0);
  const PotentialSpec coulomb = PotentialSpec::coulomb(0.5);

  SUBCASE("upper-lower over a well floods below the upper edge") {
    const auto p = predicted_spurious_dirac(SchemeSpec::upper_lower(), well);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].first == doctest::Approx(0.5));
    CHECK(p.intervals[0].second == doctest::Approx(1.0));
  }
  SUBCASE("upper-lower over a bump floods above the lower edge") {
    const auto p = predicted_spurious_dirac(SchemeSpec::upper_lower(), bump);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].first == doctest::Approx(-1.0));
    CHECK(p.intervals[0].second == doctest::Approx(-0.7));
  }
  SUBCASE("kinetic balance clears a well but not a bump") {
    CHECK(predicted_spurious_dirac(SchemeSpec::kinetic_balance(), well)
              .intervals.empty());
    const auto p =
        predicted_spurious_dirac(SchemeSpec::kinetic_balance(), bump);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].second == doctest::Approx(-0.7));
  }
  SUBCASE("small-epsilon dual clears the whole gap for bounded potentials") {
    CHECK(predicted_spurious_dirac(SchemeSpec::dual(0.4), well)
              .intervals.empty());
    CHECK(predicted_spurious_dirac(SchemeSpec::dual(0.4), bump)
              .intervals.empty());
  }
  SUBCASE("epsilon = 1 dual reduces to the upper-lower interval") {
    const auto p = predicted_spurious_dirac(SchemeSpec::dual(1.0), well);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].first == doctest::Approx(0.5));
    CHECK(p.intervals[0].second == doctest::Approx(1.0));
  }
  SUBCASE("unbounded coulomb floods everything except atomic balance") {
    const auto whole = [](const PredictedSpurious& p) {
      return p.intervals.size() == 1 && p.intervals[0].first == -1.0 &&
             p.intervals[0].second == 1.0;
    };
    CHECK(whole(predicted_spurious_dirac(SchemeSpec::upper_lower(), coulomb)));
    CHECK(whole(
        predicted_spurious_dirac(SchemeSpec::kinetic_balance(), coulomb)));
    CHECK(whole(predicted_spurious_dirac(SchemeSpec::dual(0.4), coulomb)));
    CHECK(predicted_spurious_dirac(SchemeSpec::atomic_balance(), coulomb)
              .intervals.empty());
  }
  SUBCASE("free splitting and the naive bracket") {
    CHECK(predicted_spurious_dirac(SchemeSpec::free_split(), coulomb)
              .intervals.empty());
    const auto p = predicted_spurious_dirac(SchemeSpec::naive(), well);
    REQUIRE(p.intervals.size() == 1);
    CHECK(p.intervals[0].first == -1.0);
    CHECK(p.intervals[0].second == 1.0);
  }
}

TEST_CASE("run: closed-form reference levels are attached in order") {
  const ExperimentConfig cfg = parse(R"({
    "model": {
      "kind": "dirac",
      "potential": {"kind": "coulomb", "kappa_c": 0.5},
      "basis": {"r_max": 12, "breakpoints": 24, "grading_ratio": 1.0, "order": 4}
    },
    "scheme": {"kind": "free_split"},
    "sizes": [8, 10, 12, 14],
    "references": {"kind": "closed_form_levels", "count": 3}
  })");
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.spectrum_model.reference_eigs.size() == 3);
  CHECK(res.spectrum_model.reference_eigs[0].value ==
        doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-12));
  CHECK(res.spectrum_model.reference_eigs[0].value <
        res.spectrum_model.reference_eigs[1].value);
  CHECK(res.spectrum_model.reference_eigs[1].value <
        res.spectrum_model.reference_eigs[2].value);
}

TEST_CASE("run: dirac family reuses one free-splitting workspace") {
  DiracModelConfig mc;
  mc.kappa = -1;
  mc.potential = PotentialSpec::gaussian_well(0.3, 2.0);
  mc.basis.r_max = 12.0;
  mc.basis.breakpoints = 30;
  mc.basis.grading_ratio = 1.0;
  mc.basis.order = 4;
  const DiracChannelModel model = make_dirac_model(mc);

  const DiracFamily family(model, SchemeSpec::free_split(), "fs");
  REQUIRE(family.workspace() != nullptr);
  const auto via_family = family.spectrum(12);

  const FreeSplitWorkspace fresh = make_free_split_workspace(model);
  const auto direct =
      eig_generalized(assemble_dirac(model, SchemeSpec::free_split(), 12,
                                     &fresh),
                      false)
          .values;
  REQUIRE(via_family.size() == direct.size());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(via_family[i] == doctest::Approx(direct[i]).epsilon(1e-12));
  }
}

TEST_CASE("run: periodic family maps trial dimensions to translate radii") {
  PeriodicModelConfig cfg;
  cfg.n_xi = 32;
  cfg.max_translate = 6;
  cfg.kept_bands = 3;
  cfg.below_bands = {0};
  cfg.above_bands = {1};
  const PeriodicWorkspace ws = make_periodic_workspace(cfg);
  const PeriodicFamily family(cfg.model, ws.below, ws.above, "periodic");

  CHECK(family.functions_per_cell() == 2);
  CHECK(family.size_for_radius(2) == 10);
  CHECK(family.radius_for_size(10) == 2);
  CHECK(family.radius_for_size(26) == 6);
  CHECK_THROWS_AS(family.radius_for_size(9), ValidationError);   // not a multiple
  CHECK_THROWS_AS(family.radius_for_size(12), ValidationError);  // even cells
  CHECK_THROWS_AS(family.radius_for_size(30), ValidationError);  // R beyond set
  CHECK_THROWS_AS((void)family.size_for_radius(1), ValidationError);

  const auto values = family.spectrum(10);
  REQUIRE(values.size() == 10);
  CHECK(std::is_sorted(values.begin(), values.end()));
}
