// Rotated-frame model tests: closed-form spectra against the eigensolver,
// frozen small cases, limiting behavior of the gap intruder, and the
// persistent midgap point of the sign-indefinite variant.

#include <cmath>

#include "doctest.h"
#include "speclab/eig.hpp"
#include "speclab/toy.hpp"

using speclab::ToyRotatedModel;
using speclab::ToyVariant;

TEST_CASE("small bounded-variant spectra match hand-evaluated values") {
  ToyRotatedModel m{ToyVariant::bounded_below, speclab::theta_inv_sqrt_2n(), 2};
  auto spec = toy_exact_spectrum(m);
  REQUIRE(spec.size() == 3);
  // {0, 2 sin^2(1/2), 1}: the intruder sits inside the gap (0, 1).
  CHECK(spec[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(spec[1] == doctest::Approx(0.459697694131860).epsilon(1e-12));
  CHECK(spec[2] == doctest::Approx(1.0).epsilon(1e-14));

  // n = 1 with theta = pi/4: a single vector, value sin^2(pi/4) = 1/2.
  ToyRotatedModel one{ToyVariant::bounded_below,
                      speclab::theta_constant(M_PI / 4.0), 1};
  auto sone = toy_exact_spectrum(one);
  REQUIRE(sone.size() == 1);
  CHECK(sone[0] == doctest::Approx(0.5).epsilon(1e-14));

  // The intruder follows n sin^2(theta_n) for the tail angle.
  for (std::size_t n : {3u, 4u, 9u}) {
    ToyRotatedModel mn{ToyVariant::bounded_below, speclab::theta_inv_sqrt_2n(), n};
    auto sn = toy_exact_spectrum(mn);
    const double th = 1.0 / std::sqrt(2.0 * double(n));
    const double intruder = double(n) * std::sin(th) * std::sin(th);
    CHECK(std::count_if(sn.begin(), sn.end(), [&](double v) {
            return std::fabs(v - intruder) < 1e-12;
          }) == 1);
  }
}

TEST_CASE("zero angles give the uncompressed diagonal spectrum") {
  ToyRotatedModel m{ToyVariant::bounded_below, speclab::theta_constant(0.0), 5};
  auto spec = toy_exact_spectrum(m);
  REQUIRE(spec.size() == 9);
  // 0 with multiplicity n = 5, then 1 .. n-1.
  for (int i = 0; i < 5; ++i) CHECK(spec[std::size_t(i)] == 0.0);
  for (int k = 1; k <= 4; ++k)
    CHECK(spec[std::size_t(4 + k)] == doctest::Approx(double(k)).epsilon(1e-14));
}

TEST_CASE("assembled matrices reproduce the closed-form spectra exactly") {
  for (ToyVariant variant : {ToyVariant::bounded_below, ToyVariant::unbounded_both}) {
    for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 12u}) {
      for (int rule = 0; rule < 3; ++rule) {
        ToyRotatedModel m;
        m.variant = variant;
        m.truncation = n;
        m.theta_rule = rule == 0   ? speclab::theta_inv_sqrt_2n()
                       : rule == 1 ? speclab::theta_power(0.75)
                                   : speclab::theta_constant(0.3);
        auto matrix = assemble_toy(m);
        REQUIRE(matrix.dim() == 2 * n - 1);
        auto eig = speclab::eig_hermitian(matrix, false);
        auto exact = toy_exact_spectrum(m);
        REQUIRE(eig.values.size() == exact.size());
        for (std::size_t i = 0; i < exact.size(); ++i)
          CHECK(eig.values[i] ==
                doctest::Approx(exact[i]).scale(1.0).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("the sign-indefinite variant keeps a persistent midgap value") {
  // With theta = pi/4 the tail entry is -n cos(pi/2) = 0: an exactly midgap
  // point that survives every truncation while all true values sit at |k| >= 1.
  for (std::size_t n : {2u, 4u, 8u, 16u}) {
    ToyRotatedModel m{ToyVariant::unbounded_both,
                      speclab::theta_constant(M_PI / 4.0), n};
    auto spec = toy_exact_spectrum(m);
    CHECK(std::count_if(spec.begin(), spec.end(), [](double v) {
            return std::fabs(v) < 1e-14;
          }) == 1);
    auto eig = speclab::eig_hermitian(assemble_toy(m), false);
    CHECK(std::count_if(eig.values.begin(), eig.values.end(), [](double v) {
            return std::fabs(v) < 1e-10;
          }) == 1);
  }
}

TEST_CASE("the intruder converges to 1/2 for the square-root rule and to 0 for faster decay") {
  // n sin^2(theta_n) with theta_n = 1/sqrt(2n) approaches 1/2 from below;
  // with theta_n = n^(-3/4) it decays like n^(-1/2).
  double prev_gap = 1.0;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double th = 1.0 / std::sqrt(2.0 * double(n));
    const double v = double(n) * std::sin(th) * std::sin(th);
    const double gap = std::fabs(v - 0.5);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-4);

  double prev = 1.0;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double th = std::pow(double(n), -0.75);
    const double v = double(n) * std::sin(th) * std::sin(th);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 0.02);
}

TEST_CASE("toy model validation errors") {
  ToyRotatedModel m{ToyVariant::bounded_below, speclab::theta_constant(0.1), 0};
  CHECK_THROWS_AS(assemble_toy(m), speclab::ValidationError);
  CHECK_THROWS_AS(toy_exact_spectrum(m), speclab::ValidationError);

  ToyRotatedModel bad{ToyVariant::bounded_below, speclab::theta_constant(2.0), 3};
  CHECK_THROWS_AS(assemble_toy(bad), speclab::ValidationError);

  ToyRotatedModel none{ToyVariant::bounded_below, nullptr, 3};
  CHECK_THROWS_AS(assemble_toy(none), speclab::ValidationError);
}
