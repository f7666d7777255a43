// Radial Dirac channel: potentials, trial-family schemes, pencil assembly,
// reference eigenvalues, the two-dimensional balance probe, the two-scale bump
// family, and the weighted Hardy inequality.
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "speclab/dirac.hpp"
#include "speclab/errors.hpp"

using namespace speclab;

namespace {

DiracChannelModel make_model(int kappa_d, PotentialSpec v, double rmax,
                             std::size_t n_break, double ratio, int order = 6) {
  const std::vector<double> bp =
      ratio == 1.0 ? uniform_breakpoints(0.0, rmax, n_break)
                   : geometric_breakpoints(rmax, n_break, ratio);
  BSplineBasis basis(order, bp);
  QuadratureRule rule = make_rule(bp, 2 * order);
  return DiracChannelModel{kappa_d, std::move(v), std::move(basis),
                          std::move(rule)};
}

// Spline-expanded channel function (value and derivative) from coefficients.
RadialChannelFunction spline_function(const BSplineBasis& basis,
                                      std::vector<double> coeffs) {
  auto eval = [&basis, coeffs](double r, int d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      acc += coeffs[i] * basis.eval(i, r, d);
    return acc;
  };
  return RadialChannelFunction{
      [eval](double r) { return eval(r, 0); },
      [eval](double r) { return eval(r, 1); },
  };
}

double quad_sum(const QuadratureRule& rule,
                const std::function<double(double)>& f) {
  double acc = 0.0;
  for (const auto& p : rule.panels)
    for (std::size_t q = 0; q < p.nodes.size(); ++q)
      acc += p.weights[q] * f(p.nodes[q]);
  return acc;
}

}  // namespace

TEST_CASE("potential descriptions evaluate and carry their essential bounds") {
  const PotentialSpec z = PotentialSpec::zero();
  CHECK(z(1.7) == 0.0);
  CHECK(z.sup_v == 0.0);

  const PotentialSpec bump = PotentialSpec::gaussian_bump(1.5, 2.0);
  CHECK(bump(0.0) == doctest::Approx(1.5));
  CHECK(bump(2.0) == doctest::Approx(1.5 * std::exp(-1.0)));
  CHECK(bump.sup_v == doctest::Approx(1.5));
  CHECK(bump.inf_v == 0.0);

  const PotentialSpec well = PotentialSpec::gaussian_well(0.8, 1.0);
  CHECK(well(1.0) == doctest::Approx(-0.8 * std::exp(-1.0)));
  CHECK(well.inf_v == doctest::Approx(-0.8));
  CHECK(well.sup_v == 0.0);

  const PotentialSpec cou = PotentialSpec::coulomb(0.5);
  CHECK(cou(0.25) == doctest::Approx(-2.0));
  CHECK(std::isinf(cou.inf_v));

  const PotentialSpec sm = PotentialSpec::smeared_coulomb(0.5, 0.1);
  CHECK(sm(0.05) == doctest::Approx(-5.0));
  CHECK(sm(0.2) == doctest::Approx(-2.5));
  CHECK(sm.inf_v == doctest::Approx(-5.0));

  CHECK_THROWS_AS(PotentialSpec::coulomb(0.9), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::coulomb(0.8660254038), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::coulomb(-0.1), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::gaussian_bump(-1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::gaussian_well(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(PotentialSpec::smeared_coulomb(0.5, 0.0), ValidationError);
}

TEST_CASE("point-nucleus reference eigenvalues match the closed form") {
  // Ground value at kappa_c = 1/2, kappa_d = -1 is exactly sqrt(3)/2.
  CHECK(dirac_coulomb_eigenvalue(0.5, -1, 0) ==
        doctest::Approx(0.8660254037844386).epsilon(1e-12));

  // Higher radial numbers from an independently written expression.
  const double gamma = std::sqrt(1.0 - 0.25);
  for (int nr = 1; nr <= 3; ++nr) {
    const double denom = nr + gamma;
    const double expected = 1.0 / std::sqrt(1.0 + 0.25 / (denom * denom));
    CHECK(dirac_coulomb_eigenvalue(0.5, -1, nr) ==
          doctest::Approx(expected).epsilon(1e-13));
  }
  CHECK(dirac_coulomb_eigenvalue(0.5, -1, 1) ==
        doctest::Approx(0.96592583).epsilon(1e-7));

  // Value increases toward 1 with the radial number and stays inside (0, 1).
  double prev = 0.0;
  for (int nr = 0; nr < 6; ++nr) {
    const double e = dirac_coulomb_eigenvalue(0.5, -1, nr);
    CHECK(e > prev);
    CHECK(e < 1.0);
    prev = e;
  }

  CHECK_THROWS_AS(dirac_coulomb_eigenvalue(1.2, -1, 0), ValidationError);
  CHECK_THROWS_AS(dirac_coulomb_eigenvalue(0.5, 0, 0), ValidationError);
  CHECK_THROWS_AS(dirac_coulomb_eigenvalue(-0.5, -1, 0), ValidationError);
  CHECK_THROWS_AS(dirac_coulomb_eigenvalue(0.5, -1, -1), ValidationError);
  CHECK_NOTHROW(dirac_coulomb_eigenvalue(1.5, -2, 0));
}

TEST_CASE("free upper/lower pencil has the exact two-branch structure") {
  const auto model = make_model(-1, PotentialSpec::zero(), 10.0, 12, 1.0, 4);
  const std::size_t m = model.basis.count();
  const GeneralizedPencil p =
      assemble_dirac(model, SchemeSpec::upper_lower(), m);
  REQUIRE(p.h.dim() == 2 * m);

  const EigDecomposition eig = eig_generalized(p, false);

  // Cross-check against the Jacobi-based reduction oracle.
  const std::vector<double> ref = oracle::generalized_eigenvalues(p.h, p.s);
  for (std::size_t i = 0; i < eig.values.size(); ++i)
    CHECK(eig.values[i] ==
          doctest::Approx(ref[i]).epsilon(1e-9).scale(1.0 + std::fabs(ref[i])));

  // Nothing inside the spectral gap, and the two branches mirror each other.
  for (double v : eig.values) CHECK(std::fabs(v) >= 1.0 - 1e-9);
  for (std::size_t i = 0; i < m; ++i)
    CHECK(eig.values[i] == doctest::Approx(-eig.values[2 * m - 1 - i])
                               .epsilon(1e-10)
                               .scale(std::fabs(eig.values[i])));

  // Branch values are +-sqrt(1 + sigma^2) where sigma are the singular values
  // of the overlap-normalized coupling block; computed via the Jacobi oracle.
  const BasisTable table = tabulate(model.basis, model.rule);
  auto one = [](double) { return 1.0; };
  auto inv_r = [](double r) { return 1.0 / r; };
  const std::vector<double> smat = assemble_weighted(table, one, 0, 0);
  std::vector<double> g = assemble_weighted(table, one, 1, 0);
  {
    const std::vector<double> gr = assemble_weighted(table, inv_r, 0, 0);
    const double kappa = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += kappa * gr[i];
  }
  std::vector<double> svec;
  const std::vector<double> svals =
      oracle::jacobi_symmetric(smat, m, &svec);
  std::vector<double> root(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        acc += svec[i * m + k] * svec[j * m + k] / std::sqrt(svals[k]);
      root[i * m + j] = acc;
    }
  auto matmul = [m](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t k = 0; k < m; ++k) {
        const double aik = a[i * m + k];
        for (std::size_t j = 0; j < m; ++j) c[i * m + j] += aik * b[k * m + j];
      }
    return c;
  };
  const std::vector<double> kmat = matmul(matmul(root, g), root);
  std::vector<double> ktk(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        acc += kmat[k * m + i] * kmat[k * m + j];
      ktk[i * m + j] = acc;
    }
  std::vector<double> sigma2 = oracle::jacobi_symmetric(ktk, m);
  std::vector<double> predicted;
  for (double s2 : sigma2) {
    const double v = std::sqrt(1.0 + std::max(s2, 0.0));
    predicted.push_back(v);
    predicted.push_back(-v);
  }
  std::sort(predicted.begin(), predicted.end());
  for (std::size_t i = 0; i < predicted.size(); ++i)
    CHECK(eig.values[i] == doctest::Approx(predicted[i])
                               .epsilon(1e-9)
                               .scale(std::fabs(predicted[i])));
}

TEST_CASE("upper/lower pencil with a potential matches the reduction oracle") {
  const auto model =
      make_model(1, PotentialSpec::gaussian_well(0.5, 2.0), 12.0, 11, 1.0, 4);
  const GeneralizedPencil p =
      assemble_dirac(model, SchemeSpec::upper_lower(), 9);
  const EigDecomposition eig = eig_generalized(p, false);
  const std::vector<double> ref = oracle::generalized_eigenvalues(p.h, p.s);
  REQUIRE(eig.values.size() == ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(eig.values[i] ==
          doctest::Approx(ref[i]).epsilon(1e-9).scale(1.0 + std::fabs(ref[i])));
}

TEST_CASE("kinetic-balance blocks agree with directly assembled integrals") {
  const auto model =
      make_model(-1, PotentialSpec::gaussian_well(0.4, 1.5), 8.0, 9, 1.0, 4);
  const std::size_t m = model.basis.count();
  const GeneralizedPencil p =
      assemble_dirac(model, SchemeSpec::kinetic_balance(), m);

  const BasisTable table = tabulate(model.basis, model.rule);
  const double kappa = -1.0;
  auto one = [](double) { return 1.0; };
  auto inv_r = [](double r) { return 1.0 / r; };
  auto inv_r2 = [](double r) { return 1.0 / (r * r); };
  auto vpot = [&](double r) { return model.potential(r); };
  auto v_inv_r = [&](double r) { return model.potential(r) / r; };
  auto v_inv_r2 = [&](double r) { return model.potential(r) / (r * r); };

  const std::vector<double> S = assemble_weighted(table, one, 0, 0);
  const std::vector<double> MV = assemble_weighted(table, vpot, 0, 0);
  // T = integral (B_i' + k B_i/r)(B_j' + k B_j/r), assembled term by term.
  std::vector<double> T = assemble_weighted(table, one, 1, 1);
  std::vector<double> TV = assemble_weighted(table, vpot, 1, 1);
  {
    const std::vector<double> a10 = assemble_weighted(table, inv_r, 1, 0);
    const std::vector<double> a01 = assemble_weighted(table, inv_r, 0, 1);
    const std::vector<double> a00 = assemble_weighted(table, inv_r2, 0, 0);
    const std::vector<double> b10 = assemble_weighted(table, v_inv_r, 1, 0);
    const std::vector<double> b01 = assemble_weighted(table, v_inv_r, 0, 1);
    const std::vector<double> b00 = assemble_weighted(table, v_inv_r2, 0, 0);
    for (std::size_t i = 0; i < T.size(); ++i) {
      T[i] += kappa * (a10[i] + a01[i]) + kappa * kappa * a00[i];
      TV[i] += kappa * (b10[i] + b01[i]) + kappa * kappa * b00[i];
    }
  }

  double scale = p.h.max_abs();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t ij = i * m + j;
      CHECK(p.h.at(i, j).real() ==
            doctest::Approx(S[ij] + MV[ij]).scale(scale).epsilon(1e-12));
      CHECK(p.h.at(i, m + j).real() ==
            doctest::Approx(T[ij]).scale(scale).epsilon(1e-12));
      CHECK(p.h.at(m + i, m + j).real() ==
            doctest::Approx(-T[ij] + TV[ij]).scale(scale).epsilon(1e-12));
      CHECK(p.s.at(i, j).real() ==
            doctest::Approx(S[ij]).scale(scale).epsilon(1e-12));
      CHECK(p.s.at(i, m + j).real() == doctest::Approx(0.0).scale(1.0));
      CHECK(p.s.at(m + i, m + j).real() ==
            doctest::Approx(T[ij]).scale(scale).epsilon(1e-12));
    }
}

TEST_CASE("two-parameter splitting families have block-diagonal overlaps") {
  const auto model =
      make_model(-1, PotentialSpec::gaussian_well(0.3, 2.0), 9.0, 10, 1.0, 4);
  const std::size_t n = 7;
  for (const SchemeSpec& scheme :
       {SchemeSpec::dual(0.5), SchemeSpec::dual_kinetic_balance(0.4)}) {
    const GeneralizedPencil p = assemble_dirac(model, scheme, n);
    const double scale = p.s.max_abs();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        CHECK(std::fabs(p.s.at(i, n + j).real()) <= 1e-12 * scale);
        CHECK(std::fabs(p.s.at(n + i, j).real()) <= 1e-12 * scale);
      }
    // The pencil is a valid (Hermitian, positive overlap) problem.
    const EigDecomposition eig = eig_generalized(p, false);
    CHECK(eig.values.size() == 2 * n);
    const std::vector<double> ref = oracle::generalized_eigenvalues(p.h, p.s);
    for (std::size_t i = 0; i < ref.size(); ++i)
      CHECK(eig.values[i] == doctest::Approx(ref[i])
                                 .epsilon(1e-9)
                                 .scale(1.0 + std::fabs(ref[i])));
  }
}

TEST_CASE("every direct scheme yields a solvable Hermitian pencil") {
  const auto model =
      make_model(1, PotentialSpec::gaussian_well(0.6, 1.0), 8.0, 9, 1.0, 4);
  for (const SchemeSpec& scheme :
       {SchemeSpec::naive(), SchemeSpec::upper_lower(),
        SchemeSpec::kinetic_balance(), SchemeSpec::atomic_balance(),
        SchemeSpec::dual(0.7), SchemeSpec::dual_kinetic_balance(0.9)}) {
    const GeneralizedPencil p = assemble_dirac(model, scheme, 6);
    REQUIRE(p.h.dim() == 12);
    CHECK_NOTHROW(p.h.validate_hermitian());
    CHECK_NOTHROW(p.s.validate_hermitian());
    const EigDecomposition eig = eig_generalized(p, true);
    CHECK(eig.values.size() == 12);
    CHECK(std::is_sorted(eig.values.begin(), eig.values.end()));
  }
}

TEST_CASE("free-splitting at full size reproduces the upper/lower spectrum") {
  const auto model =
      make_model(-1, PotentialSpec::gaussian_well(0.5, 2.0), 10.0, 10, 1.0, 4);
  const std::size_t m = model.basis.count();
  const FreeSplitWorkspace ws = make_free_split_workspace(model);
  CHECK(ws.basis_count == m);
  CHECK(std::is_sorted(ws.free_values.begin(), ws.free_values.end()));
  for (double v : ws.free_values) CHECK(std::fabs(v) >= 1.0 - 1e-9);

  // Same span at full size, so the eigenvalues must coincide.
  const GeneralizedPencil direct =
      assemble_dirac(model, SchemeSpec::upper_lower(), m);
  const GeneralizedPencil split =
      assemble_dirac(model, SchemeSpec::free_split(), m, &ws);
  const std::vector<double> a = eig_generalized(direct, false).values;
  const std::vector<double> b = eig_generalized(split, false).values;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] ==
          doctest::Approx(b[i]).epsilon(1e-8).scale(1.0 + std::fabs(a[i])));
}

TEST_CASE("free-splitting of the free operator is exactly decoupled") {
  const auto model = make_model(-1, PotentialSpec::zero(), 10.0, 10, 1.0, 4);
  const FreeSplitWorkspace ws = make_free_split_workspace(model);
  const std::size_t size = 5;
  const GeneralizedPencil p =
      assemble_dirac(model, SchemeSpec::free_split(), size, &ws);

  // Overlap of the selected modes is the identity.
  for (std::size_t i = 0; i < 2 * size; ++i)
    for (std::size_t j = 0; j < 2 * size; ++j) {
      const double want = i == j ? 1.0 : 0.0;
      CHECK(p.s.at(i, j).real() == doctest::Approx(want).scale(1.0).epsilon(1e-10));
    }

  // No coupling between the positive and negative branches, and the diagonal
  // blocks hold the free eigenvalues nearest the gap.
  const std::size_t m = ws.basis_count;
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j) {
      CHECK(std::fabs(p.h.at(i, size + j).real()) <= 1e-10);
      const double pos = i == j ? ws.free_values[m + i] : 0.0;
      const double neg = i == j ? ws.free_values[m - 1 - i] : 0.0;
      CHECK(p.h.at(i, j).real() == doctest::Approx(pos).scale(1.0).epsilon(1e-9));
      CHECK(p.h.at(size + i, size + j).real() ==
            doctest::Approx(neg).scale(1.0).epsilon(1e-9));
    }
}

TEST_CASE("free-splitting resolves the point-nucleus ground state") {
  const auto model =
      make_model(-1, PotentialSpec::coulomb(0.5), 25.0, 150, 1.03);
  const FreeSplitWorkspace ws = make_free_split_workspace(model);
  const GeneralizedPencil p =
      assemble_dirac(model, SchemeSpec::free_split(), 150, &ws);
  const EigDecomposition eig = eig_generalized(p, false);

  double lowest_in_gap = 2.0;
  for (double v : eig.values)
    if (v > -0.9 && v < 0.99) {
      lowest_in_gap = v;
      break;
    }
  const double reference = dirac_coulomb_eigenvalue(0.5, -1, 0);
  CHECK(lowest_in_gap == doctest::Approx(reference).epsilon(2e-4));
  CHECK(lowest_in_gap >= reference - 1e-6);  // variational from above
}

TEST_CASE("balance probe on the free operator has the closed-form pair") {
  const auto model = make_model(-1, PotentialSpec::zero(), 10.0, 14, 1.0, 5);
  const std::size_t m = model.basis.count();
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> phi(m);
    for (double& c : phi) c = dist(rng);

    // t^2 = ||(d/dr + kappa/r) phi||^2 / ||phi||^2 by direct quadrature.
    RadialChannelFunction f = spline_function(model.basis, phi);
    const double n0 = quad_sum(model.rule, [&](double r) {
      const double v = f.value(r);
      return v * v;
    });
    const double n1 = quad_sum(model.rule, [&](double r) {
      const double d = f.derivative(r) - f.value(r) / r;
      return d * d;
    });
    const double t2 = n1 / n0;

    const auto [mu1, mu2] =
        mu2_probe(model, SchemeSpec::kinetic_balance(), phi);
    CHECK(mu2 == doctest::Approx(std::sqrt(1.0 + t2)).epsilon(1e-10));
    CHECK(mu1 == doctest::Approx(-std::sqrt(1.0 + t2)).epsilon(1e-10));
    CHECK(mu2 > 1.0);

    // With V = 0 atomic balance spans the same two-dimensional space.
    const auto [a1, a2] = mu2_probe(model, SchemeSpec::atomic_balance(), phi);
    CHECK(a1 == doctest::Approx(mu1).epsilon(1e-12));
    CHECK(a2 == doctest::Approx(mu2).epsilon(1e-12));

    // The dual-kinetic probe is well defined and straddles the gap edges.
    const auto [d1, d2] =
        mu2_probe(model, SchemeSpec::dual_kinetic_balance(0.5), phi);
    CHECK(d1 < d2);
    CHECK(std::isfinite(d1));
    CHECK(std::isfinite(d2));
  }
}

TEST_CASE("atomic-balance probe obeys the point-nucleus lower bound") {
  const auto model = make_model(-1, PotentialSpec::coulomb(0.5), 20.0, 60, 1.1);
  const std::size_t m = model.basis.count();
  const double bound = 8.0 * std::sqrt(3.0) - 13.0;  // 0.85640646...
  CHECK(bound == doctest::Approx(0.8564064605510175).epsilon(1e-12));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> phi(m);
    for (double& c : phi) c = dist(rng);
    const auto [mu1, mu2] = mu2_probe(model, SchemeSpec::atomic_balance(), phi);
    (void)mu1;
    CHECK(mu2 >= bound - 1e-9);
  }
  // Single-spline probes approach the gap edge from above far out, where the
  // potential and the derivative both fade; none crosses the bound.
  double worst = 2.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> phi(m, 0.0);
    phi[i] = 1.0;
    const auto [mu1, mu2] = mu2_probe(model, SchemeSpec::atomic_balance(), phi);
    (void)mu1;
    CHECK(mu2 >= bound - 1e-9);
    worst = std::min(worst, mu2);
  }
  CHECK(worst < 1.3);
}

TEST_CASE("balance probe rejects invalid inputs") {
  const auto model = make_model(-1, PotentialSpec::zero(), 10.0, 10, 1.0, 4);
  const std::size_t m = model.basis.count();
  std::vector<double> phi(m, 0.0);
  CHECK_THROWS_AS(mu2_probe(model, SchemeSpec::kinetic_balance(), phi),
                  ValidationError);  // zero probe
  phi.assign(m, 0.1);
  CHECK_THROWS_AS(mu2_probe(model, SchemeSpec::upper_lower(), phi),
                  ValidationError);  // not a balance scheme
  CHECK_THROWS_AS(
      mu2_probe(model, SchemeSpec::kinetic_balance(), {0.1, 0.2}),
      ValidationError);  // wrong length
}

TEST_CASE("assembly rejects inadmissible schemes and sizes") {
  const auto model =
      make_model(-1, PotentialSpec::gaussian_bump(2.5, 1.0), 8.0, 9, 1.0, 4);
  CHECK_THROWS_AS(assemble_dirac(model, SchemeSpec::atomic_balance(), 4),
                  ValidationError);  // sup V >= 2
  CHECK_THROWS_AS(SchemeSpec::dual(0.0), ValidationError);
  CHECK_THROWS_AS(SchemeSpec::dual(1.5), ValidationError);
  CHECK_THROWS_AS(SchemeSpec::dual_kinetic_balance(-0.2), ValidationError);
  CHECK_THROWS_AS(assemble_dirac(model, SchemeSpec::upper_lower(), 0),
                  ValidationError);
  CHECK_THROWS_AS(
      assemble_dirac(model, SchemeSpec::upper_lower(),
                     model.basis.count() + 1),
      ValidationError);
  DiracChannelModel bad = model;
  bad.kappa_d = 0;
  CHECK_THROWS_AS(assemble_dirac(bad, SchemeSpec::upper_lower(), 4),
                  ValidationError);

  const auto ok =
      make_model(-1, PotentialSpec::gaussian_bump(1.5, 1.0), 8.0, 9, 1.0, 4);
  CHECK_NOTHROW(assemble_dirac(ok, SchemeSpec::atomic_balance(), 4));
}

TEST_CASE("two-scale bump approximates the analytic profile") {
  // Probe grid graded toward the origin so both scales are resolved.
  const std::vector<double> bp = geometric_breakpoints(5.0, 196, 1.05);
  BSplineBasis basis(6, bp);
  const double n = 4.0, delta = 4.0;
  const std::vector<double> c = two_scale_bump(basis, n, delta);
  REQUIRE(c.size() == basis.count());

  auto u = [&](double r) {
    auto zeta = [](double s) {
      auto ramp = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
      };
      if (s <= 1.0 || s >= 4.0) return 0.0;
      if (s < 2.0) return ramp(s - 1.0);
      if (s <= 3.0) return 1.0;
      return ramp(4.0 - s);
    };
    return r * (std::sqrt(n) * zeta(n * r) +
                std::sqrt(delta * n) * zeta(delta * n * r));
  };

  // Relative L2 error of the spline representation against the profile.
  const QuadratureRule fine = make_rule(bp, 18);
  RadialChannelFunction f = spline_function(basis, c);
  const double err2 = quad_sum(fine, [&](double r) {
    const double d = f.value(r) - u(r);
    return d * d;
  });
  const double norm2 = quad_sum(fine, [&](double r) {
    const double v = u(r);
    return v * v;
  });
  CHECK(norm2 > 0.0);
  const double rel_err = std::sqrt(err2 / norm2);
  CHECK(rel_err < 2e-3);

  // A coarser grading leaves a larger representation error.
  {
    const std::vector<double> bp_c = geometric_breakpoints(5.0, 92, 1.12);
    BSplineBasis coarse_basis(6, bp_c);
    const std::vector<double> cc = two_scale_bump(coarse_basis, n, delta);
    RadialChannelFunction fc = spline_function(coarse_basis, cc);
    const QuadratureRule fine_c = make_rule(bp_c, 18);
    const double err2_c = quad_sum(fine_c, [&](double r) {
      const double d = fc.value(r) - u(r);
      return d * d;
    });
    CHECK(std::sqrt(err2_c / norm2) > 2.0 * rel_err);
  }

  // The squared norm has the closed form (1 + delta^-2)/n^2 * int s^2 zeta^2,
  // with the one-dimensional integral evaluated by an independent fine sum.
  double shape = 0.0;
  {
    const int steps = 200000;
    const double h = 3.0 / steps;
    for (int i = 0; i < steps; ++i) {
      const double s = 1.0 + (i + 0.5) * h;
      auto ramp = [](double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
      };
      double z;
      if (s < 2.0)
        z = ramp(s - 1.0);
      else if (s <= 3.0)
        z = 1.0;
      else
        z = ramp(4.0 - s);
      shape += h * s * s * z * z;
    }
  }
  const double expected_norm2 = shape * (1.0 + 1.0 / (delta * delta)) / (n * n);
  CHECK(norm2 == doctest::Approx(expected_norm2).epsilon(1e-6));

  CHECK_THROWS_AS(two_scale_bump(basis, 4.0, 2.0), ValidationError);
  CHECK_THROWS_AS(two_scale_bump(basis, 0.5, 4.0), ValidationError);

  BSplineBasis coarse(4, uniform_breakpoints(0.0, 5.0, 21));
  CHECK_THROWS_AS(two_scale_bump(coarse, 64.0, 256.0), ResolutionError);
}

TEST_CASE("weighted hardy difference is nonnegative and tight at the "
          "matched mass") {
  const std::vector<double> bp = geometric_breakpoints(30.0, 80, 1.08);
  BSplineBasis basis(5, bp);
  const QuadratureRule rule = make_rule(bp, 12);
  std::mt19937_64 rng(991);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  for (double kappa : {0.0, 0.3, 0.6, 0.86}) {
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<double> coeffs(basis.count());
      for (double& c : coeffs) c = dist(rng);
      RadialChannelFunction g = spline_function(basis, coeffs);
      const double m_param = 0.5 + rep;
      const double gap = hardy_gap(g, kappa, m_param, rule);
      const double scale = quad_sum(rule, [&](double r) {
        const double gv = g.value(r);
        const double gd = g.derivative(r) - gv / r;
        return gd * gd / (m_param + kappa / r) + gv * gv * (1.0 + kappa / r);
      });
      CHECK(gap >= -1e-8 * scale);
    }
  }

  // Equality case: g = r^s e^{-kappa r} at the matched mass m = 1 + s,
  // s = sqrt(1 - kappa^2).
  const double kappa = 0.5;
  const double s = std::sqrt(1.0 - kappa * kappa);
  const std::vector<double> bpe = geometric_breakpoints(60.0, 240, 1.02);
  const QuadratureRule rule_eq = make_rule(bpe, 14);
  RadialChannelFunction g{
      [=](double r) { return std::pow(r, s) * std::exp(-kappa * r); },
      [=](double r) {
        return (s / r - kappa) * std::pow(r, s) * std::exp(-kappa * r);
      }};
  const double scale_eq = quad_sum(rule_eq, [&](double r) {
    const double gv = g.value(r);
    return gv * gv;
  });
  const double at_matched = hardy_gap(g, kappa, 1.0 + s, rule_eq);
  CHECK(std::fabs(at_matched) <= 1e-3 * scale_eq);
  CHECK(at_matched >= -1e-8 * scale_eq);
  // Away from the matched mass the difference is strictly positive.
  CHECK(hardy_gap(g, kappa, 0.7, rule_eq) > 1e-3 * scale_eq);
  CHECK(hardy_gap(g, kappa, 3.0, rule_eq) > 1e-3 * scale_eq);

  CHECK_THROWS_AS(hardy_gap(g, 0.9, 1.0, rule_eq), ValidationError);
  CHECK_THROWS_AS(hardy_gap(g, -0.1, 1.0, rule_eq), ValidationError);
  CHECK_THROWS_AS(hardy_gap(g, 0.5, 0.0, rule_eq), ValidationError);
}

TEST_CASE("free-splitting coefficients map back to spline coefficients") {
  const auto model = make_model(-1, PotentialSpec::zero(), 10.0, 10, 1.0, 4);
  const FreeSplitWorkspace ws = make_free_split_workspace(model);
  const std::size_t size = 4, m = ws.basis_count;

  // Unit vector in the subspace picks out exactly one free mode.
  std::vector<cplx> e(2 * size, cplx(0.0, 0.0));
  e[1] = cplx(1.0, 0.0);
  const std::vector<double> z = free_split_to_spline(ws, size, e);
  REQUIRE(z.size() == 2 * m);
  double diff = 0.0;
  for (std::size_t i = 0; i < 2 * m; ++i)
    diff = std::max(diff, std::fabs(z[i] - ws.modes[i * 2 * m + (m + 1)]));
  CHECK(diff <= 1e-14);

  CHECK_THROWS_AS(free_split_to_spline(ws, size, {cplx(1.0, 0.0)}),
                  ValidationError);
  CHECK_THROWS_AS(free_split_to_spline(ws, m + 1, e), ValidationError);
}
