#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"

using namespace qg;
using qgtest::GraphBuilder;
using qgtest::fixture;

namespace {

MetricGraph interval(double l) {
  GraphBuilder b(2);
  b.symbol("u", l).edge("e1", 0, 1, 1, 1, "u");
  return b.g;
}

CouplingSet couple(const MetricGraph& g, CouplingType type, std::initializer_list<double> a) {
  CouplingSet B;
  B.type = type;
  B.alpha = Eigen::VectorXd(g.vertex_count);
  int i = 0;
  for (double v : a) B.alpha(i++) = v;
  return B;
}

}  // namespace

TEST_CASE("reflection pair on the interval has vanishing residuals") {
  const auto g = interval(1.0);
  const double a = 1.3, b = -0.7;
  for (const auto type : {CouplingType::Delta, CouplingType::DeltaPrime}) {
    const auto B1 = couple(g, type, {a, b});
    const auto B2 = couple(g, type, {b, a});
    for (int m = 1; m <= 6; ++m) {
      const double t = type == CouplingType::Delta ? trace_residual_delta(g, B1, B2, m)
                                                   : trace_residual_delta_prime(g, B1, B2, m);
      CHECK(std::abs(t) < 1e-12 * residual_scale(g, B1, B2, m));
    }
  }
}

TEST_CASE("first residual separates diag(1,0) from the Neumann interval") {
  const auto g = interval(1.0);
  const auto B1 = couple(g, CouplingType::Delta, {1.0, 0.0});
  const auto B2 = couple(g, CouplingType::Delta, {0.0, 0.0});
  CHECK(trace_residual_delta(g, B1, B2, 1) == doctest::Approx(1.0).epsilon(1e-14));
  // T_m = (1/m) sum (b1^m - b2^m) / gamma^m on diagonal couplings
  CHECK(trace_residual_delta(g, B1, B2, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("residuals are antisymmetric in the coupling pair") {
  const auto g = fixture("star3.graph");
  const auto B1 = couple(g, CouplingType::Delta, {1.3, 0.5, -0.7, 2.0});
  const auto B2 = couple(g, CouplingType::Delta, {0.9, 1.1, 0.4, -1.5});
  for (int m = 1; m <= 4; ++m)
    CHECK(trace_residual_delta(g, B1, B2, m) ==
          doctest::Approx(-trace_residual_delta(g, B2, B1, m)).epsilon(1e-12));
}

TEST_CASE("delta-prime residuals require invertible couplings") {
  const auto g = interval(1.0);
  const auto B1 = couple(g, CouplingType::DeltaPrime, {1.0, 0.0});
  const auto B2 = couple(g, CouplingType::DeltaPrime, {1.0, 2.0});
  CHECK_THROWS_AS(trace_residual_delta_prime(g, B1, B2, 1), std::invalid_argument);
  CHECK_THROWS_AS(logdet_ratio(g, B1, B2, 50.0), std::invalid_argument);
}

TEST_CASE("gamma-exponent variants disagree once valences do") {
  const auto g = fixture("star3.graph");
  const auto B1 = couple(g, CouplingType::DeltaPrime, {1.3, 0.5, -0.7, 2.0});
  const auto B2 = couple(g, CouplingType::DeltaPrime, {0.9, 1.1, 0.4, -1.5});
  const double v = trace_residual_delta_prime(g, B1, B2, 2, GammaExponentVariant::Verified);
  const double p = trace_residual_delta_prime(g, B1, B2, 2, GammaExponentVariant::Printed);
  CHECK(std::abs(v - p) > 1e-3);
}

TEST_CASE("logdet_ratio vanishes for equal pairs and decays in tau") {
  const auto g = fixture("star3.graph");
  const auto B = couple(g, CouplingType::Delta, {1.0, 0.2, -0.4, 0.8});
  CHECK(logdet_ratio(g, B, B, 60.0) == 0.0);
  const auto B2 = couple(g, CouplingType::Delta, {0.5, 0.1, 0.3, -0.2});
  const double r40 = std::abs(logdet_ratio(g, B, B2, 40.0));
  const double r80 = std::abs(logdet_ratio(g, B, B2, 80.0));
  const double r160 = std::abs(logdet_ratio(g, B, B2, 160.0));
  CHECK(r80 < r40);
  CHECK(r160 < r80);
  CHECK_THROWS_AS(logdet_ratio(g, B, B2, 0.0), std::invalid_argument);
}

TEST_CASE("logdet_ratio matches the partial residual sum at large tau") {
  const auto g = interval(1.0);
  for (const auto type : {CouplingType::Delta, CouplingType::DeltaPrime}) {
    const auto B1 = couple(g, type, {1.3, 0.5});
    const auto B2 = couple(g, type, {0.8, -0.9});
    const double tau = 50.0;
    double sum = 0.0;
    for (int m = 1; m <= 10; ++m) {
      const double t = type == CouplingType::Delta ? trace_residual_delta(g, B1, B2, m)
                                                   : trace_residual_delta_prime(g, B1, B2, m);
      // the tau^{-m} coefficient of the expansion is -(-1)^m T_m
      sum += -std::pow(-1.0, m) * t * std::pow(tau, -m);
    }
    CHECK(logdet_ratio(g, B1, B2, tau) == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("asymptotic fit recovers the first three coefficients") {
  SUBCASE("delta on interval, star, triangle") {
    const struct {
      const char* name;
      double a1, a2;
    } cases[] = {{"interval_pi.graph", 1.3, 0.4}, {"star3.graph", 0.9, -0.6}, {"triangle.graph", 0.7, 1.8}};
    for (const auto& c : cases) {
      const auto g = fixture(c.name);
      const auto B1 = CouplingSet::scalar(g, CouplingType::Delta, c.a1);
      const auto B2 = CouplingSet::scalar(g, CouplingType::Delta, c.a2);
      const auto rep = asymptotic_logdet_check(g, B1, B2, 3);
      REQUIRE(rep.orders.size() == 3);
      for (const auto& o : rep.orders) {
        CAPTURE(c.name);
        CAPTURE(o.m);
        CHECK(o.rel_error < 1e-6);
      }
    }
  }
  SUBCASE("delta-prime decides the gamma exponent on the 3-star") {
    const auto g = fixture("star3.graph");
    const auto B1 = couple(g, CouplingType::DeltaPrime, {1.3, 0.5, -0.7, 2.0});
    const auto B2 = couple(g, CouplingType::DeltaPrime, {0.9, 1.1, 0.4, -1.5});
    const auto rep = asymptotic_logdet_check(g, B1, B2, 3);
    CHECK(rep.variant_decided);
    CHECK(rep.selected == GammaExponentVariant::Verified);
    for (const auto& o : rep.orders) CHECK(o.rel_error < 1e-6);
    REQUIRE_FALSE(rep.printed_orders.empty());
    bool printed_fails = false;
    for (const auto& o : rep.printed_orders)
      if (o.rel_error > 1e-6) printed_fails = true;
    CHECK(printed_fails);
  }
  SUBCASE("input validation") {
    const auto g = interval(1.0);
    const auto B = couple(g, CouplingType::Delta, {1.0, 2.0});
    CHECK_THROWS_AS(asymptotic_logdet_check(g, B, B, 0), std::invalid_argument);
    CHECK_THROWS_AS(asymptotic_logdet_check(g, B, B, 3, {40.0, 50.0}), std::invalid_argument);
  }
}

TEST_CASE("isospectrality gate certifies distinct pairs") {
  const auto g = fixture("star3.graph");
  SUBCASE("scalar couplings, corollary shortcut") {
    const auto B1 = CouplingSet::scalar(g, CouplingType::Delta, 1.0);
    const auto B2 = CouplingSet::scalar(g, CouplingType::Delta, 2.0);
    const auto r = isospectrality_gate(g, B1, B2, 6);
    CHECK(r.verdict == GateVerdict::CertifiedDistinct);
    CHECK_FALSE(r.corollary.empty());
    CHECK(r.witness_order >= 1);
  }
  SUBCASE("zero coupling versus nonnegative coupling") {
    const auto B1 = CouplingSet::kirchhoff(g);
    const auto B2 = couple(g, CouplingType::Delta, {0.0, 1.0, 0.0, 0.0});
    CHECK(isospectrality_gate(g, B1, B2, 6).verdict == GateVerdict::CertifiedDistinct);
  }
  SUBCASE("entrywise ordered couplings") {
    const auto B1 = couple(g, CouplingType::Delta, {0.1, 0.2, 0.3, 0.4});
    const auto B2 = couple(g, CouplingType::Delta, {0.2, 0.3, 0.4, 0.6});
    CHECK(isospectrality_gate(g, B1, B2, 6).verdict == GateVerdict::CertifiedDistinct);
  }
  SUBCASE("reflection pair stays inconclusive") {
    const auto gi = interval(1.0);
    const auto B1 = couple(gi, CouplingType::Delta, {1.3, -0.7});
    const auto B2 = couple(gi, CouplingType::Delta, {-0.7, 1.3});
    const auto r = isospectrality_gate(gi, B1, B2, 6);
    CHECK(r.verdict == GateVerdict::Inconclusive);
    CHECK(r.witness_order == 0);
  }
  SUBCASE("single-nonzero permutation on equal valences stays inconclusive") {
    // diag(1,0) vs diag(0,1) on the interval is a genuine isospectral pair;
    // the value-multiset shortcut must not fire.
    const auto gi = interval(1.0);
    const auto B1 = couple(gi, CouplingType::Delta, {1.0, 0.0});
    const auto B2 = couple(gi, CouplingType::Delta, {0.0, 1.0});
    CHECK(isospectrality_gate(gi, B1, B2, 6).verdict == GateVerdict::Inconclusive);
  }
  SUBCASE("witness order skips a cancelled first residual") {
    const auto gi = interval(1.0);
    const auto B1 = couple(gi, CouplingType::Delta, {2.0, 0.0});
    const auto B2 = couple(gi, CouplingType::Delta, {1.0, 1.0});
    const auto r = isospectrality_gate(gi, B1, B2, 6);
    CHECK(r.verdict == GateVerdict::CertifiedDistinct);
    CHECK(r.witness_order == 2);
  }
}

TEST_CASE("trace_report carries the difference vector and valences") {
  const auto g = fixture("lasso.graph");
  const auto B1 = couple(g, CouplingType::Delta, {0.5, 1.5});
  const auto B2 = couple(g, CouplingType::Delta, {0.2, -0.3});
  const auto rep = trace_report(g, B1, B2, 4, false);
  CHECK(rep.type == CouplingType::Delta);
  REQUIRE(rep.d.size() == 2);
  CHECK(rep.d(0) == doctest::Approx(0.3));
  CHECK(rep.d(1) == doctest::Approx(1.8));
  CHECK(rep.valences == std::vector<int>{1, 3});
  CHECK(rep.residuals.size() == 4);
  CHECK_FALSE(rep.asymptotic_run);
}

TEST_CASE("residual scale grows with order and coupling size") {
  const auto g = fixture("star3.graph");
  const auto B1 = CouplingSet::scalar(g, CouplingType::Delta, 1.5);
  const auto B2 = CouplingSet::scalar(g, CouplingType::Delta, -2.0);
  CHECK(residual_scale(g, B1, B2, 1) == doctest::Approx(4.5));  // 1 + max|B1| + max|B2|
  CHECK(residual_scale(g, B1, B2, 3) == doctest::Approx(91.125));
  CHECK(residual_scale(g, B1, B2, 4) > residual_scale(g, B1, B2, 3));
}

TEST_CASE("default tau grid spans the fitting window geometrically") {
  const auto grid = default_tau_grid();
  REQUIRE(grid.size() == 16);
  CHECK(grid.front() == doctest::Approx(40.0));
  CHECK(grid.back() == doctest::Approx(200.0));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
}
