#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"

using namespace qg;
using qgtest::fixture;

namespace {

SpectralTarget neumann_interval_target() {
  SpectralTarget t;
  t.eigenvalues = {0.0, 1.0, 4.0, 9.0, 16.0, 25.0};
  t.weight = 6;
  return t;
}

SpectralTarget target_for(const MetricGraph& g, const CouplingSet& B, int weight, double lmax) {
  const auto s = find_spectrum(g, B, default_negative_bound(g, B) - 1.0, lmax);
  return SpectralTarget::from_spectrum(s, weight);
}

}  // namespace

TEST_CASE("misfit vanishes at the true coupling and grows away from it") {
  const auto g = fixture("interval_pi.graph");
  const auto truth = CouplingSet::kirchhoff(g);
  const auto target = neumann_interval_target();
  CHECK(spectral_misfit(g, truth, target) < 1e-12);
  const double off1 = spectral_misfit(g, CouplingSet::scalar(g, CouplingType::Delta, 0.1), target);
  const double off2 = spectral_misfit(g, CouplingSet::scalar(g, CouplingType::Delta, 0.4), target);
  CHECK(off1 > 1e-6);
  CHECK(off2 > off1);
}

TEST_CASE("from_spectrum flattens multiplicities and keeps the weight") {
  const auto g = fixture("star3.graph");
  const auto s = find_spectrum(g, CouplingSet::kirchhoff(g), -0.5, 11.0);
  const auto t = SpectralTarget::from_spectrum(s, 4);
  REQUIRE(t.eigenvalues.size() >= 4);
  CHECK(t.weight == 4);
  // (pi/2)^2 appears twice
  CHECK(t.eigenvalues[1] == doctest::Approx(t.eigenvalues[2]).epsilon(1e-12));
}

TEST_CASE("scalar coupling round trips") {
  SUBCASE("Neumann interval recovers alpha = 0") {
    const auto g = fixture("interval_pi.graph");
    const double a = recover_scalar_coupling(g, CouplingType::Delta, neumann_interval_target(), -1.0, 2.0);
    CHECK(std::abs(a) < 1e-6);
  }
  SUBCASE("3-star recovers alpha = 2.5") {
    const auto g = fixture("star3.graph");
    const auto truth = CouplingSet::scalar(g, CouplingType::Delta, 2.5);
    const auto target = target_for(g, truth, 8, 40.0);
    const double a = recover_scalar_coupling(g, CouplingType::Delta, target, 0.0, 5.0);
    CHECK(std::abs(a - 2.5) < 1e-6);
  }
  SUBCASE("delta-prime interval recovers alpha = 1.2") {
    const auto g = fixture("interval_unit.graph");
    const auto truth = CouplingSet::scalar(g, CouplingType::DeltaPrime, 1.2);
    const auto target = target_for(g, truth, 6, 120.0);
    const double a = recover_scalar_coupling(g, CouplingType::DeltaPrime, target, 0.3, 3.0);
    CHECK(std::abs(a - 1.2) < 1e-6);
  }
}

TEST_CASE("bracket excluding the truth raises NoMatch") {
  const auto g = fixture("interval_pi.graph");
  CHECK_THROWS_AS(recover_scalar_coupling(g, CouplingType::Delta, neumann_interval_target(), 3.0, 5.0),
                  NoMatch);
}

TEST_CASE("single unknown coupling on the looped graph") {
  const auto g = fixture("example4.graph");
  const auto doc = qg::load_graph_file(qgtest::data_path("example4.graph"));
  CouplingSet truth = doc.coupling;
  truth.alpha(3) = 1.0;  // loop vertex
  const auto target = target_for(g, truth, 10, 60.0);

  CouplingSet known = truth;
  known.alpha(3) = std::numeric_limits<double>::quiet_NaN();
  const double a = recover_single_unknown(g, known, target, -1.0, 3.0);
  CHECK(std::abs(a - 1.0) < 1e-6);

  SUBCASE("exactly one NaN is required") {
    CouplingSet none = truth;
    CHECK_THROWS_AS(recover_single_unknown(g, none, target, -1.0, 3.0), std::invalid_argument);
    CouplingSet two = known;
    two.alpha(0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(recover_single_unknown(g, two, target, -1.0, 3.0), std::invalid_argument);
  }
}

TEST_CASE("ordered couplings are certified distinct") {
  const auto g = fixture("star3.graph");
  const auto B1 = CouplingSet::scalar(g, CouplingType::Delta, 0.5);
  auto B2 = B1;
  B2.alpha(2) += 0.4;
  const auto r = certify_ordered_distinct(g, B1, B2);
  CHECK(r.verdict == OrderedVerdict::CertifiedDistinct);
  CHECK(std::abs(r.t1) > 1e-12);

  const auto req = certify_ordered_distinct(g, B1, B1);
  CHECK(req.verdict == OrderedVerdict::Equal);
  CHECK(std::abs(req.t1) < 1e-14);

  // not entrywise comparable: precondition violation
  auto B3 = B1;
  B3.alpha(0) += 0.2;
  B3.alpha(1) -= 0.2;
  CHECK_THROWS_AS(certify_ordered_distinct(g, B1, B3), std::invalid_argument);
}

TEST_CASE("misfit charges missing eigenvalues instead of dropping them") {
  // a strongly negative coupling moves eigenvalues far below the target
  // window; the misfit must stay finite and large, not shrink
  const auto g = fixture("interval_pi.graph");
  const auto target = neumann_interval_target();
  const double m = spectral_misfit(g, CouplingSet::scalar(g, CouplingType::Delta, -8.0), target);
  CHECK(std::isfinite(m));
  CHECK(m > 1.0);
}
