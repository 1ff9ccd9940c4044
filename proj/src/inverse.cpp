#include "qg/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qg {

SpectralTarget SpectralTarget::from_spectrum(const Spectrum& s, int weight) {
  SpectralTarget t;
  for (const auto& e : s.entries)
    for (int i = 0; i < e.multiplicity; ++i) t.eigenvalues.push_back(e.lambda);
  if (weight > static_cast<int>(t.eigenvalues.size())) weight = static_cast<int>(t.eigenvalues.size());
  t.weight = weight;
  return t;
}

namespace {

void check_target(const SpectralTarget& target) {
  if (target.eigenvalues.empty()) throw std::invalid_argument("empty spectral target");
  if (!std::is_sorted(target.eigenvalues.begin(), target.eigenvalues.end()))
    throw std::invalid_argument("target eigenvalues must be sorted");
  if (target.weight < 1 || target.weight > static_cast<int>(target.eigenvalues.size()))
    throw std::invalid_argument("target weight out of range");
}

std::vector<double> flat_spectrum(const Spectrum& s) {
  std::vector<double> out;
  for (const auto& e : s.entries)
    for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.lambda);
  return out;
}

}  // namespace

double spectral_misfit(const MetricGraph& g, const CouplingSet& B, const SpectralTarget& target) {
  check_target(target);
  const double t_first = target.eigenvalues.front();
  const double t_last = target.eigenvalues[static_cast<std::size_t>(target.weight - 1)];
  const double lo = std::min(default_negative_bound(g, B), t_first) - 1.0;
  double gap = std::max(1.0, (t_last - t_first) / target.weight);
  double hi = t_last + 2.0 * gap;

  std::vector<double> computed;
  for (int attempt = 0; attempt < 4; ++attempt) {
    computed = flat_spectrum(find_spectrum(g, B, lo, hi));
    if (static_cast<int>(computed.size()) >= target.weight) break;
    hi += 4.0 * gap;
    gap *= 2.0;
  }

  double misfit = 0.0;
  for (int i = 0; i < target.weight; ++i) {
    // missing eigenvalues are charged at the top of the search window so the
    // penalty stays continuous in the coupling
    const double li = i < static_cast<int>(computed.size()) ? computed[static_cast<std::size_t>(i)] : hi;
    const double d = li - target.eigenvalues[static_cast<std::size_t>(i)];
    misfit += d * d;
  }
  return misfit;
}

namespace {

// Coarse scan then golden-section; `eval` is the misfit as a function of the
// single free coupling.
template <typename F>
double minimize_1d(F&& eval, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("empty bracket");
  constexpr int kGrid = 33;
  double best_x = lo, best_f = std::numeric_limits<double>::infinity();
  std::vector<double> fs(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    const double x = lo + (hi - lo) * i / (kGrid - 1);
    fs[static_cast<std::size_t>(i)] = eval(x);
    if (fs[static_cast<std::size_t>(i)] < best_f) {
      best_f = fs[static_cast<std::size_t>(i)];
      best_x = x;
    }
  }
  const double h = (hi - lo) / (kGrid - 1);
  double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = eval(x1), f2 = eval(x2);
  while (b - a > 1e-10) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = eval(x2);
    }
  }
  return 0.5 * (a + b);
}

double match_tolerance(const SpectralTarget& target) {
  const double scale = std::max(1.0, std::abs(target.eigenvalues[static_cast<std::size_t>(target.weight - 1)]));
  return target.weight * std::pow(1e-7 * scale, 2);
}

}  // namespace

double recover_scalar_coupling(const MetricGraph& g, CouplingType type, const SpectralTarget& target,
                               double lo, double hi) {
  check_target(target);
  const auto misfit_at = [&](double a) {
    return spectral_misfit(g, CouplingSet::scalar(g, type, a), target);
  };
  const double alpha = minimize_1d(misfit_at, lo, hi);
  if (misfit_at(alpha) > match_tolerance(target))
    throw NoMatch("no scalar coupling in the bracket reproduces the target");
  return alpha;
}

double recover_single_unknown(const MetricGraph& g, const CouplingSet& known, const SpectralTarget& target,
                              double lo, double hi) {
  check_target(target);
  if (known.alpha.size() != g.vertex_count) throw std::invalid_argument("coupling size mismatch");
  int unknown = -1;
  for (int v = 0; v < g.vertex_count; ++v) {
    if (std::isnan(known.alpha(v))) {
      if (unknown >= 0) throw std::invalid_argument("exactly one vertex must be marked unknown");
      unknown = v;
    }
  }
  if (unknown < 0) throw std::invalid_argument("no vertex marked unknown");

  const auto misfit_at = [&](double a) {
    CouplingSet B = known;
    B.alpha(unknown) = a;
    return spectral_misfit(g, B, target);
  };
  const double alpha = minimize_1d(misfit_at, lo, hi);
  if (misfit_at(alpha) > match_tolerance(target))
    throw NoMatch("no coupling value in the bracket reproduces the target");
  return alpha;
}

OrderedResult certify_ordered_distinct(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2) {
  if (B1.type != B2.type) throw std::invalid_argument("coupling type mismatch");
  if (B1.alpha.size() != g.vertex_count || B2.alpha.size() != g.vertex_count)
    throw std::invalid_argument("coupling size mismatch");
  const bool ge = (B1.alpha - B2.alpha).minCoeff() >= 0.0;
  const bool le = (B2.alpha - B1.alpha).minCoeff() >= 0.0;
  if (!ge && !le) throw std::invalid_argument("couplings are not entrywise ordered");
  OrderedResult res;
  if (B1.alpha == B2.alpha) return res;
  res.verdict = OrderedVerdict::CertifiedDistinct;
  res.t1 = B1.type == CouplingType::Delta ? trace_residual_delta(g, B1, B2, 1)
                                          : trace_residual_delta_prime(g, B1, B2, 1);
  return res;
}

}  // namespace qg
