#pragma once

#include <stdexcept>
#include <vector>

#include "qg/secular.hpp"
#include "qg/trace.hpp"

namespace qg {

struct NoMatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Finite prefix of a spectrum, multiplicities expanded into repeats.
struct SpectralTarget {
  std::vector<double> eigenvalues;  // sorted ascending
  int weight = 0;                   // leading eigenvalues entering the misfit

  static SpectralTarget from_spectrum(const Spectrum& s, int weight);
};

/// Sum over the first `weight` eigenvalues of (computed - target)^2.
double spectral_misfit(const MetricGraph& g, const CouplingSet& B, const SpectralTarget& target);

/// Unique scalar alpha in [lo, hi] reproducing the target; uniqueness holds
/// because equal scalar couplings are isospectral only when equal.
/// Coarse grid scan plus golden-section refinement to |dalpha| < 1e-10.
double recover_scalar_coupling(const MetricGraph& g, CouplingType type, const SpectralTarget& target,
                               double lo, double hi);

/// `known` carries the fixed couplings with exactly one entry set to NaN, the
/// marked unknown. Uniqueness is guaranteed when the fixed entries are zero;
/// other fixed values are recovered best-effort.
double recover_single_unknown(const MetricGraph& g, const CouplingSet& known, const SpectralTarget& target,
                              double lo, double hi);

enum class OrderedVerdict { CertifiedDistinct, Equal };

struct OrderedResult {
  OrderedVerdict verdict = OrderedVerdict::Equal;
  double t1 = 0.0;  // first trace residual, the distinctness evidence
};

/// Entrywise-ordered pairs: distinct couplings cannot be isospectral.
OrderedResult certify_ordered_distinct(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2);

}  // namespace qg
