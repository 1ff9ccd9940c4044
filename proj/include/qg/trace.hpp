#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qg/secular.hpp"

namespace qg {

/// Gamma-exponent of the delta-prime residuals. Verified carries exponent m
/// together with the alternating sign (-1)^j that the log-det expansion
/// requires; Printed is the j+m exponent without the sign, kept for the
/// discriminating experiment.
enum class GammaExponentVariant { Verified, Printed };

/// T_m = sum_{j=1}^m (1/j) binom(m-1, m-j) Tr(D^j B2^{m-j} Gamma^{-m}),
/// D = B1 - B2. All matrices diagonal; compensated summation over vertices.
double trace_residual_delta(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2, int m);

/// Delta-prime residual with D = B2^{-1} - B1^{-1}; requires invertible couplings.
double trace_residual_delta_prime(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2,
                                  int m, GammaExponentVariant variant = GammaExponentVariant::Verified);

/// Residual magnitude below which T_m counts as zero: m-fold products amplify
/// round-off, so the threshold scales like (1+|B1|+|B2|)^m * |Gamma^{+-m}|.
double residual_scale(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2, int m);

/// delta: log det[(B1 - M(-tau^2))(B2 - M(-tau^2))^{-1}];
/// delta-prime: log det[(I - B1^{-1}M)(I - B2^{-1}M)^{-1}].
double logdet_ratio(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2, double tau);

/// 16 geometric points in [40, 200]; exponential corrections are then far
/// below the fit residuals.
std::vector<double> default_tau_grid();

struct OrderComparison {
  int m = 0;
  double fitted = 0.0;
  double analytic = 0.0;  // -(-1)^m T_m, the predicted tau^{-m} coefficient
  double rel_error = 0.0;
};

struct AsymptoticReport {
  std::vector<OrderComparison> orders;           // selected variant (delta: the only one)
  std::vector<OrderComparison> printed_orders;   // delta-prime only
  GammaExponentVariant selected = GammaExponentVariant::Verified;
  bool variant_decided = false;  // exactly one variant fit within tolerance
};

/// Fits the tau^{-m} coefficients of logdet_ratio on the grid by least squares
/// in powers of 1/tau and compares order m <= M against -(-1)^m T_m.
AsymptoticReport asymptotic_logdet_check(const MetricGraph& g, const CouplingSet& B1,
                                         const CouplingSet& B2, int orders,
                                         const std::vector<double>& tau_grid = default_tau_grid());

enum class GateVerdict { CertifiedDistinct, Inconclusive };

struct GateResult {
  GateVerdict verdict = GateVerdict::Inconclusive;
  int witness_order = 0;        // smallest m with T_m significantly nonzero, 0 if none
  std::string corollary;        // which closed-form shortcut fired, empty if none
  std::vector<double> residuals;
};

/// Nonzero T_m certifies distinct spectra; vanishing residuals prove nothing.
GateResult isospectrality_gate(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2,
                               int orders);

struct TraceReport {
  CouplingType type = CouplingType::Delta;
  Eigen::VectorXd d;           // per-vertex difference entering the residuals
  std::vector<int> valences;
  std::vector<double> residuals;
  bool asymptotic_run = false;
  AsymptoticReport asymptotic;
};

TraceReport trace_report(const MetricGraph& g, const CouplingSet& B1, const CouplingSet& B2, int orders,
                         bool run_asymptotic);

}  // namespace qg
