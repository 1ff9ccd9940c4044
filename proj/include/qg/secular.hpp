#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qg/graph.hpp"
#include "qg/mfunction.hpp"

namespace qg {

struct CouplingSet {
  CouplingType type = CouplingType::Delta;
  Eigen::VectorXd alpha;

  static CouplingSet kirchhoff(const MetricGraph& g);
  static CouplingSet scalar(const MetricGraph& g, CouplingType type, double a);
  bool invertible() const;
};

/// Value of the regularized vertex secular function
///   F(lambda) = det(B - M(lambda)) * prod_t sin(k l_t) / k^n,
/// entire in lambda for delta couplings. Computed term by term so that the
/// Dirichlet-grid poles of M cancel analytically, never numerically.
struct SecularSample {
  Complex k;
  double value = 0.0;
};

SecularSample entire_secular(const MetricGraph& g, const CouplingSet& B, Complex k);

/// Point of the edge-basis scan: real oscillatory basis {cos kx, sin kx},
/// hyperbolic basis {cosh qx, sinh qx} for lambda = -q^2, or {1, x} at zero.
struct EdgeBasisPoint {
  enum class Domain { Oscillatory, Hyperbolic, Zero };
  Domain domain = Domain::Zero;
  double param = 0.0;  // k or kappa

  static EdgeBasisPoint from_lambda(double lambda);
  static EdgeBasisPoint oscillatory(double k) { return {Domain::Oscillatory, k}; }
  static EdgeBasisPoint hyperbolic(double kappa) { return {Domain::Hyperbolic, kappa}; }
  double lambda() const;
};

/// Homogeneous 2n x 2n matching system S; nontrivial kernel vectors are the
/// eigenfunctions of A_B at the corresponding lambda.
Eigen::MatrixXd edge_matching_matrix(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p);

/// det of the row-equilibrated matching matrix (same zeros, tame scale).
double edge_determinant(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p);

/// dim ker S(lambda0) under the fixed rank tolerance; 0 means not an eigenvalue.
int multiplicity_at(const MetricGraph& g, const CouplingSet& B, double lambda0);

struct SpectrumEntry {
  double lambda = 0.0;
  int multiplicity = 1;
};

struct Spectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::vector<SpectrumEntry> entries;
  std::vector<std::string> warnings;
};

struct ScanOptions {
  double step = 1e9;            // upper bound on the k-grid step; the pi/(8 max l) cap always applies
  double dip_threshold = 0.2;   // relative |det| dip that triggers an even-order root search
  int jobs = 1;
};

Spectrum find_spectrum(const MetricGraph& g, const CouplingSet& B, double lambda_min, double lambda_max,
                       const ScanOptions& opts = {});

/// Zeros of the entire vertex secular function on (0, k_max], with zero order
/// estimated locally. Cross-check route; the edge determinant is authoritative.
std::vector<SpectrumEntry> secular_zeros(const MetricGraph& g, const CouplingSet& B, double k_max,
                                         const ScanOptions& opts = {});

/// Lowest `count` eigenvalues of the P1 Galerkin discretization with shared
/// vertex degrees of freedom, Richardson-extrapolated over meshes h and h/2.
std::vector<double> fem_spectrum_delta(const MetricGraph& g, const CouplingSet& B, int count,
                                       int elements_per_unit_length);

/// Heuristic lower bound for negative spectrum: -(2 max|alpha| max_gamma / min_l)^2.
double default_negative_bound(const MetricGraph& g, const CouplingSet& B);

}  // namespace qg
