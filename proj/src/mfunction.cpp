#include "qg/mfunction.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace qg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kPoleGuard = 1e-12;

double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace

SpectralPoint SpectralPoint::from_lambda(Complex lambda) {
  Complex k = std::sqrt(lambda);
  if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
  return SpectralPoint{lambda, k};
}

SpectralPoint SpectralPoint::from_k(Complex k) {
  if (k.imag() < 0.0 || (k.imag() == 0.0 && k.real() < 0.0)) k = -k;
  return SpectralPoint{k * k, k};
}

double dirichlet_pole_distance(const MetricGraph& g, Complex k) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : g.edges) {
    const double l = e.length.numeric;
    const int m_near = std::max(1, static_cast<int>(std::lround(std::abs(k) * l / kPi)));
    for (int m = std::max(1, m_near - 1); m <= m_near + 1; ++m)
      best = std::min(best, std::abs(k - Complex(m * kPi / l, 0.0)));
  }
  return best;
}

namespace {

void check_poles(const MetricGraph& g, Complex k) {
  for (const auto& e : g.edges) {
    if (std::abs(std::sin(k * e.length.numeric)) < kPoleGuard)
      throw PoleProximityError("spectral point too close to the Dirichlet grid (edge " + e.id + ")");
  }
}

}  // namespace

MMatrixSample eval_m_delta(const MetricGraph& g, const SpectralPoint& point) {
  require_valid(g);
  if (point.is_zero()) throw LimitPointError("lambda = 0 is a limit case; use m_limit_zero");
  check_poles(g, point.k);

  const int N = g.vertex_count;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);

  if (point.is_real() && point.lambda.real() < 0.0) {
    // k = i*kappa; hyperbolic forms keep the matrix exactly real.
    const double kappa = point.k.imag();
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += Complex(-2.0 * kappa * std::tanh(kappa * l / 2.0), 0.0);
      } else {
        const double d = -kappa / std::tanh(kappa * l);
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        const double off = kappa / std::sinh(kappa * l);
        M(e.tail, e.head) += off;
        M(e.head, e.tail) += off;
      }
    }
  } else if (point.is_real()) {
    const double k = point.k.real();
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += Complex(2.0 * k * std::tan(k * l / 2.0), 0.0);
      } else {
        const double s = std::sin(k * l);
        const double d = -k * std::cos(k * l) / s;
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        M(e.tail, e.head) += k / s;
        M(e.head, e.tail) += k / s;
      }
    }
  } else {
    const Complex k = point.k;
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += 2.0 * k * std::tan(k * l / 2.0);
      } else {
        const Complex s = std::sin(k * l);
        const Complex d = -k * std::cos(k * l) / s;
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        M(e.tail, e.head) += k / s;
        M(e.head, e.tail) += k / s;
      }
    }
  }

  return MMatrixSample{point, std::move(M), CouplingType::Delta, dirichlet_pole_distance(g, point.k)};
}

MMatrixSample eval_m_delta_prime(const MetricGraph& g, const SpectralPoint& point,
                                 DeltaPrimeOffDiagonal variant) {
  require_valid(g);
  if (point.is_zero()) throw LimitPointError("lambda = 0 is a limit case for the delta-prime M-matrix");
  check_poles(g, point.k);

  const int N = g.vertex_count;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);

  // Sign convention: the boundary maps are (Gamma_0, Gamma_1) = (d_n f, -sum of
  // vertex values), which makes M a Herglotz function of lambda.  The coupling
  // matrix that goes with this triple is -diag(alpha).
  if (point.is_real() && point.lambda.real() < 0.0) {
    const double kappa = point.k.imag();
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += Complex(2.0 / (kappa * std::tanh(kappa * l / 2.0)), 0.0);
      } else {
        const double d = 1.0 / (kappa * std::tanh(kappa * l));
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        const double off = variant == DeltaPrimeOffDiagonal::Verified
                               ? 1.0 / (kappa * std::sinh(kappa * l))
                               : -kappa / std::sinh(kappa * l);
        M(e.tail, e.head) += off;
        M(e.head, e.tail) += off;
      }
    }
  } else if (point.is_real()) {
    const double k = point.k.real();
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += Complex(-2.0 / (k * std::tan(k * l / 2.0)), 0.0);
      } else {
        const double s = std::sin(k * l);
        const double d = -std::cos(k * l) / (k * s);
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        const double off = variant == DeltaPrimeOffDiagonal::Verified ? -1.0 / (k * s) : -k / s;
        M(e.tail, e.head) += off;
        M(e.head, e.tail) += off;
      }
    }
  } else {
    const Complex k = point.k;
    for (const auto& e : g.edges) {
      const double l = e.length.numeric;
      if (e.is_loop()) {
        M(e.tail, e.tail) += -2.0 / (k * std::tan(k * l / 2.0));
      } else {
        const Complex s = std::sin(k * l);
        const Complex d = -std::cos(k * l) / (k * s);
        M(e.tail, e.tail) += d;
        M(e.head, e.head) += d;
        const Complex off = variant == DeltaPrimeOffDiagonal::Verified ? -1.0 / (k * s) : -k / s;
        M(e.tail, e.head) += off;
        M(e.head, e.tail) += off;
      }
    }
  }

  return MMatrixSample{point, std::move(M), CouplingType::DeltaPrime, dirichlet_pole_distance(g, point.k)};
}

Eigen::MatrixXd m_limit_zero(const MetricGraph& g) {
  require_valid(g);
  for (const auto& e : g.edges)
    if (e.is_loop()) throw LoopPresentError("M(0) limit is defined only for loop-free graphs");
  const int N = g.vertex_count;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(N, N);
  for (const auto& e : g.edges) {
    const double inv = 1.0 / e.length.numeric;
    M(e.tail, e.tail) -= inv;
    M(e.head, e.head) -= inv;
    M(e.tail, e.head) += inv;
    M(e.head, e.tail) += inv;
  }
  return M;
}

Complex KernelElement::value_at(int edge, bool at_head, const MetricGraph& g) const {
  const auto& [ap, am] = coeff[static_cast<std::size_t>(edge)];
  if (!at_head) return ap + am;
  const Complex e = std::exp(Complex(0.0, 1.0) * point.k * g.edge_length(edge));
  return ap * e + am / e;
}

Complex KernelElement::normal_derivative_at(int edge, bool at_head, const MetricGraph& g) const {
  const auto& [ap, am] = coeff[static_cast<std::size_t>(edge)];
  const Complex ik = Complex(0.0, 1.0) * point.k;
  if (!at_head) return ik * (ap - am);
  const Complex e = std::exp(Complex(0.0, 1.0) * point.k * g.edge_length(edge));
  return -ik * (ap * e - am / e);
}

KernelElement kernel_element(const MetricGraph& g, const SpectralPoint& point, CouplingType type,
                             std::uint64_t seed) {
  require_valid(g);
  if (point.is_zero()) throw LimitPointError("kernel elements are constructed for lambda != 0");

  std::mt19937_64 rng(seed);
  const int N = g.vertex_count;
  Eigen::VectorXcd data(N);  // vertex values (delta) or vertex normal derivatives (delta-prime)
  for (int v = 0; v < N; ++v) data(v) = Complex(uniform_pm1(rng), 0.0);

  KernelElement f;
  f.point = point;
  f.type = type;
  f.coeff.resize(static_cast<std::size_t>(g.edge_count()));

  const Complex ik = Complex(0.0, 1.0) * point.k;
  for (int t = 0; t < g.edge_count(); ++t) {
    const Edge& edge = g.edges[static_cast<std::size_t>(t)];
    const Complex e = std::exp(ik * edge.length.numeric);
    const Complex g0 = data(edge.tail);
    const Complex g1 = data(edge.head);
    Complex det, ap, am;
    if (type == CouplingType::Delta) {
      // a+ + a- = g0 ; a+ e + a- / e = g1
      det = 1.0 / e - e;
      ap = (g0 / e - g1) / det;
      am = (g1 - g0 * e) / det;
    } else {
      // ik (a+ - a-) = g0 ; -ik (a+ e - a- / e) = g1
      det = ik * ik * (1.0 / e - e);
      ap = (g0 * ik / e + g1 * ik) / det;
      am = (g1 * ik + g0 * ik * e) / det;
    }
    if (std::abs(det) < 1e-12)
      throw PoleProximityError("singular edge solve at a Dirichlet-grid point (edge " + edge.id + ")");
    f.coeff[static_cast<std::size_t>(t)] = {ap, am};
  }
  return f;
}

std::pair<Eigen::VectorXcd, Eigen::VectorXcd> boundary_maps(const MetricGraph& g, const KernelElement& f,
                                                            CouplingType type) {
  require_valid(g);
  const auto eps = vertex_endpoints(g);
  const int N = g.vertex_count;
  Eigen::VectorXcd g0 = Eigen::VectorXcd::Zero(N);
  Eigen::VectorXcd g1 = Eigen::VectorXcd::Zero(N);

  double scale = 1.0;
  for (int t = 0; t < g.edge_count(); ++t)
    for (bool head : {false, true})
      scale = std::max(scale, std::abs(f.value_at(t, head, g)));

  for (int v = 0; v < N; ++v) {
    const auto& pts = eps[static_cast<std::size_t>(v)];
    if (type == CouplingType::Delta) {
      const Complex val = f.value_at(pts.front().edge, pts.front().at_head, g);
      for (const auto& p : pts) {
        if (std::abs(f.value_at(p.edge, p.at_head, g) - val) > 1e-9 * scale)
          throw std::runtime_error("kernel element violates vertex continuity at " + g.vertex_name(v));
        g1(v) += f.normal_derivative_at(p.edge, p.at_head, g);
      }
      g0(v) = val;
    } else {
      const Complex dn = f.normal_derivative_at(pts.front().edge, pts.front().at_head, g);
      for (const auto& p : pts) {
        if (std::abs(f.normal_derivative_at(p.edge, p.at_head, g) - dn) > 1e-9 * scale * (1.0 + std::abs(f.point.k)))
          throw std::runtime_error("kernel element violates normal-derivative continuity at " + g.vertex_name(v));
        g1(v) -= f.value_at(p.edge, p.at_head, g);
      }
      g0(v) = dn;
    }
  }
  return {g0, g1};
}

double validate_weyl_identity(const MetricGraph& g, const SpectralPoint& point, CouplingType type,
                              int trials, DeltaPrimeOffDiagonal variant, std::uint64_t seed) {
  const MMatrixSample M = type == CouplingType::Delta ? eval_m_delta(g, point)
                                                      : eval_m_delta_prime(g, point, variant);
  double worst = 0.0;
  for (int i = 0; i < trials; ++i) {
    const KernelElement f = kernel_element(g, point, type, seed + static_cast<std::uint64_t>(i));
    const auto [g0, g1] = boundary_maps(g, f, type);
    const double denom = std::max(g1.lpNorm<Eigen::Infinity>(), 1e-300);
    worst = std::max(worst, (M.entries * g0 - g1).lpNorm<Eigen::Infinity>() / denom);
  }
  return worst;
}

}  // namespace qg
