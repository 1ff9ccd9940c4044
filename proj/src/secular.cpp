#include "qg/secular.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

namespace qg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRankTol = 1e-10;   // relative to sigma_max, documented in the report
constexpr double kDedupTol = 1e-10;

Complex sin_over_k(Complex k, double l) {
  const Complex z = k * l;
  if (std::abs(z) < 1e-4) {
    const Complex z2 = z * z;
    return l * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
  }
  return std::sin(z) / k;
}

}  // namespace

CouplingSet CouplingSet::kirchhoff(const MetricGraph& g) {
  return CouplingSet{CouplingType::Delta, Eigen::VectorXd::Zero(g.vertex_count)};
}

CouplingSet CouplingSet::scalar(const MetricGraph& g, CouplingType type, double a) {
  return CouplingSet{type, Eigen::VectorXd::Constant(g.vertex_count, a)};
}

bool CouplingSet::invertible() const {
  for (int i = 0; i < alpha.size(); ++i)
    if (alpha(i) == 0.0) return false;
  return true;
}

SecularSample entire_secular(const MetricGraph& g, const CouplingSet& B, Complex k) {
  require_valid(g);
  if (B.alpha.size() != g.vertex_count) throw std::invalid_argument("coupling size mismatch");
  const bool delta = B.type == CouplingType::Delta;
  if (!delta && std::abs(k) < 1e-8)
    throw std::domain_error("delta-prime secular function is singular at lambda = 0");

  const int N = g.vertex_count;
  const int n = g.edge_count();

  // Per-column choices: 0 = coupling column, then one slot per incident edge.
  // Columns are expanded multilinearly over these parts; an edge used by both
  // of its endpoint columns is replaced by its closed-form 2x2 minor so the
  // Dirichlet poles cancel exactly.
  struct Slot {
    int edge;
    int other;  // other endpoint for non-loop edges, -1 for loops
  };
  std::vector<std::vector<Slot>> slots(static_cast<std::size_t>(N));
  for (int t = 0; t < n; ++t) {
    const Edge& e = g.edges[static_cast<std::size_t>(t)];
    if (e.is_loop()) {
      slots[static_cast<std::size_t>(e.tail)].push_back({t, -1});
    } else {
      slots[static_cast<std::size_t>(e.tail)].push_back({t, e.head});
      slots[static_cast<std::size_t>(e.head)].push_back({t, e.tail});
    }
  }

  std::vector<Complex> s(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n)),
      sk(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const double l = g.edge_length(t);
    s[static_cast<std::size_t>(t)] = std::sin(k * l);
    c[static_cast<std::size_t>(t)] = std::cos(k * l);
    sk[static_cast<std::size_t>(t)] = sin_over_k(k, l);
  }

  std::vector<int> choice(static_cast<std::size_t>(N), 0);
  std::vector<int> used(static_cast<std::size_t>(n), 0);
  Eigen::MatrixXcd A(N, N);
  Complex total(0.0, 0.0);

  const auto evaluate_assignment = [&]() {
    std::fill(used.begin(), used.end(), 0);
    for (int col = 0; col < N; ++col)
      if (choice[static_cast<std::size_t>(col)] > 0)
        used[static_cast<std::size_t>(
            slots[static_cast<std::size_t>(col)][static_cast<std::size_t>(choice[static_cast<std::size_t>(col)] - 1)]
                .edge)] += 1;

    A.setZero();
    for (int col = 0; col < N; ++col) {
      const int ch = choice[static_cast<std::size_t>(col)];
      if (ch == 0) {
        A(col, col) = B.alpha(col);
        continue;
      }
      const Slot& sl = slots[static_cast<std::size_t>(col)][static_cast<std::size_t>(ch - 1)];
      const std::size_t t = static_cast<std::size_t>(sl.edge);
      if (sl.other < 0) {
        // loop: tan/cot terms folded with the loop's own sine factor
        A(col, col) = delta ? -2.0 * (1.0 - c[t]) : -(2.0 / (k * k)) * (1.0 + c[t]);
      } else if (used[t] == 2) {
        // paired edge columns reduced to the analytic 2x2 minor
        if (col == std::min(g.edges[t].tail, g.edges[t].head)) {
          A(col, col) = delta ? -k * s[t] : -s[t] / (k * k * k);
        } else {
          A(col, col) = Complex(1.0, 0.0);
        }
      } else {
        if (delta) {
          A(col, col) = c[t];
          A(sl.other, col) = Complex(-1.0, 0.0);
        } else {
          A(col, col) = -c[t] / (k * k);
          A(sl.other, col) = -1.0 / (k * k);
        }
      }
    }

    Complex factor(1.0, 0.0);
    for (int t = 0; t < n; ++t)
      if (used[static_cast<std::size_t>(t)] == 0) factor *= sk[static_cast<std::size_t>(t)];
    total += factor * Eigen::PartialPivLU<Eigen::MatrixXcd>(A).determinant();
  };

  // Odometer over all column choices.
  for (;;) {
    evaluate_assignment();
    int col = 0;
    for (; col < N; ++col) {
      if (choice[static_cast<std::size_t>(col)] <
          static_cast<int>(slots[static_cast<std::size_t>(col)].size())) {
        choice[static_cast<std::size_t>(col)] += 1;
        break;
      }
      choice[static_cast<std::size_t>(col)] = 0;
    }
    if (col == N) break;
  }

  return SecularSample{k, total.real()};
}

EdgeBasisPoint EdgeBasisPoint::from_lambda(double lambda) {
  if (lambda > 1e-12) return oscillatory(std::sqrt(lambda));
  if (lambda < -1e-12) return hyperbolic(std::sqrt(-lambda));
  return EdgeBasisPoint{Domain::Zero, 0.0};
}

double EdgeBasisPoint::lambda() const {
  switch (domain) {
    case Domain::Oscillatory: return param * param;
    case Domain::Hyperbolic: return -param * param;
    default: return 0.0;
  }
}

namespace {

struct BasisRows {
  // coefficient pairs (w.r.t. the two basis functions) of the value and the
  // normal derivative at the two endpoints of an edge of length l
  double val0[2], vall[2], dn0[2], dnl[2];
};

BasisRows basis_rows(const EdgeBasisPoint& p, double l) {
  BasisRows b{};
  switch (p.domain) {
    case EdgeBasisPoint::Domain::Oscillatory: {
      const double k = p.param, cs = std::cos(k * l), sn = std::sin(k * l);
      b = {{1.0, 0.0}, {cs, sn}, {0.0, k}, {k * sn, -k * cs}};
      break;
    }
    case EdgeBasisPoint::Domain::Hyperbolic: {
      const double q = p.param, ch = std::cosh(q * l), sh = std::sinh(q * l);
      b = {{1.0, 0.0}, {ch, sh}, {0.0, q}, {-q * sh, -q * ch}};
      break;
    }
    case EdgeBasisPoint::Domain::Zero:
      b = {{1.0, 0.0}, {1.0, l}, {0.0, 1.0}, {0.0, -1.0}};
      break;
  }
  return b;
}

}  // namespace

Eigen::MatrixXd edge_matching_matrix(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p) {
  require_valid(g);
  if (B.alpha.size() != g.vertex_count) throw std::invalid_argument("coupling size mismatch");
  const int n = g.edge_count();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(2 * n, 2 * n);

  std::vector<BasisRows> rows(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) rows[static_cast<std::size_t>(t)] = basis_rows(p, g.edge_length(t));

  const auto val = [&](const Endpoint& e) {
    const BasisRows& b = rows[static_cast<std::size_t>(e.edge)];
    return e.at_head ? b.vall : b.val0;
  };
  const auto dn = [&](const Endpoint& e) {
    const BasisRows& b = rows[static_cast<std::size_t>(e.edge)];
    return e.at_head ? b.dnl : b.dn0;
  };

  const auto eps = vertex_endpoints(g);
  const bool delta = B.type == CouplingType::Delta;
  int row = 0;
  for (int v = 0; v < g.vertex_count; ++v) {
    const auto& pts = eps[static_cast<std::size_t>(v)];
    const Endpoint& p0 = pts.front();
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double* a = delta ? val(pts[i]) : dn(pts[i]);
      const double* b = delta ? val(p0) : dn(p0);
      S(row, 2 * pts[i].edge) += a[0];
      S(row, 2 * pts[i].edge + 1) += a[1];
      S(row, 2 * p0.edge) -= b[0];
      S(row, 2 * p0.edge + 1) -= b[1];
      ++row;
    }
    for (const auto& pt : pts) {
      const double* a = delta ? dn(pt) : val(pt);
      S(row, 2 * pt.edge) += a[0];
      S(row, 2 * pt.edge + 1) += a[1];
    }
    const double* b = delta ? val(p0) : dn(p0);
    S(row, 2 * p0.edge) -= B.alpha(v) * b[0];
    S(row, 2 * p0.edge + 1) -= B.alpha(v) * b[1];
    ++row;
  }
  return S;
}

namespace {

Eigen::MatrixXd equilibrated(Eigen::MatrixXd S) {
  for (int i = 0; i < S.rows(); ++i) {
    const double nrm = S.row(i).norm();
    if (nrm > 0.0) S.row(i) /= nrm;
  }
  return S;
}

double equilibrated_det(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p) {
  return Eigen::PartialPivLU<Eigen::MatrixXd>(equilibrated(edge_matching_matrix(g, B, p))).determinant();
}

int kernel_dimension(const Eigen::MatrixXd& S) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(equilibrated(S));
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double tol = static_cast<double>(S.rows()) * sv(0) * kRankTol;
  int dim = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) < tol) ++dim;
  return dim;
}

double second_smallest_sigma(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(equilibrated(edge_matching_matrix(g, B, p)));
  const auto& sv = svd.singularValues();
  return sv(sv.size() - 2);
}

}  // namespace

double edge_determinant(const MetricGraph& g, const CouplingSet& B, const EdgeBasisPoint& p) {
  return equilibrated_det(g, B, p);
}

int multiplicity_at(const MetricGraph& g, const CouplingSet& B, double lambda0) {
  return kernel_dimension(edge_matching_matrix(g, B, EdgeBasisPoint::from_lambda(lambda0)));
}

double default_negative_bound(const MetricGraph& g, const CouplingSet& B) {
  const auto gamma = vertex_valences(g);
  const double max_gamma = static_cast<double>(*std::max_element(gamma.begin(), gamma.end()));
  const double max_alpha = B.alpha.size() ? B.alpha.cwiseAbs().maxCoeff() : 0.0;
  const double b = 2.0 * max_alpha * max_gamma / g.min_edge_length();
  return -b * b;
}

namespace {

struct AxisRoot {
  double x;  // k or kappa
  int multiplicity;
};

// Scans one axis (k > 0 oscillatory, or kappa > 0 hyperbolic) of the
// row-equilibrated edge determinant for roots with multiplicities.
class AxisScanner {
 public:
  AxisScanner(const MetricGraph& g, const CouplingSet& B, EdgeBasisPoint::Domain domain,
              std::vector<std::string>& warnings)
      : g_(g), B_(B), domain_(domain), warnings_(warnings) {}

  double det(double x) const {
    return equilibrated_det(g_, B_, EdgeBasisPoint{domain_, x});
  }

  std::vector<AxisRoot> scan(double x_max, double dx, double dip_threshold, int jobs) {
    std::vector<AxisRoot> roots;
    if (!(x_max > 0.0)) return roots;
    const double x0 = dx / 8.0;
    const int count = static_cast<int>(std::ceil((x_max - x0) / dx)) + 1;
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) xs[static_cast<std::size_t>(i)] = std::min(x0 + i * dx, x_max);

    std::vector<double> d(static_cast<std::size_t>(count));
    const auto eval_range = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) d[static_cast<std::size_t>(i)] = det(xs[static_cast<std::size_t>(i)]);
    };
    if (jobs > 1) {
      std::vector<std::future<void>> fs;
      const int chunk = (count + jobs - 1) / jobs;
      for (int w = 0; w < jobs; ++w) {
        const int lo = w * chunk, hi = std::min(count, lo + chunk);
        if (lo < hi) fs.push_back(std::async(std::launch::async, eval_range, lo, hi));
      }
      for (auto& f : fs) f.get();
    } else {
      eval_range(0, count);
    }

    std::vector<double> mags;
    mags.reserve(d.size());
    for (double v : d) mags.push_back(std::abs(v));
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    const double scale = std::max(sorted[sorted.size() / 2], 1e-300);

    for (int i = 0; i + 1 < count; ++i) {
      if (d[static_cast<std::size_t>(i)] == 0.0) {
        add_root(roots, xs[static_cast<std::size_t>(i)]);
      } else if (d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i + 1)] < 0.0) {
        add_root(roots, bisect(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i + 1)]));
      }
    }

    const auto try_dip = [&](double m, double xl, double xr, double neighbor_sign) {
      if (m >= dip_threshold * scale) return;
      if (neighbor_sign < 0.0) return;  // bracketed sign change already handled
      for (const auto& r : roots)
        if (r.x > xl && r.x < xr) return;
      refine_dip(roots, xl, xr, 0);
    };
    for (int i = 1; i + 1 < count; ++i) {
      const double m = mags[static_cast<std::size_t>(i)];
      if (m >= mags[static_cast<std::size_t>(i - 1)] || m >= mags[static_cast<std::size_t>(i + 1)]) continue;
      try_dip(m, xs[static_cast<std::size_t>(i - 1)], xs[static_cast<std::size_t>(i + 1)],
              d[static_cast<std::size_t>(i - 1)] * d[static_cast<std::size_t>(i + 1)]);
    }
    // A root just inside the top of the grid shows up as a boundary dip. The
    // left boundary is excluded: the determinant always decays toward k = 0
    // through the basis degeneracy, and that sliver is scanned in lambda.
    if (count >= 3) {
      const std::size_t last = static_cast<std::size_t>(count - 1);
      if (mags[last] < mags[last - 1])
        try_dip(mags[last], xs[last - 1], xs[last], d[last - 1] * d[last]);
    }

    std::sort(roots.begin(), roots.end(), [](const AxisRoot& a, const AxisRoot& b) { return a.x < b.x; });
    return roots;
  }

 private:
  double bisect(double a, double b) const {
    double fa = det(a);
    for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, b); ++it) {
      const double m = 0.5 * (a + b);
      const double fm = det(m);
      if (fm == 0.0) return m;
      if (fa * fm < 0.0) {
        b = m;
      } else {
        a = m;
        fa = fm;
      }
    }
    return 0.5 * (a + b);
  }

  void add_root(std::vector<AxisRoot>& roots, double x) {
    const int dim = kernel_dimension(edge_matching_matrix(g_, B_, EdgeBasisPoint{domain_, x}));
    if (dim == 0)
      warnings_.push_back("root at parameter " + std::to_string(x) + " failed the rank test; reported with multiplicity 1");
    roots.push_back({x, std::max(dim, 1)});
  }

  // No sign change across the bracket: either an even-order zero or a close
  // pair of simple zeros. Subdivide looking for sign changes; below the
  // resolution floor refine the even-order candidate on the second-smallest
  // singular value, which vanishes linearly at a multiple eigenvalue.
  void refine_dip(std::vector<AxisRoot>& roots, double xl, double xr, int depth) {
    constexpr int kSamples = 33;
    std::vector<double> xs(kSamples), d(kSamples);
    for (int i = 0; i < kSamples; ++i) {
      xs[static_cast<std::size_t>(i)] = xl + (xr - xl) * i / (kSamples - 1);
      d[static_cast<std::size_t>(i)] = det(xs[static_cast<std::size_t>(i)]);
    }
    bool found = false;
    for (int i = 0; i + 1 < kSamples; ++i) {
      if (d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i + 1)] < 0.0) {
        add_root(roots, bisect(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i + 1)]));
        found = true;
      }
    }
    if (found) return;

    int imin = 0;
    for (int i = 1; i < kSamples; ++i)
      if (std::abs(d[static_cast<std::size_t>(i)]) < std::abs(d[static_cast<std::size_t>(imin)])) imin = i;
    const double spacing = (xr - xl) / (kSamples - 1);

    if (depth < 6 && xr - xl > 1e-5) {
      const double nl = std::max(xl, xs[static_cast<std::size_t>(imin)] - 2.0 * spacing);
      const double nr = std::min(xr, xs[static_cast<std::size_t>(imin)] + 2.0 * spacing);
      refine_dip(roots, nl, nr, depth + 1);
      return;
    }

    // golden-section on sigma_{2n-1}
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = xl, b = xr;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = sigma2(x1), f2 = sigma2(x2);
    while (b - a > 1e-13 * std::max(1.0, b)) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = sigma2(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = sigma2(x2);
      }
    }
    const double x = 0.5 * (a + b);
    const int dim = kernel_dimension(edge_matching_matrix(g_, B_, EdgeBasisPoint{domain_, x}));
    if (dim >= 1) {
      roots.push_back({x, dim});
    } else {
      warnings_.push_back("unresolved determinant dip near parameter " + std::to_string(x) +
                          "; possible pair of roots sharing a bracket");
    }
  }

  double sigma2(double x) const { return second_smallest_sigma(g_, B_, EdgeBasisPoint{domain_, x}); }

  const MetricGraph& g_;
  const CouplingSet& B_;
  EdgeBasisPoint::Domain domain_;
  std::vector<std::string>& warnings_;
};

}  // namespace

Spectrum find_spectrum(const MetricGraph& g, const CouplingSet& B, double lambda_min, double lambda_max,
                       const ScanOptions& opts) {
  require_valid(g);
  if (!(lambda_min < lambda_max)) throw std::invalid_argument("degenerate spectral window");
  Spectrum out;
  out.lambda_min = lambda_min;
  out.lambda_max = lambda_max;

  const double dk = std::min(kPi / (8.0 * g.max_edge_length()), opts.step);
  if (!(dk > 0.0)) throw std::invalid_argument("scan step must be positive");
  if (lambda_min < default_negative_bound(g, B) - 1.0)
    out.warnings.push_back("window extends below the heuristic negative-spectrum bound " +
                           std::to_string(default_negative_bound(g, B)) + " (bound is heuristic)");

  std::vector<SpectrumEntry> found;

  if (lambda_max > 0.0) {
    AxisScanner scanner(g, B, EdgeBasisPoint::Domain::Oscillatory, out.warnings);
    for (const auto& r : scanner.scan(std::sqrt(lambda_max), dk, opts.dip_threshold, opts.jobs))
      found.push_back({r.x * r.x, r.multiplicity});
  }
  if (lambda_min <= 0.0 && lambda_max >= 0.0) {
    const int m0 = multiplicity_at(g, B, 0.0);
    if (m0 > 0) found.push_back({0.0, m0});
  }
  {
    // The axis scans start at k = dk/8; cover the remaining sliver around
    // zero with a sign scan in lambda itself. The basis degeneracy factor
    // k^n is positive on both sides, so signs stay consistent across 0.
    const double lam_cut = (dk / 8.0) * (dk / 8.0);
    const double gl = std::max(lambda_min, -lam_cut);
    const double gh = std::min(lambda_max, lam_cut);
    if (gl < gh) {
      const auto detl = [&](double lam) {
        return edge_determinant(g, B, EdgeBasisPoint::from_lambda(lam));
      };
      constexpr int kGapGrid = 65;
      double xp = gl, dp = detl(gl);
      for (int i = 1; i < kGapGrid; ++i) {
        const double x = gl + (gh - gl) * i / (kGapGrid - 1);
        const double dx = detl(x);
        if (dp * dx < 0.0) {
          double a = xp, b = x, fa = dp;
          for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = detl(mid);
            if (fm == 0.0) {
              a = b = mid;
              break;
            }
            if (fa * fm < 0.0) {
              b = mid;
            } else {
              a = mid;
              fa = fm;
            }
          }
          const double root = 0.5 * (a + b);
          found.push_back({root, std::max(multiplicity_at(g, B, root), 1)});
        }
        xp = x;
        dp = dx;
      }
    }
  }
  if (lambda_min < 0.0) {
    AxisScanner scanner(g, B, EdgeBasisPoint::Domain::Hyperbolic, out.warnings);
    for (const auto& r : scanner.scan(std::sqrt(-lambda_min), dk, opts.dip_threshold, opts.jobs))
      found.push_back({-r.x * r.x, r.multiplicity});
  }

  std::sort(found.begin(), found.end(),
            [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.lambda < b.lambda; });
  const int mult_cap = 2 * g.edge_count();
  for (const auto& e : found) {
    if (e.lambda < lambda_min - kDedupTol || e.lambda > lambda_max + kDedupTol) continue;
    if (!out.entries.empty() &&
        std::abs(e.lambda - out.entries.back().lambda) <= kDedupTol * std::max(1.0, std::abs(e.lambda))) {
      out.entries.back().multiplicity = std::max(out.entries.back().multiplicity, e.multiplicity);
    } else {
      out.entries.push_back(e);
    }
    out.entries.back().multiplicity = std::min(out.entries.back().multiplicity, mult_cap);
  }
  // clip boundary spillover from the root tolerance
  while (!out.entries.empty() && out.entries.front().lambda < lambda_min) out.entries.erase(out.entries.begin());
  while (!out.entries.empty() && out.entries.back().lambda > lambda_max) out.entries.pop_back();
  return out;
}

std::vector<SpectrumEntry> secular_zeros(const MetricGraph& g, const CouplingSet& B, double k_max,
                                         const ScanOptions& opts) {
  require_valid(g);
  if (!(k_max > 0.0)) throw std::invalid_argument("k_max must be positive");
  const double dk = std::min(kPi / (8.0 * g.max_edge_length()), opts.step);

  const auto F = [&](double k) { return entire_secular(g, B, Complex(k, 0.0)).value; };
  const auto Fd = [&](double k) {
    const double h = 1e-6 * std::max(1.0, std::abs(k));
    return (F(k + h) - F(k - h)) / (2.0 * h);
  };
  const auto bisect_fn = [&](auto&& fn, double a, double b) {
    double fa = fn(a);
    for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, b); ++it) {
      const double m = 0.5 * (a + b);
      const double fm = fn(m);
      if (fm == 0.0) return m;
      if (fa * fm < 0.0) {
        b = m;
      } else {
        a = m;
        fa = fm;
      }
    }
    return 0.5 * (a + b);
  };

  const double x0 = dk / 8.0;
  const int count = static_cast<int>(std::ceil((k_max - x0) / dk)) + 1;
  std::vector<double> xs(static_cast<std::size_t>(count)), d(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    xs[static_cast<std::size_t>(i)] = std::min(x0 + i * dk, k_max);
    d[static_cast<std::size_t>(i)] = F(xs[static_cast<std::size_t>(i)]);
  }
  std::vector<double> sorted;
  for (double v : d) sorted.push_back(std::abs(v));
  std::sort(sorted.begin(), sorted.end());
  const double scale = std::max(sorted[sorted.size() / 2], 1e-300);

  std::vector<double> roots;
  for (int i = 0; i + 1 < count; ++i)
    if (d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i + 1)] < 0.0)
      roots.push_back(bisect_fn(F, xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(i + 1)]));
  const auto try_dip = [&](double m, double xl, double xr, double neighbor_sign) {
    if (m >= opts.dip_threshold * scale) return;
    if (neighbor_sign < 0.0) return;
    for (double r : roots)
      if (r > xl && r < xr) return;
    if (Fd(xl) * Fd(xr) < 0.0) roots.push_back(bisect_fn(Fd, xl, xr));
  };
  for (int i = 1; i + 1 < count; ++i) {
    const double m = std::abs(d[static_cast<std::size_t>(i)]);
    if (m >= std::abs(d[static_cast<std::size_t>(i - 1)]) || m >= std::abs(d[static_cast<std::size_t>(i + 1)]))
      continue;
    try_dip(m, xs[static_cast<std::size_t>(i - 1)], xs[static_cast<std::size_t>(i + 1)],
            d[static_cast<std::size_t>(i - 1)] * d[static_cast<std::size_t>(i + 1)]);
  }
  if (count >= 3) {
    const std::size_t last = static_cast<std::size_t>(count - 1);
    if (std::abs(d[last]) < std::abs(d[last - 1]))
      try_dip(std::abs(d[last]), xs[last - 1], xs[last], d[last - 1] * d[last]);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<SpectrumEntry> out;
  for (double r : roots) {
    // local order estimate from the decay ratio of F
    const double delta = std::max(1e-4, 1e-4 * r);
    const double f1 = std::abs(F(r + delta)), f2 = std::abs(F(r + 2.0 * delta));
    int order = 1;
    if (f1 > 0.0 && f2 > 0.0) order = std::clamp(static_cast<int>(std::lround(std::log2(f2 / f1))), 1, 4);
    if (!out.empty() && std::abs(r - out.back().lambda) <= 1e-9 * std::max(1.0, r)) {
      out.back().multiplicity = std::max(out.back().multiplicity, order);
    } else {
      out.push_back({r, order});
    }
  }
  for (auto& e : out) e.lambda = e.lambda * e.lambda;  // entries were collected in k
  return out;
}

namespace {

std::vector<double> fem_eigenvalues(const MetricGraph& g, const CouplingSet& B, int count, int mesh) {
  const int N = g.vertex_count;
  const int n = g.edge_count();
  std::vector<int> elems(static_cast<std::size_t>(n));
  std::vector<int> base(static_cast<std::size_t>(n));
  int ndof = N;
  for (int t = 0; t < n; ++t) {
    elems[static_cast<std::size_t>(t)] = std::max(2, static_cast<int>(std::ceil(mesh * g.edge_length(t))));
    base[static_cast<std::size_t>(t)] = ndof;
    ndof += elems[static_cast<std::size_t>(t)] - 1;
  }
  if (count > ndof / 5)
    throw std::invalid_argument("mesh too coarse for the requested eigenvalue count");

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ndof, ndof);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ndof, ndof);
  for (int t = 0; t < n; ++t) {
    const Edge& e = g.edges[static_cast<std::size_t>(t)];
    const int m = elems[static_cast<std::size_t>(t)];
    const double h = g.edge_length(t) / m;
    const auto node = [&](int i) {
      if (i == 0) return e.tail;
      if (i == m) return e.head;
      return base[static_cast<std::size_t>(t)] + i - 1;
    };
    for (int el = 0; el < m; ++el) {
      const int a = node(el), b = node(el + 1);
      K(a, a) += 1.0 / h;
      K(b, b) += 1.0 / h;
      K(a, b) -= 1.0 / h;
      K(b, a) -= 1.0 / h;
      M(a, a) += h / 3.0;
      M(b, b) += h / 3.0;
      M(a, b) += h / 6.0;
      M(b, a) += h / 6.0;
    }
  }
  for (int v = 0; v < N; ++v) K(v, v) += B.alpha(v);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

}  // namespace

std::vector<double> fem_spectrum_delta(const MetricGraph& g, const CouplingSet& B, int count,
                                       int elements_per_unit_length) {
  require_valid(g);
  if (B.type != CouplingType::Delta) throw std::invalid_argument("FEM oracle supports delta couplings only");
  if (count <= 0) throw std::invalid_argument("count must be positive");
  const auto coarse = fem_eigenvalues(g, B, count, elements_per_unit_length);
  const auto fine = fem_eigenvalues(g, B, count, 2 * elements_per_unit_length);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] =
        (4.0 * fine[static_cast<std::size_t>(i)] - coarse[static_cast<std::size_t>(i)]) / 3.0;
  return out;
}

}  // namespace qg
