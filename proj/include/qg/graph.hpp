#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qg {

struct InvalidGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact positive rational, kept normalized with den > 0.
struct Rational {
  long long num = 1;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d);

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
};

/// Edge length as coeff * symbol, where each symbol names a positive real
/// declared in the graph's symbol table. Distinct symbols are treated as
/// rationally independent reals; this makes commensurability decidable.
struct LengthValue {
  Rational coeff;
  std::string symbol;
  double numeric = 0.0;
};

struct Edge {
  std::string id;
  int tail = 0;  // x = 0 endpoint
  int head = 0;  // x = l endpoint
  LengthValue length;

  bool is_loop() const { return tail == head; }
};

struct MetricGraph {
  int vertex_count = 0;
  std::vector<Edge> edges;
  std::map<std::string, double> symbol_table;
  std::vector<std::string> vertex_names;  // optional; defaults to V1..VN

  int edge_count() const { return static_cast<int>(edges.size()); }
  double edge_length(int t) const { return edges[static_cast<std::size_t>(t)].length.numeric; }
  double min_edge_length() const;
  double max_edge_length() const;
  double total_length() const;
  std::string vertex_name(int v) const;
  int vertex_index(const std::string& name) const;
};

struct ValidationReport {
  bool valid = true;
  bool connected = true;
  std::vector<std::string> issues;
};

/// E_j (non-loop incident edges), L_j (loops), C_{j,p} (parallel bundles).
struct IncidenceSets {
  std::vector<std::vector<int>> nonloop;
  std::vector<std::vector<int>> loops;
  std::map<std::pair<int, int>, std::vector<int>> parallel;  // keyed with j < p

  const std::vector<int>* connecting(int j, int p) const;
};

/// One edge endpoint; at_head selects the x = l side.
struct Endpoint {
  int edge;
  bool at_head;
};

ValidationReport validate_graph(const MetricGraph& g);
void require_valid(const MetricGraph& g);

std::vector<int> vertex_valences(const MetricGraph& g);
IncidenceSets incidence_sets(const MetricGraph& g);
std::vector<std::vector<Endpoint>> vertex_endpoints(const MetricGraph& g);

/// Fundamental cycles of a BFS spanning tree; loops appear as 1-cycles.
/// Size is n - N + 1 on a connected graph. Each cycle is a list of edge indices.
std::vector<std::vector<int>> cycle_basis(const MetricGraph& g);

/// Exact check under the symbol model: dependent iff two entries share a symbol.
bool rationally_dependent(const std::vector<LengthValue>& lengths);

enum class SimplicityVerdict { Simple, NotSimple, Indeterminate };

struct SimplicityResult {
  SimplicityVerdict verdict = SimplicityVerdict::Simple;
  std::vector<int> witness;  // offending loop or cycle, as edge indices
  std::string note;

  bool simple() const { return verdict == SimplicityVerdict::Simple; }
};

SimplicityResult is_simple_minimal_delta(const MetricGraph& g);

struct DeltaPrimeKernelReport {
  SimplicityResult base;                 // eigenvalue-freeness away from zero
  bool zero_eigenvalue_possible = false; // graph contains an even cycle
};

DeltaPrimeKernelReport minimal_operator_eigenvalue_free_delta_prime(const MetricGraph& g);

/// Points pi*m/l_j <= k_max, merged with multiplicity at 1e-12 relative.
std::vector<std::pair<double, int>> dirichlet_spectrum(const MetricGraph& g, double k_max);

}  // namespace qg
