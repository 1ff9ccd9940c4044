#include "qg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>

namespace qg {

Rational::Rational(long long n, long long d) : num(n), den(d) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(std::llabs(num), den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

double MetricGraph::min_edge_length() const {
  double m = edges.empty() ? 0.0 : edges.front().length.numeric;
  for (const auto& e : edges) m = std::min(m, e.length.numeric);
  return m;
}

double MetricGraph::max_edge_length() const {
  double m = 0.0;
  for (const auto& e : edges) m = std::max(m, e.length.numeric);
  return m;
}

double MetricGraph::total_length() const {
  double s = 0.0;
  for (const auto& e : edges) s += e.length.numeric;
  return s;
}

std::string MetricGraph::vertex_name(int v) const {
  if (v >= 0 && v < static_cast<int>(vertex_names.size())) return vertex_names[static_cast<std::size_t>(v)];
  return "V" + std::to_string(v + 1);
}

int MetricGraph::vertex_index(const std::string& name) const {
  const int known = std::max(vertex_count, static_cast<int>(vertex_names.size()));
  for (int v = 0; v < known; ++v)
    if (vertex_name(v) == name) return v;
  return -1;
}

const std::vector<int>* IncidenceSets::connecting(int j, int p) const {
  auto it = parallel.find(std::minmax(j, p));
  return it == parallel.end() ? nullptr : &it->second;
}

ValidationReport validate_graph(const MetricGraph& g) {
  ValidationReport r;
  if (g.vertex_count < 1) {
    r.valid = false;
    r.issues.push_back("vertex count must be >= 1");
  }
  if (g.edges.empty()) {
    r.valid = false;
    r.issues.push_back("graph must have at least one edge");
  }
  std::set<std::string> ids;
  for (const auto& e : g.edges) {
    if (!ids.insert(e.id).second) {
      r.valid = false;
      r.issues.push_back("duplicate edge id: " + e.id);
    }
    if (e.tail < 0 || e.tail >= g.vertex_count || e.head < 0 || e.head >= g.vertex_count) {
      r.valid = false;
      r.issues.push_back("edge " + e.id + " references an undeclared vertex");
      continue;
    }
    if (e.length.coeff.num <= 0 || e.length.coeff.den <= 0 || !(e.length.numeric > 0.0)) {
      r.valid = false;
      r.issues.push_back("edge " + e.id + " has nonpositive length");
    }
    auto sym = g.symbol_table.find(e.length.symbol);
    if (sym == g.symbol_table.end()) {
      r.valid = false;
      r.issues.push_back("edge " + e.id + " uses undeclared symbol " + e.length.symbol);
    } else if (!(sym->second > 0.0)) {
      r.valid = false;
      r.issues.push_back("symbol " + e.length.symbol + " has nonpositive value");
    }
  }
  if (!r.valid) return r;

  std::vector<char> seen(static_cast<std::size_t>(g.vertex_count), 0);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.vertex_count));
  for (const auto& e : g.edges) {
    adj[static_cast<std::size_t>(e.tail)].push_back(e.head);
    adj[static_cast<std::size_t>(e.head)].push_back(e.tail);
  }
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        q.push(w);
      }
  }
  for (int v = 0; v < g.vertex_count; ++v) {
    if (adj[static_cast<std::size_t>(v)].empty()) {
      r.valid = false;
      r.issues.push_back("vertex " + g.vertex_name(v) + " is isolated");
    }
    if (!seen[static_cast<std::size_t>(v)]) r.connected = false;
  }
  if (!r.connected) {
    r.valid = false;
    r.issues.push_back("graph is disconnected");
  }
  return r;
}

void require_valid(const MetricGraph& g) {
  auto r = validate_graph(g);
  if (!r.valid) throw InvalidGraphError("invalid graph: " + (r.issues.empty() ? "unknown" : r.issues.front()));
}

std::vector<int> vertex_valences(const MetricGraph& g) {
  require_valid(g);
  std::vector<int> gamma(static_cast<std::size_t>(g.vertex_count), 0);
  for (const auto& e : g.edges) {
    gamma[static_cast<std::size_t>(e.tail)] += 1;
    gamma[static_cast<std::size_t>(e.head)] += 1;
  }
  return gamma;
}

IncidenceSets incidence_sets(const MetricGraph& g) {
  require_valid(g);
  IncidenceSets s;
  s.nonloop.resize(static_cast<std::size_t>(g.vertex_count));
  s.loops.resize(static_cast<std::size_t>(g.vertex_count));
  for (int t = 0; t < g.edge_count(); ++t) {
    const Edge& e = g.edges[static_cast<std::size_t>(t)];
    if (e.is_loop()) {
      s.loops[static_cast<std::size_t>(e.tail)].push_back(t);
    } else {
      s.nonloop[static_cast<std::size_t>(e.tail)].push_back(t);
      s.nonloop[static_cast<std::size_t>(e.head)].push_back(t);
      s.parallel[std::minmax(e.tail, e.head)].push_back(t);
    }
  }
  return s;
}

std::vector<std::vector<Endpoint>> vertex_endpoints(const MetricGraph& g) {
  std::vector<std::vector<Endpoint>> eps(static_cast<std::size_t>(g.vertex_count));
  for (int t = 0; t < g.edge_count(); ++t) {
    const Edge& e = g.edges[static_cast<std::size_t>(t)];
    eps[static_cast<std::size_t>(e.tail)].push_back({t, false});
    eps[static_cast<std::size_t>(e.head)].push_back({t, true});
  }
  return eps;
}

std::vector<std::vector<int>> cycle_basis(const MetricGraph& g) {
  require_valid(g);
  const int n = g.edge_count();
  std::vector<std::vector<int>> cycles;

  // BFS spanning tree over non-loop edges; parent_edge[v] leads towards root.
  std::vector<int> parent_edge(static_cast<std::size_t>(g.vertex_count), -1);
  std::vector<int> parent(static_cast<std::size_t>(g.vertex_count), -1);
  std::vector<int> depth(static_cast<std::size_t>(g.vertex_count), -1);
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  depth[0] = 0;
  q.push(0);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int t = 0; t < n; ++t) {
      const Edge& e = g.edges[static_cast<std::size_t>(t)];
      if (e.is_loop()) continue;
      int other = -1;
      if (e.tail == v) other = e.head;
      else if (e.head == v) other = e.tail;
      else continue;
      if (depth[static_cast<std::size_t>(other)] < 0) {
        depth[static_cast<std::size_t>(other)] = depth[static_cast<std::size_t>(v)] + 1;
        parent[static_cast<std::size_t>(other)] = v;
        parent_edge[static_cast<std::size_t>(other)] = t;
        in_tree[static_cast<std::size_t>(t)] = 1;
        q.push(other);
      }
    }
  }

  auto path_to_root = [&](int v) {
    std::vector<int> es;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      es.push_back(parent_edge[static_cast<std::size_t>(v)]);
      v = parent[static_cast<std::size_t>(v)];
    }
    return es;
  };

  for (int t = 0; t < n; ++t) {
    const Edge& e = g.edges[static_cast<std::size_t>(t)];
    if (e.is_loop()) {
      cycles.push_back({t});
      continue;
    }
    if (in_tree[static_cast<std::size_t>(t)]) continue;
    // Symmetric difference of the two root paths plus the chord.
    auto a = path_to_root(e.tail);
    auto b = path_to_root(e.head);
    std::multiset<int> sym(a.begin(), a.end());
    for (int x : b) {
      auto it = sym.find(x);
      if (it != sym.end()) sym.erase(it);
      else sym.insert(x);
    }
    std::vector<int> cyc(sym.begin(), sym.end());
    cyc.push_back(t);
    cycles.push_back(std::move(cyc));
  }
  return cycles;
}

bool rationally_dependent(const std::vector<LengthValue>& lengths) {
  if (lengths.empty()) throw std::invalid_argument("rationally_dependent: empty list");
  std::set<std::string> syms;
  for (const auto& l : lengths)
    if (!syms.insert(l.symbol).second) return true;
  return false;
}

namespace {

std::vector<LengthValue> cycle_lengths(const MetricGraph& g, const std::vector<int>& cyc) {
  std::vector<LengthValue> ls;
  ls.reserve(cyc.size());
  for (int t : cyc) ls.push_back(g.edges[static_cast<std::size_t>(t)].length);
  return ls;
}

}  // namespace

SimplicityResult is_simple_minimal_delta(const MetricGraph& g) {
  require_valid(g);
  SimplicityResult r;
  for (int t = 0; t < g.edge_count(); ++t) {
    if (g.edges[static_cast<std::size_t>(t)].is_loop()) {
      r.verdict = SimplicityVerdict::NotSimple;
      r.witness = {t};
      r.note = "loop " + g.edges[static_cast<std::size_t>(t)].id;
      return r;
    }
  }

  auto basis = cycle_basis(g);
  // All 2-cycles from parallel bundles; the basis covers only pairs through
  // the one tree edge of the bundle.
  auto inc = incidence_sets(g);
  std::vector<std::vector<int>> checks = basis;
  for (const auto& [key, bundle] : inc.parallel) {
    (void)key;
    for (std::size_t i = 0; i + 1 < bundle.size(); ++i)
      for (std::size_t j = i + 1; j < bundle.size(); ++j)
        checks.push_back({bundle[i], bundle[j]});
  }

  for (const auto& cyc : checks) {
    if (cyc.size() >= 2 && rationally_dependent(cycle_lengths(g, cyc))) {
      r.verdict = SimplicityVerdict::NotSimple;
      r.witness = cyc;
      r.note = "cycle with rationally dependent edge lengths";
      return r;
    }
  }

  // A symbol straddling two basis cycles can create dependence on a composed
  // cycle the basis check does not see; report that case rather than guess.
  std::map<std::string, std::set<std::size_t>> symbol_cycles;
  for (std::size_t c = 0; c < basis.size(); ++c)
    for (int t : basis[c]) symbol_cycles[g.edges[static_cast<std::size_t>(t)].length.symbol].insert(c);
  for (const auto& [sym, cs] : symbol_cycles) {
    if (cs.size() >= 2) {
      r.verdict = SimplicityVerdict::Indeterminate;
      r.note = "symbol " + sym + " appears in two distinct basis cycles; composed cycles not checked";
      return r;
    }
  }
  return r;
}

namespace {

// Biconnected blocks of the multigraph (loops excluded, handled separately).
// Every cycle is odd iff each block is a single edge or an odd simple cycle;
// any other block contains a theta subgraph and with it an even cycle.
struct BlockFinder {
  const MetricGraph& g;
  std::vector<int> disc, low;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge)
  std::vector<int> edge_stack;
  std::vector<std::vector<int>> blocks;
  int timer = 0;

  explicit BlockFinder(const MetricGraph& graph) : g(graph) {
    disc.assign(static_cast<std::size_t>(g.vertex_count), -1);
    low.assign(static_cast<std::size_t>(g.vertex_count), -1);
    adj.resize(static_cast<std::size_t>(g.vertex_count));
    for (int t = 0; t < g.edge_count(); ++t) {
      const Edge& e = g.edges[static_cast<std::size_t>(t)];
      if (e.is_loop()) continue;
      adj[static_cast<std::size_t>(e.tail)].push_back({e.head, t});
      adj[static_cast<std::size_t>(e.head)].push_back({e.tail, t});
    }
  }

  void dfs(int v, int pe) {
    disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
    for (auto [w, t] : adj[static_cast<std::size_t>(v)]) {
      if (t == pe) continue;
      if (disc[static_cast<std::size_t>(w)] < 0) {
        edge_stack.push_back(t);
        dfs(w, t);
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(w)]);
        if (low[static_cast<std::size_t>(w)] >= disc[static_cast<std::size_t>(v)]) {
          std::vector<int> block;
          while (!edge_stack.empty()) {
            int top = edge_stack.back();
            edge_stack.pop_back();
            block.push_back(top);
            if (top == t) break;
          }
          blocks.push_back(std::move(block));
        }
      } else if (disc[static_cast<std::size_t>(w)] < disc[static_cast<std::size_t>(v)]) {
        edge_stack.push_back(t);
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], disc[static_cast<std::size_t>(w)]);
      }
    }
  }
};

bool has_even_cycle(const MetricGraph& g) {
  BlockFinder bf(g);
  for (int v = 0; v < g.vertex_count; ++v)
    if (bf.disc[static_cast<std::size_t>(v)] < 0) bf.dfs(v, -1);
  for (const auto& block : bf.blocks) {
    if (block.size() < 2) continue;
    std::set<int> vs;
    for (int t : block) {
      vs.insert(g.edges[static_cast<std::size_t>(t)].tail);
      vs.insert(g.edges[static_cast<std::size_t>(t)].head);
    }
    if (block.size() == vs.size()) {
      if (block.size() % 2 == 0) return true;  // simple even cycle
    } else {
      return true;  // theta subgraph: two of its three cycles sum to even
    }
  }
  return false;
}

}  // namespace

DeltaPrimeKernelReport minimal_operator_eigenvalue_free_delta_prime(const MetricGraph& g) {
  DeltaPrimeKernelReport r;
  r.base = is_simple_minimal_delta(g);
  r.zero_eigenvalue_possible = has_even_cycle(g);
  return r;
}

std::vector<std::pair<double, int>> dirichlet_spectrum(const MetricGraph& g, double k_max) {
  require_valid(g);
  if (!(k_max > 0.0)) throw std::invalid_argument("k_max must be positive");
  std::vector<double> ks;
  const double pi = 3.14159265358979323846;
  for (const auto& e : g.edges) {
    const double l = e.length.numeric;
    for (int m = 1; m * pi / l <= k_max * (1.0 + 1e-15); ++m) ks.push_back(m * pi / l);
  }
  std::sort(ks.begin(), ks.end());
  std::vector<std::pair<double, int>> out;
  for (double k : ks) {
    if (!out.empty() && std::abs(k - out.back().first) <= 1e-12 * std::max(1.0, std::abs(k))) {
      out.back().second += 1;
    } else {
      out.push_back({k, 1});
    }
  }
  return out;
}

}  // namespace qg
