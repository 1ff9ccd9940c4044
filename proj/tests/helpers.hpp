#pragma once

#include <string>
#include <vector>

#include "qg/io.hpp"

namespace qgtest {

inline std::string data_path(const std::string& name) {
  return std::string(QG_DATA_DIR) + "/" + name;
}

inline qg::MetricGraph fixture(const std::string& name) {
  return qg::load_graph_file(data_path(name)).graph;
}

// Small builder for ad-hoc graphs: lengths as (coeff_num, coeff_den, symbol).
struct GraphBuilder {
  qg::MetricGraph g;

  explicit GraphBuilder(int vertices) { g.vertex_count = vertices; }

  GraphBuilder& symbol(const std::string& name, double value) {
    g.symbol_table[name] = value;
    return *this;
  }

  GraphBuilder& edge(const std::string& id, int tail, int head, long long num, long long den,
                     const std::string& sym) {
    qg::Edge e;
    e.id = id;
    e.tail = tail;
    e.head = head;
    e.length.coeff = qg::Rational(num, den);
    e.length.symbol = sym;
    e.length.numeric = e.length.coeff.to_double() * g.symbol_table.at(sym);
    g.edges.push_back(e);
    return *this;
  }
};

inline std::vector<double> flat(const qg::Spectrum& s) {
  std::vector<double> out;
  for (const auto& e : s.entries)
    for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.lambda);
  return out;
}

}  // namespace qgtest
