#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qg/inverse.hpp"
#include "qg/secular.hpp"

namespace qg {

/// In-memory form of a .graph document: the metric graph plus its coupling.
struct GraphDocument {
  MetricGraph graph;
  CouplingSet coupling;
};

GraphDocument parse_graph_document(const std::string& text);
std::string serialize_graph_document(const GraphDocument& doc);
GraphDocument load_graph_file(const std::string& path);

/// Coupling file: {"type": "delta"|"delta_prime", "alpha": {vertex: value}}.
CouplingSet load_coupling_file(const std::string& path, const MetricGraph& g);

/// Target file: {"eigenvalues": [...], "weight": n}.
SpectralTarget load_target_file(const std::string& path);

/// Exit codes: 0 ok, 1 usage, 2 invalid graph/coupling, 3 numerical failure,
/// 4 no match in recovery.
int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qg
