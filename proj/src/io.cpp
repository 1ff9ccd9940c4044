#include "qg/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace qg {

namespace {

using ojson = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

[[noreturn]] void bad_document(const std::string& what) {
  throw InvalidGraphError("graph document: " + what);
}

CouplingSet parse_coupling(const ojson& j, const MetricGraph& g) {
  if (!j.is_object() || !j.contains("type") || !j.contains("alpha"))
    bad_document("coupling needs 'type' and 'alpha'");
  CouplingSet B;
  const std::string type = j.at("type").get<std::string>();
  if (type == "delta") {
    B.type = CouplingType::Delta;
  } else if (type == "delta_prime") {
    B.type = CouplingType::DeltaPrime;
  } else {
    bad_document("unknown coupling type '" + type + "'");
  }
  B.alpha = Eigen::VectorXd::Zero(g.vertex_count);
  for (const auto& [name, value] : j.at("alpha").items()) {
    const int v = g.vertex_index(name);
    if (v < 0) bad_document("coupling names undeclared vertex '" + name + "'");
    B.alpha(v) = value.get<double>();
  }
  return B;
}

}  // namespace

GraphDocument parse_graph_document(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad_document(e.what());
  }
  GraphDocument doc;
  MetricGraph& g = doc.graph;
  if (!j.contains("vertices") || !j.contains("edges")) bad_document("needs 'vertices' and 'edges'");

  for (const auto& v : j.at("vertices")) {
    const std::string name = v.get<std::string>();
    if (g.vertex_index(name) >= 0) bad_document("duplicate vertex '" + name + "'");
    g.vertex_names.push_back(name);
  }
  g.vertex_count = static_cast<int>(g.vertex_names.size());

  if (j.contains("symbols"))
    for (const auto& [name, value] : j.at("symbols").items()) {
      const double x = value.get<double>();
      if (!(x > 0.0)) bad_document("symbol '" + name + "' must be positive");
      g.symbol_table[name] = x;
    }

  for (const auto& je : j.at("edges")) {
    Edge e;
    e.id = je.at("id").get<std::string>();
    e.tail = g.vertex_index(je.at("from").get<std::string>());
    e.head = g.vertex_index(je.at("to").get<std::string>());
    if (e.tail < 0 || e.head < 0) bad_document("edge '" + e.id + "' references undeclared vertex");
    const auto& jl = je.at("length");
    const long long num = jl.at("num").get<long long>();
    const long long den = jl.at("den").get<long long>();
    if (num < 1 || den < 1) bad_document("edge '" + e.id + "' needs num >= 1 and den >= 1");
    e.length.coeff = Rational(num, den);
    e.length.symbol = jl.at("symbol").get<std::string>();
    const auto it = g.symbol_table.find(e.length.symbol);
    if (it == g.symbol_table.end()) bad_document("edge '" + e.id + "' uses undeclared symbol");
    e.length.numeric = e.length.coeff.to_double() * it->second;
    g.edges.push_back(e);
  }

  if (j.contains("coupling")) {
    doc.coupling = parse_coupling(j.at("coupling"), g);
  } else {
    doc.coupling = CouplingSet::kirchhoff(g);
  }
  return doc;
}

std::string serialize_graph_document(const GraphDocument& doc) {
  const MetricGraph& g = doc.graph;
  ojson j;
  j["symbols"] = ojson::object();
  for (const auto& [name, value] : g.symbol_table) j["symbols"][name] = value;
  j["vertices"] = ojson::array();
  for (int v = 0; v < g.vertex_count; ++v) j["vertices"].push_back(g.vertex_name(v));
  j["edges"] = ojson::array();
  for (const Edge& e : g.edges) {
    ojson je;
    je["id"] = e.id;
    je["from"] = g.vertex_name(e.tail);
    je["to"] = g.vertex_name(e.head);
    je["length"] = {{"num", e.length.coeff.num}, {"den", e.length.coeff.den}, {"symbol", e.length.symbol}};
    j["edges"].push_back(je);
  }
  ojson alpha = ojson::object();
  for (int v = 0; v < g.vertex_count; ++v) alpha[g.vertex_name(v)] = doc.coupling.alpha(v);
  j["coupling"] = {{"type", doc.coupling.type == CouplingType::Delta ? "delta" : "delta_prime"},
                   {"alpha", alpha}};
  return j.dump(2) + "\n";
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidGraphError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GraphDocument load_graph_file(const std::string& path) {
  GraphDocument doc = parse_graph_document(slurp(path));
  require_valid(doc.graph);
  return doc;
}

CouplingSet load_coupling_file(const std::string& path, const MetricGraph& g) {
  ojson j;
  try {
    j = ojson::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    bad_document(e.what());
  }
  return parse_coupling(j, g);
}

SpectralTarget load_target_file(const std::string& path) {
  ojson j;
  try {
    j = ojson::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("target file: ") + e.what());
  }
  SpectralTarget t;
  for (const auto& v : j.at("eigenvalues")) t.eigenvalues.push_back(v.get<double>());
  t.weight = j.contains("weight") ? j.at("weight").get<int>() : static_cast<int>(t.eigenvalues.size());
  return t;
}

namespace {

struct Output {
  std::string format = "tsv";
  bool quiet = false;
  std::ostream& out;
  std::ostream& err;
  ojson doc;

  explicit Output(std::ostream& o, std::ostream& e) : out(o), err(e) { doc["schema_version"] = kSchemaVersion; }

  void diag(const std::string& msg) {
    if (!quiet) err << msg << "\n";
  }

  void flush_json() { out << doc.dump(2) << "\n"; }
  void tsv_header() { out << "# schema_version\t" << kSchemaVersion << "\n"; }
};

std::string verdict_name(SimplicityVerdict v) {
  switch (v) {
    case SimplicityVerdict::Simple: return "simple";
    case SimplicityVerdict::NotSimple: return "not_simple";
    default: return "indeterminate";
  }
}

std::string witness_ids(const MetricGraph& g, const std::vector<int>& edges) {
  std::string s;
  for (int t : edges) {
    if (!s.empty()) s += ",";
    s += g.edges[static_cast<std::size_t>(t)].id;
  }
  return s;
}

int run_check(const std::string& path, Output& o) {
  const GraphDocument doc = load_graph_file(path);
  const ValidationReport rep = validate_graph(doc.graph);
  const SimplicityResult simp = is_simple_minimal_delta(doc.graph);
  const DeltaPrimeKernelReport dp = minimal_operator_eigenvalue_free_delta_prime(doc.graph);

  if (simp.verdict == SimplicityVerdict::NotSimple) {
    o.diag("A_min NOT simple: " + (simp.note.empty() ? witness_ids(doc.graph, simp.witness) : simp.note));
    o.diag("M-function may miss spectrum supported on the witness cycle");
  }

  if (o.format == "json") {
    o.doc["valid"] = rep.valid;
    o.doc["connected"] = rep.connected;
    o.doc["issues"] = rep.issues;
    o.doc["simplicity"] = {{"verdict", verdict_name(simp.verdict)},
                           {"witness", witness_ids(doc.graph, simp.witness)},
                           {"note", simp.note}};
    o.doc["delta_prime"] = {{"verdict", verdict_name(dp.base.verdict)},
                            {"zero_eigenvalue_possible", dp.zero_eigenvalue_possible}};
    o.flush_json();
  } else {
    o.tsv_header();
    o.out << "valid\t" << (rep.valid ? "true" : "false") << "\n";
    o.out << "connected\t" << (rep.connected ? "true" : "false") << "\n";
    for (const auto& issue : rep.issues) o.out << "issue\t" << issue << "\n";
    o.out << "simplicity\t" << verdict_name(simp.verdict) << "\t" << witness_ids(doc.graph, simp.witness)
          << "\t" << simp.note << "\n";
    o.out << "delta_prime_zero_possible\t" << (dp.zero_eigenvalue_possible ? "true" : "false") << "\n";
  }
  return rep.valid ? 0 : 2;
}

int run_mfun(const std::string& path, const std::string& lambda_str, const std::string& variant, Output& o) {
  const GraphDocument doc = load_graph_file(path);
  double re = 0.0, im = 0.0;
  {
    std::istringstream ss(lambda_str);
    char comma = 0;
    if (!(ss >> re)) throw CLI::ValidationError("--lambda", "expects re[,im]");
    if (ss >> comma && comma == ',' && !(ss >> im)) throw CLI::ValidationError("--lambda", "expects re[,im]");
  }
  const SpectralPoint pt = SpectralPoint::from_lambda(Complex(re, im));
  MMatrixSample sample;
  if (doc.coupling.type == CouplingType::Delta) {
    sample = eval_m_delta(doc.graph, pt);
  } else {
    sample = eval_m_delta_prime(doc.graph, pt,
                                variant == "printed" ? DeltaPrimeOffDiagonal::Printed
                                                     : DeltaPrimeOffDiagonal::Verified);
  }

  if (o.format == "json") {
    o.doc["lambda"] = {re, im};
    o.doc["pole_proximity"] = sample.pole_proximity;
    ojson rows = ojson::array();
    for (int i = 0; i < sample.entries.rows(); ++i)
      for (int j = 0; j < sample.entries.cols(); ++j)
        rows.push_back({{"i", i}, {"j", j}, {"re", sample.entries(i, j).real()},
                        {"im", sample.entries(i, j).imag()}});
    o.doc["entries"] = rows;
    o.flush_json();
  } else {
    o.tsv_header();
    o.out << "# i\tj\tre\tim\n";
    o.out.precision(17);
    for (int i = 0; i < sample.entries.rows(); ++i)
      for (int j = 0; j < sample.entries.cols(); ++j)
        o.out << i << "\t" << j << "\t" << sample.entries(i, j).real() << "\t"
              << sample.entries(i, j).imag() << "\n";
  }
  return 0;
}

int run_spectrum(const std::string& path, double lmin, double lmax, double step, const std::string& oracle,
                 int count, int mesh, int jobs, Output& o) {
  const GraphDocument doc = load_graph_file(path);
  ScanOptions opts;
  if (step > 0.0) opts.step = step;
  opts.jobs = jobs;

  struct Row {
    std::string oracle;
    double lambda;
    int multiplicity;
  };
  std::vector<Row> rows;

  if (oracle == "edge" || oracle == "all") {
    const Spectrum s = find_spectrum(doc.graph, doc.coupling, lmin, lmax, opts);
    for (const auto& w : s.warnings) o.diag("edge oracle: " + w);
    for (const auto& e : s.entries) rows.push_back({"edge", e.lambda, e.multiplicity});
  }
  if (oracle == "vertex" || oracle == "all") {
    if (lmax <= 0.0) throw std::invalid_argument("vertex oracle needs lmax > 0");
    for (const auto& e : secular_zeros(doc.graph, doc.coupling, std::sqrt(lmax), opts))
      if (e.lambda >= lmin && e.lambda <= lmax) rows.push_back({"vertex", e.lambda, e.multiplicity});
  }
  if (oracle == "fem" || oracle == "all") {
    for (double l : fem_spectrum_delta(doc.graph, doc.coupling, count, mesh))
      if (l >= lmin && l <= lmax) rows.push_back({"fem", l, 1});
  }

  if (o.format == "json") {
    ojson jr = ojson::array();
    for (const auto& r : rows)
      jr.push_back({{"oracle", r.oracle}, {"lambda", r.lambda}, {"multiplicity", r.multiplicity}});
    o.doc["window"] = {lmin, lmax};
    o.doc["rows"] = jr;
    o.flush_json();
  } else {
    o.tsv_header();
    o.out << "# oracle\tlambda\tmultiplicity\n";
    o.out.precision(17);
    for (const auto& r : rows) o.out << r.oracle << "\t" << r.lambda << "\t" << r.multiplicity << "\n";
  }
  return 0;
}

int run_trace(const std::string& path, const std::string& b1_path, const std::string& b2_path, int orders,
              bool asymptotic, Output& o) {
  const GraphDocument doc = load_graph_file(path);
  const CouplingSet B1 = load_coupling_file(b1_path, doc.graph);
  const CouplingSet B2 = load_coupling_file(b2_path, doc.graph);
  const TraceReport rep = trace_report(doc.graph, B1, B2, orders, asymptotic);
  const GateResult gate = isospectrality_gate(doc.graph, B1, B2, orders);

  const std::string verdict =
      gate.verdict == GateVerdict::CertifiedDistinct ? "certified_distinct" : "inconclusive";

  if (o.format == "json") {
    o.doc["type"] = rep.type == CouplingType::Delta ? "delta" : "delta_prime";
    o.doc["residuals"] = rep.residuals;
    o.doc["valences"] = rep.valences;
    o.doc["gate"] = {{"verdict", verdict},
                     {"witness_order", gate.witness_order},
                     {"corollary", gate.corollary}};
    if (rep.asymptotic_run) {
      ojson cmp = ojson::array();
      for (const auto& c : rep.asymptotic.orders)
        cmp.push_back({{"m", c.m}, {"fitted", c.fitted}, {"analytic", c.analytic},
                       {"rel_error", c.rel_error}});
      o.doc["asymptotic"] = {{"orders", cmp},
                             {"variant_decided", rep.asymptotic.variant_decided},
                             {"selected",
                              rep.asymptotic.selected == GammaExponentVariant::Verified ? "verified"
                                                                                        : "printed"}};
    }
    o.flush_json();
  } else {
    o.tsv_header();
    o.out.precision(17);
    o.out << "# m\tresidual\n";
    for (std::size_t i = 0; i < rep.residuals.size(); ++i)
      o.out << i + 1 << "\t" << rep.residuals[i] << "\n";
    o.out << "gate\t" << verdict << "\t" << gate.witness_order << "\t" << gate.corollary << "\n";
    if (rep.asymptotic_run) {
      o.out << "# asymptotic m\tfitted\tanalytic\trel_error\n";
      for (const auto& c : rep.asymptotic.orders)
        o.out << "asymptotic\t" << c.m << "\t" << c.fitted << "\t" << c.analytic << "\t" << c.rel_error
              << "\n";
      if (rep.type == CouplingType::DeltaPrime)
        o.out << "variant\t"
              << (rep.asymptotic.selected == GammaExponentVariant::Verified ? "verified" : "printed")
              << "\t" << (rep.asymptotic.variant_decided ? "decided" : "undecided") << "\n";
    }
  }
  return 0;
}

int run_recover(const std::string& path, const std::string& target_path, bool scalar,
                const std::string& vertex, double lo, double hi, Output& o) {
  const GraphDocument doc = load_graph_file(path);
  const SpectralTarget target = load_target_file(target_path);
  double alpha = 0.0;
  if (scalar) {
    alpha = recover_scalar_coupling(doc.graph, doc.coupling.type, target, lo, hi);
  } else {
    const int v = doc.graph.vertex_index(vertex);
    if (v < 0) throw InvalidGraphError("unknown vertex '" + vertex + "'");
    CouplingSet known = doc.coupling;
    known.alpha(v) = std::numeric_limits<double>::quiet_NaN();
    alpha = recover_single_unknown(doc.graph, known, target, lo, hi);
  }
  if (o.format == "json") {
    o.doc["alpha"] = alpha;
    o.flush_json();
  } else {
    o.tsv_header();
    o.out.precision(17);
    o.out << "alpha\t" << alpha << "\n";
  }
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"quantum graph Laplacian toolkit"};
  app.require_subcommand(1);
  app.fallthrough(true);  // global flags may follow the subcommand

  Output o(out, err);
  std::uint64_t seed = 1;
  int jobs = 1;
  app.add_option("--format", o.format)->check(CLI::IsMember({"tsv", "json"}));
  app.add_flag("--quiet", o.quiet);
  app.add_option("--seed", seed);
  app.add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  std::string graph_path, lambda_str = "1", variant = "verified", oracle = "edge";
  std::string b1_path, b2_path, target_path, vertex;
  double lmin = 0.0, lmax = 0.0, step = 0.0, lo = 0.0, hi = 0.0;
  int orders = 4, count = 10, mesh = 40;
  bool asymptotic = false, scalar = false;

  CLI::App* check = app.add_subcommand("check", "validate a graph and report simplicity");
  check->add_option("graph", graph_path)->required();

  CLI::App* mfun = app.add_subcommand("mfun", "evaluate the M-matrix");
  mfun->add_option("graph", graph_path)->required();
  mfun->add_option("--lambda", lambda_str)->required();
  mfun->add_option("--variant", variant)->check(CLI::IsMember({"printed", "verified"}));

  CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalues in a window");
  spectrum->add_option("graph", graph_path)->required();
  spectrum->add_option("--lmin", lmin)->required();
  spectrum->add_option("--lmax", lmax)->required();
  spectrum->add_option("--step", step);
  spectrum->add_option("--oracle", oracle)->check(CLI::IsMember({"edge", "vertex", "fem", "all"}));
  spectrum->add_option("--count", count);
  spectrum->add_option("--mesh", mesh);

  CLI::App* trace = app.add_subcommand("trace", "trace-formula residuals and isospectrality gate");
  trace->add_option("graph", graph_path)->required();
  trace->add_option("--b1", b1_path)->required();
  trace->add_option("--b2", b2_path)->required();
  trace->add_option("--orders", orders);
  trace->add_flag("--asymptotic", asymptotic);

  CLI::App* recover = app.add_subcommand("recover", "recover a coupling constant from a spectrum");
  recover->add_option("graph", graph_path)->required();
  recover->add_option("--target", target_path)->required();
  recover->add_flag("--scalar", scalar);
  recover->add_option("--vertex", vertex);
  recover->add_option("--lo", lo)->required();
  recover->add_option("--hi", hi)->required();

  std::vector<const char*> argv;
  argv.push_back("qg");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (check->parsed()) return run_check(graph_path, o);
    if (mfun->parsed()) return run_mfun(graph_path, lambda_str, variant, o);
    if (spectrum->parsed()) return run_spectrum(graph_path, lmin, lmax, step, oracle, count, mesh, jobs, o);
    if (trace->parsed()) return run_trace(graph_path, b1_path, b2_path, orders, asymptotic, o);
    if (recover->parsed()) {
      if (scalar == !vertex.empty()) {
        err << "recover: give exactly one of --scalar or --vertex\n";
        return 1;
      }
      return run_recover(graph_path, target_path, scalar, vertex, lo, hi, o);
    }
  } catch (const NoMatch& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const InvalidGraphError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace qg
