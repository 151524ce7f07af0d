#include "sthcm/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <tuple>

#include "sthcm/errors.hpp"

namespace sthcm {

SpatialGraph::SpatialGraph(std::size_t n_units, std::span<const Edge> edges)
    : neighbors_(n_units) {
  if (n_units == 0) throw InvalidConfig("n_units", "graph needs at least one unit");
  std::vector<std::set<std::size_t>> adjacency(n_units);
  for (const auto& [a, b] : edges) {
    if (a >= n_units) throw IndexOutOfRange(static_cast<long long>(a), n_units);
    if (b >= n_units) throw IndexOutOfRange(static_cast<long long>(b), n_units);
    if (a == b) throw SelfLoop(a);
    adjacency[a].insert(b);
    adjacency[b].insert(a);
  }
  for (std::size_t i = 0; i < n_units; ++i)
    neighbors_[i].assign(adjacency[i].begin(), adjacency[i].end());
}

std::vector<SpatialGraph::Edge> SpatialGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < neighbors_.size(); ++i)
    for (std::size_t k : neighbors_[i])
      if (i < k) out.emplace_back(i, k);
  return out;
}

SpatialGraph grid_graph(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw InvalidConfig("graph", "grid needs rows, cols >= 1");
  std::vector<SpatialGraph::Edge> edges;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t u = r * cols + c;
      if (c + 1 < cols) edges.emplace_back(u, u + 1);
      if (r + 1 < rows) edges.emplace_back(u, u + cols);
    }
  }
  return SpatialGraph(rows * cols, edges);
}

PanelDataset::PanelDataset(std::size_t n_units, std::size_t m_subunits, std::size_t t_steps)
    : n_units_(n_units), m_subunits_(m_subunits), t_steps_(t_steps),
      treatment_(n_units * m_subunits * t_steps, 0),
      outcome_(n_units * m_subunits * t_steps, 0.0) {}

void PanelDataset::set(std::size_t unit, std::size_t subunit, std::size_t t, int treatment,
                       double outcome) {
  if (treatment != 0 && treatment != 1) throw NonBinaryTreatment(0);
  if (!std::isfinite(outcome)) throw Error("outcome must be finite");
  const auto k = index(unit, subunit, t);
  treatment_.at(k) = static_cast<std::uint8_t>(treatment);
  outcome_.at(k) = outcome;
}

SpatialGraph GraphSpec::build() const {
  if (explicit_graph) return *explicit_graph;
  return grid_graph(rows, cols);
}

std::size_t GraphSpec::n_units() const {
  return explicit_graph ? explicit_graph->n_units() : rows * cols;
}

void validate(const DgpConfig& c) {
  if (c.n_units < 1) throw InvalidConfig("n_units", "must be >= 1");
  if (c.m_subunits < 1) throw InvalidConfig("m_subunits", "must be >= 1");
  if (c.t_steps < 1) throw InvalidConfig("t_steps", "must be >= 1");
  const std::pair<const char*, double> reals[] = {
      {"gamma", c.gamma},       {"rho", c.rho},          {"beta_a", c.beta_a},
      {"beta_temp", c.beta_temp}, {"noise_sd", c.noise_sd}, {"delta", c.delta},
      {"kappa", c.kappa}};
  for (const auto& [name, v] : reals)
    if (!std::isfinite(v)) throw InvalidConfig(name, "must be finite");
  if (c.noise_sd < 0) throw InvalidConfig("noise_sd", "must be >= 0");
  if (c.delta < 0) throw InvalidConfig("delta", "must be >= 0");
  if (c.kappa < 0) throw InvalidConfig("kappa", "must be >= 0");
  if (!c.graph.explicit_graph && (c.graph.rows == 0 || c.graph.cols == 0))
    throw InvalidConfig("graph", "grid needs rows, cols >= 1");
  if (c.graph.n_units() != c.n_units)
    throw InvalidConfig("graph", "graph has " + std::to_string(c.graph.n_units()) +
                                     " units but n_units is " + std::to_string(c.n_units));
}

// ---- panel CSV -------------------------------------------------------------

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

namespace {

constexpr std::string_view kPanelHeader = "unit_id,subunit_id,t,A,Y";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_index(std::string_view text, long long& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

bool parse_real(std::string_view text, double& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

struct Record {
  std::size_t unit, subunit, t;
  int treatment;
  double outcome;
  std::size_t line;
};

}  // namespace

void write_panel_csv(const PanelDataset& panel, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << kPanelHeader << '\n';
  for (std::size_t i = 0; i < panel.n_units(); ++i)
    for (std::size_t j = 0; j < panel.m_subunits(); ++j)
      for (std::size_t t = 0; t < panel.t_steps(); ++t)
        out << i << ',' << j << ',' << t << ',' << panel.treatment(i, j, t) << ','
            << format_double(panel.outcome(i, j, t)) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

PanelDataset parse_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MalformedRow(1, "empty file, expected header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPanelHeader)
    throw MalformedRow(1, "header must be '" + std::string(kPanelHeader) + "'");

  std::vector<Record> records;
  std::size_t line_no = 1;
  std::size_t n = 0, m = 0, T = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != 5)
      throw MalformedRow(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    long long ids[3];
    for (int k = 0; k < 3; ++k)
      if (!parse_index(fields[k], ids[k]) || ids[k] < 0)
        throw MalformedRow(line_no, "field " + std::to_string(k + 1) +
                                        " is not a non-negative integer");
    long long a = 0;
    if (!parse_index(fields[3], a)) throw MalformedRow(line_no, "treatment is not an integer");
    if (a != 0 && a != 1) throw NonBinaryTreatment(line_no);
    double y = 0;
    if (!parse_real(fields[4], y)) throw MalformedRow(line_no, "outcome is not a decimal literal");
    if (!std::isfinite(y)) throw MalformedRow(line_no, "outcome is not finite");
    Record r{static_cast<std::size_t>(ids[0]), static_cast<std::size_t>(ids[1]),
             static_cast<std::size_t>(ids[2]), static_cast<int>(a), y, line_no};
    n = std::max(n, r.unit + 1);
    m = std::max(m, r.subunit + 1);
    T = std::max(T, r.t + 1);
    records.push_back(r);
  }
  if (records.empty()) throw MalformedRow(line_no + 1, "no data rows");

  // Walk the cells in (unit, subunit, t) order; the first gap or repeat is
  // reported without allocating the (possibly huge) implied grid.
  std::sort(records.begin(), records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.unit, a.subunit, a.t) < std::tie(b.unit, b.subunit, b.t);
  });
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < T; ++t, ++k) {
        if (k >= records.size()) throw MissingCell(i, j, t);
        const auto& r = records[k];
        if (std::tie(r.unit, r.subunit, r.t) != std::tie(i, j, t)) {
          if (k > 0 && std::tie(r.unit, r.subunit, r.t) ==
                           std::tie(records[k - 1].unit, records[k - 1].subunit, records[k - 1].t))
            throw MalformedRow(r.line, "duplicate cell");
          throw MissingCell(i, j, t);
        }
      }
  if (k != records.size()) throw MalformedRow(records[k].line, "duplicate cell");

  PanelDataset panel(n, m, T);
  for (const auto& r : records) panel.set(r.unit, r.subunit, r.t, r.treatment, r.outcome);
  return panel;
}

PanelDataset load_panel_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_panel_csv(in);
}

void write_latent_csv(const DgpOutput& output, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "unit_id,t,U\n";
  const auto& u = output.latent_u;
  const std::size_t T = u.size();
  const std::size_t n = T ? u.front().size() : 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < T; ++t) out << i << ',' << t << ',' << format_double(u[t][i]) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

// ---- graph JSON ------------------------------------------------------------

Json graph_to_json(const SpatialGraph& graph) {
  Json edges = Json::array();
  for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
  return Json{{"n_units", graph.n_units()}, {"edges", edges}};
}

SpatialGraph graph_from_json(const Json& doc) {
  if (!doc.is_object()) throw ParseError("graph JSON must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "n_units" && key != "edges") throw ParseError("unknown graph field '" + key + "'");
  if (!doc.contains("n_units") || !doc["n_units"].is_number_integer())
    throw ParseError("graph JSON needs integer 'n_units'");
  const auto n = doc["n_units"].get<long long>();
  if (n < 1) throw ParseError("'n_units' must be >= 1");
  std::vector<SpatialGraph::Edge> edges;
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) throw ParseError("'edges' must be an array");
    for (const auto& e : doc["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ParseError("each edge must be a pair of integers");
      const auto a = e[0].get<long long>(), b = e[1].get<long long>();
      if (a < 0 || a >= n) throw IndexOutOfRange(a, static_cast<std::size_t>(n));
      if (b < 0 || b >= n) throw IndexOutOfRange(b, static_cast<std::size_t>(n));
      edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  return SpatialGraph(static_cast<std::size_t>(n), edges);
}

void write_graph_json(const SpatialGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << graph_to_json(graph).dump() << '\n';
}

SpatialGraph load_graph_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
  return graph_from_json(doc);
}

// ---- DgpConfig JSON --------------------------------------------------------

Json config_to_json(const DgpConfig& c) {
  Json graph;
  if (c.graph.explicit_graph)
    graph = graph_to_json(*c.graph.explicit_graph);
  else
    graph = Json{{"rows", c.graph.rows}, {"cols", c.graph.cols}};
  return Json{{"n_units", c.n_units},   {"m_subunits", c.m_subunits}, {"t_steps", c.t_steps},
              {"gamma", c.gamma},       {"rho", c.rho},               {"beta_a", c.beta_a},
              {"beta_temp", c.beta_temp}, {"noise_sd", c.noise_sd},   {"delta", c.delta},
              {"kappa", c.kappa},       {"seed", c.seed},             {"graph", graph}};
}

namespace {

std::size_t read_count(const Json& doc, const char* field) {
  const auto& v = doc[field];
  if (!v.is_number_integer()) throw InvalidConfig(field, "must be an integer");
  const auto x = v.get<long long>();
  if (x < 1) throw InvalidConfig(field, "must be >= 1");
  return static_cast<std::size_t>(x);
}

double read_real(const Json& doc, const char* field) {
  const auto& v = doc[field];
  if (!v.is_number()) throw InvalidConfig(field, "must be a number");
  return v.get<double>();
}

GraphSpec read_graph(const Json& g) {
  GraphSpec spec;
  if (!g.is_object()) throw InvalidConfig("graph", "must be an object");
  if (g.contains("edges") || g.contains("n_units")) {
    try {
      spec.explicit_graph = graph_from_json(g);
    } catch (const InvalidConfig&) {
      throw;
    } catch (const Error& e) {
      throw InvalidConfig("graph", e.what());
    }
    return spec;
  }
  for (const auto& [key, _] : g.items())
    if (key != "rows" && key != "cols") throw InvalidConfig("graph." + key, "unknown field");
  if (g.contains("rows")) spec.rows = read_count(g, "rows");
  if (g.contains("cols")) spec.cols = read_count(g, "cols");
  return spec;
}

}  // namespace

DgpConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw InvalidConfig("<root>", "config must be a JSON object");
  DgpConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_units") c.n_units = read_count(doc, "n_units");
    else if (key == "m_subunits") c.m_subunits = read_count(doc, "m_subunits");
    else if (key == "t_steps") c.t_steps = read_count(doc, "t_steps");
    else if (key == "gamma") c.gamma = read_real(doc, "gamma");
    else if (key == "rho") c.rho = read_real(doc, "rho");
    else if (key == "beta_a") c.beta_a = read_real(doc, "beta_a");
    else if (key == "beta_temp") c.beta_temp = read_real(doc, "beta_temp");
    else if (key == "noise_sd") c.noise_sd = read_real(doc, "noise_sd");
    else if (key == "delta") c.delta = read_real(doc, "delta");
    else if (key == "kappa") c.kappa = read_real(doc, "kappa");
    else if (key == "seed") {
      if (!value.is_number_unsigned()) throw InvalidConfig("seed", "must be a non-negative integer");
      c.seed = value.get<std::uint64_t>();
    } else if (key == "graph") c.graph = read_graph(value);
    else throw InvalidConfig(key, "unknown field");
  }
  // A non-default unit count without an explicit graph gets a 1 x n chain.
  if (!doc.contains("graph") && c.n_units != c.graph.n_units()) {
    c.graph.rows = 1;
    c.graph.cols = c.n_units;
  }
  validate(c);
  return c;
}

}  // namespace sthcm
