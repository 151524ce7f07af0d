#include "sthcm/collapse.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <sstream>

#include "sthcm/errors.hpp"

namespace sthcm {

namespace {

constexpr std::size_t kMaxUnits = 2;
constexpr std::size_t kMaxSteps = 4;

double readout_value(Readout r, double p) { return r == Readout::Linear ? p : p * p; }

double confounder_prob(double p_u, int u) { return u ? p_u : 1.0 - p_u; }

int bit(std::size_t history, std::size_t pos) { return static_cast<int>((history >> pos) & 1U); }

// Success probabilities for every table entry, so the binomial sums run once.
using ProbTable = CollapseToyModel::QTable;

ProbTable success_table(const CollapseToyModel& model, SubunitCount m) {
  ProbTable out{};
  for (std::size_t i = 0; i < model.n_units; ++i)
    for (int u = 0; u < 2; ++u)
      for (int prev = 0; prev < 2; ++prev)
        for (int nbr = 0; nbr < 2; ++nbr)
          out[i][u][prev][nbr] = unit_success_probability(model.readout, model.q(i, u, prev, nbr), m);
  return out;
}

// Value unit `i` reads from the other unit at step t.
int neighbor_value(const CollapseToyModel& model, std::size_t history, std::size_t i, std::size_t t) {
  if (model.n_units == 1) return 0;
  const std::size_t n = model.n_units;
  if (i == 1 && model.contemporaneous) return bit(history, t * n + 0);
  if (t == 0) return 0;
  return bit(history, (t - 1) * n + (1 - i));
}

HistoryDistribution enumerate(const CollapseToyModel& model, const ProbTable& p1,
                              std::span<const int> u) {
  const std::size_t n = model.n_units;
  const std::size_t bits = n * model.t_steps;
  HistoryDistribution dist{n, model.t_steps, std::vector<double>(std::size_t{1} << bits, 0.0)};
  for (std::size_t h = 0; h < dist.probs.size(); ++h) {
    double prob = 1.0;
    for (std::size_t t = 0; t < model.t_steps; ++t)
      for (std::size_t i = 0; i < n; ++i) {
        const int prev = t == 0 ? 0 : bit(h, (t - 1) * n + i);
        const double p = p1[i][u[i]][prev][neighbor_value(model, h, i, t)];
        prob *= bit(h, t * n + i) ? p : 1.0 - p;
      }
    dist.probs[h] = prob;
  }
  return dist;
}

}  // namespace

CollapseToyModel constant_q_model(std::size_t n_units, std::size_t t_steps, Readout readout,
                                  double q, double p_u) {
  CollapseToyModel model;
  model.n_units = n_units;
  model.t_steps = t_steps;
  model.readout = readout;
  model.p_u = p_u;
  for (auto& a : model.q_table)
    for (auto& b : a)
      for (auto& c : b) c.fill(q);
  return model;
}

CollapseToyModel default_collapse_model() {
  CollapseToyModel model;
  model.n_units = 2;
  model.t_steps = 3;
  model.readout = Readout::Square;
  model.p_u = 0.4;
  for (int i = 0; i < 2; ++i)
    for (int u = 0; u < 2; ++u)
      for (int prev = 0; prev < 2; ++prev)
        for (int nbr = 0; nbr < 2; ++nbr)
          model.q_table[i][u][prev][nbr] = 0.2 + 0.3 * u + 0.25 * prev + 0.15 * nbr - 0.05 * i;
  return model;
}

void validate(const CollapseToyModel& model) {
  if (model.n_units < 1) throw InvalidConfig("n_units", "must be >= 1");
  if (model.t_steps < 1) throw InvalidConfig("t_steps", "must be >= 1");
  if (model.n_units > kMaxUnits || model.t_steps > kMaxSteps)
    throw StateSpaceTooLarge("exact enumeration supports at most " + std::to_string(kMaxUnits) +
                             " units and " + std::to_string(kMaxSteps) + " steps");
  if (!(model.p_u >= 0.0 && model.p_u <= 1.0)) throw InvalidConfig("p_u", "must lie in [0, 1]");
  for (std::size_t i = 0; i < model.n_units; ++i)
    for (const auto& a : model.q_table[i])
      for (const auto& b : a)
        for (double q : b)
          if (!(q > 0.0 && q < 1.0)) throw InvalidConfig("q_table", "entries must lie strictly inside (0, 1)");
}

double unit_success_probability(Readout readout, double q, SubunitCount m) {
  if (!m) return readout_value(readout, q);
  if (*m < 1) throw InvalidConfig("m", "subunit count must be >= 1");
  const double mm = static_cast<double>(*m);
  const double log_q = std::log(q);
  const double log_1q = std::log1p(-q);
  const double lg_m = std::lgamma(mm + 1.0);
  double total = 0.0;
  for (std::size_t k = 0; k <= *m; ++k) {
    const double kk = static_cast<double>(k);
    const double log_pmf =
        lg_m - std::lgamma(kk + 1.0) - std::lgamma(mm - kk + 1.0) + kk * log_q + (mm - kk) * log_1q;
    total += std::exp(log_pmf) * readout_value(readout, kk / mm);
  }
  return total;
}

double HistoryDistribution::total() const {
  double s = 0;
  for (double p : probs) s += p;
  return s;
}

HistoryDistribution conditional_history_distribution(const CollapseToyModel& model,
                                                     SubunitCount m, std::span<const int> u) {
  validate(model);
  if (u.size() != model.n_units) throw InvalidConfig("u", "one confounder value per unit");
  for (int v : u)
    if (v != 0 && v != 1) throw InvalidConfig("u", "confounder values are 0 or 1");
  return enumerate(model, success_table(model, m), u);
}

HistoryDistribution exact_history_distribution(const CollapseToyModel& model, SubunitCount m) {
  validate(model);
  const auto p1 = success_table(model, m);
  const std::size_t n = model.n_units;
  HistoryDistribution out{n, model.t_steps, std::vector<double>(std::size_t{1} << (n * model.t_steps), 0.0)};
  for (std::size_t code = 0; code < (std::size_t{1} << n); ++code) {
    std::array<int, kMaxUnits> u{};
    double weight = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = bit(code, i);
      weight *= confounder_prob(model.p_u, u[i]);
    }
    if (weight == 0.0) continue;
    const auto cond = enumerate(model, p1, std::span<const int>(u.data(), n));
    for (std::size_t h = 0; h < out.probs.size(); ++h) out.probs[h] += weight * cond.probs[h];
  }
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error("KL divergence needs distributions over the same support");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) return std::numeric_limits<double>::infinity();
    kl += p[k] * std::log(p[k] / q[k]);
  }
  return kl;
}

TemporalChain build_super_unit(const CollapseToyModel& model, SubunitCount m) {
  validate(model);
  const auto p1 = success_table(model, m);
  const std::size_t n = model.n_units;
  TemporalChain chain;
  chain.n_states = std::size_t{1} << n;
  chain.initial_state = 0;
  chain.confounder_probs.resize(chain.n_states);
  chain.kernel.assign(chain.n_states,
                      std::vector<std::vector<double>>(chain.n_states, std::vector<double>(chain.n_states)));

  for (std::size_t c = 0; c < chain.n_states; ++c) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= confounder_prob(model.p_u, bit(c, i));
    chain.confounder_probs[c] = w;

    for (std::size_t prev = 0; prev < chain.n_states; ++prev)
      for (std::size_t next = 0; next < chain.n_states; ++next) {
        // Units resolve in index order; unit i may only read units j < i at
        // the current step.
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
          int nbr = 0;
          if (n == 2) nbr = (i == 1 && model.contemporaneous) ? bit(next, 0) : bit(prev, 1 - i);
          const double s = p1[i][bit(c, i)][bit(prev, i)][nbr];
          p *= bit(next, i) ? s : 1.0 - s;
        }
        chain.kernel[c][prev][next] = p;
      }
  }
  return chain;
}

std::vector<double> enumerate_chain(const TemporalChain& chain, std::size_t t_steps) {
  const std::size_t S = chain.n_states;
  std::vector<double> total;
  for (std::size_t c = 0; c < chain.confounder_probs.size(); ++c) {
    // prefix[h] for histories of the current length; stride = S^t.
    std::vector<double> prefix{1.0};
    std::size_t stride = 1;
    for (std::size_t t = 0; t < t_steps; ++t) {
      std::vector<double> next(prefix.size() * S, 0.0);
      for (std::size_t h = 0; h < prefix.size(); ++h) {
        const std::size_t last = t == 0 ? chain.initial_state : (h / (stride / S)) % S;
        for (std::size_t s = 0; s < S; ++s) next[h + s * stride] = prefix[h] * chain.kernel[c][last][s];
      }
      prefix = std::move(next);
      stride *= S;
    }
    if (total.empty()) total.assign(prefix.size(), 0.0);
    for (std::size_t h = 0; h < prefix.size(); ++h) total[h] += chain.confounder_probs[c] * prefix[h];
  }
  return total;
}

CollapseReport kl_curve(const CollapseToyModel& model, std::span<const std::size_t> m_grid) {
  validate(model);
  if (m_grid.empty()) throw InvalidConfig("m_grid", "must not be empty");
  for (std::size_t k = 0; k < m_grid.size(); ++k) {
    if (m_grid[k] < 1) throw InvalidConfig("m_grid", "subunit counts must be >= 1");
    if (k > 0 && m_grid[k] <= m_grid[k - 1]) throw InvalidConfig("m_grid", "must be strictly ascending");
  }
  CollapseReport report;
  report.model = model;
  report.m_grid.assign(m_grid.begin(), m_grid.end());
  const auto collapsed = exact_history_distribution(model, std::nullopt);
  for (std::size_t m : m_grid) {
    const auto finite = exact_history_distribution(model, m);
    report.kl_values.push_back(kl_divergence(collapsed.probs, finite.probs));
  }
  return report;
}

std::string collapse_csv(const CollapseReport& report) {
  std::ostringstream out;
  out << "m,kl_nats\n";
  for (std::size_t k = 0; k < report.m_grid.size(); ++k)
    out << report.m_grid[k] << ',' << format_double(report.kl_values[k]) << '\n';
  return out.str();
}

Json collapse_model_to_json(const CollapseToyModel& model) {
  Json table = Json::array();
  for (std::size_t i = 0; i < model.n_units; ++i) table.push_back(model.q_table[i]);
  return Json{{"n_units", model.n_units},
              {"t_steps", model.t_steps},
              {"readout", model.readout == Readout::Linear ? "linear" : "square"},
              {"p_u", model.p_u},
              {"contemporaneous", model.contemporaneous},
              {"q_table", table}};
}

CollapseToyModel collapse_model_from_json(const Json& doc) {
  if (!doc.is_object()) throw InvalidConfig("<root>", "collapse model must be a JSON object");
  auto model = default_collapse_model();
  auto count = [&](const std::string& key) {
    if (!doc[key].is_number_integer() || doc[key].get<long long>() < 1)
      throw InvalidConfig(key, "must be a positive integer");
    return static_cast<std::size_t>(doc[key].get<long long>());
  };
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_units") model.n_units = count(key);
    else if (key == "t_steps") model.t_steps = count(key);
    else if (key == "readout") {
      if (value == "linear") model.readout = Readout::Linear;
      else if (value == "square") model.readout = Readout::Square;
      else throw InvalidConfig("readout", "expected 'linear' or 'square'");
    } else if (key == "p_u") {
      if (!value.is_number()) throw InvalidConfig("p_u", "must be a number");
      model.p_u = value.get<double>();
    } else if (key == "contemporaneous") {
      if (!value.is_boolean()) throw InvalidConfig("contemporaneous", "must be a boolean");
      model.contemporaneous = value.get<bool>();
    } else if (key == "q_table") {
      try {
        const auto rows = value.get<std::vector<std::array<std::array<std::array<double, 2>, 2>, 2>>>();
        if (rows.empty() || rows.size() > kMaxUnits) throw InvalidConfig("q_table", "needs one 2x2x2 block per unit");
        for (std::size_t i = 0; i < rows.size(); ++i) model.q_table[i] = rows[i];
        if (rows.size() == 1) model.q_table[1] = rows[0];
      } catch (const Json::exception&) {
        throw InvalidConfig("q_table", "expected [unit][u][prev][neighbor] numbers");
      }
    } else if (key == "m_grid") {
      // Consumed by the caller.
    } else {
      throw InvalidConfig(key, "unknown field");
    }
  }
  validate(model);
  return model;
}

}  // namespace sthcm
