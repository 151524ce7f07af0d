#include "sthcm/dgp.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "sthcm/errors.hpp"
#include "sthcm/lags.hpp"

namespace sthcm {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

struct Simulation {
  PanelDataset panel;
  std::vector<std::vector<double>> latent_u;  // [t][unit]
  std::vector<double> global_means;           // per step
};

// One pass of the generating process. When forced_treatment is set every
// treatment takes that value and the treatment stream is not consumed.
Simulation simulate(const DgpConfig& config, const SpatialGraph& graph, std::uint64_t seed,
                    std::size_t steps, std::optional<int> forced_treatment) {
  const std::size_t n = config.n_units;
  const std::size_t m = config.m_subunits;

  RngStream confounder_rng(seed, static_cast<std::uint64_t>(DgpStream::Confounder));
  RngStream treatment_rng(seed, static_cast<std::uint64_t>(DgpStream::Treatment));
  RngStream noise_rng(seed, static_cast<std::uint64_t>(DgpStream::Noise));

  Simulation sim{PanelDataset(n, m, steps), {}, {}};
  sim.latent_u.reserve(steps);
  sim.global_means.reserve(steps);

  std::vector<double> u(n);
  for (auto& v : u) v = confounder_rng.normal();

  std::vector<double> prev_means(n, 0.0);
  std::vector<double> means(n);
  std::vector<double> raw(n * m);
  std::vector<double> mixed(n * m);

  for (std::size_t t = 0; t < steps; ++t) {
    if (config.delta > 0)
      for (auto& v : u) v += config.delta * confounder_rng.normal();
    sim.latent_u.push_back(u);

    std::vector<int> treat(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(config.gamma * u[i] - 0.5);
      for (std::size_t j = 0; j < m; ++j)
        treat[i * m + j] = forced_treatment ? *forced_treatment : (treatment_rng.bernoulli(p) ? 1 : 0);
    }

    for (auto& e : raw) e = config.noise_sd * noise_rng.normal();
    if (config.kappa > 0) {
      // Raw draws for every unit exist before any mixing.
      for (std::size_t i = 0; i < n; ++i) {
        const auto& nbrs = graph.neighbors(i);
        for (std::size_t j = 0; j < m; ++j) {
          double nbr = 0.0;
          if (!nbrs.empty()) {
            for (std::size_t k : nbrs) nbr += raw[k * m + j];
            nbr /= static_cast<double>(nbrs.size());
          }
          mixed[i * m + j] = raw[i * m + j] + config.kappa * nbr;
        }
      }
    } else {
      mixed = raw;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double own = prev_means[i];
      const double nbr = neighbor_mean(graph, i, prev_means);
      const double base = config.gamma * u[i] + config.beta_temp * own + config.rho * nbr;
      for (std::size_t j = 0; j < m; ++j) {
        const int a = treat[i * m + j];
        sim.panel.set(i, j, t, a, base + config.beta_a * a + mixed[i * m + j]);
      }
      means[i] = subunit_mean(sim.panel.unit_outcomes(i, t));
    }
    sim.global_means.push_back(subunit_mean(means));
    prev_means = means;
  }
  return sim;
}

}  // namespace

DgpOutput generate(const DgpConfig& config) {
  validate(config);
  const auto graph = config.graph.build();
  auto sim = simulate(config, graph, config.seed, config.t_steps, std::nullopt);
  return DgpOutput{std::move(sim.panel), std::move(sim.latent_u), config};
}

OracleAte oracle_ate_detail(const DgpConfig& config, std::size_t horizon, std::size_t n_rollouts,
                            RngStream rng) {
  validate(config);
  if (horizon < 1 || horizon > config.t_steps) throw HorizonOutOfRange(horizon, config.t_steps);
  if (n_rollouts < 1) throw InvalidConfig("n_rollouts", "must be >= 1");
  const auto graph = config.graph.build();

  double s1 = 0, s0 = 0, sd = 0, q1 = 0, q0 = 0, qd = 0;
  for (std::size_t r = 0; r < n_rollouts; ++r) {
    const std::uint64_t seed = rng.next_u64();
    const double y1 = simulate(config, graph, seed, horizon, 1).global_means.back();
    const double y0 = simulate(config, graph, seed, horizon, 0).global_means.back();
    s1 += y1;
    s0 += y0;
    sd += y1 - y0;
    q1 += y1 * y1;
    q0 += y0 * y0;
    qd += (y1 - y0) * (y1 - y0);
  }
  const double n = static_cast<double>(n_rollouts);
  auto std_error = [n](double sum, double sum_sq) {
    if (n < 2) return 0.0;
    const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1));
    return std::sqrt(var / n);
  };
  OracleAte out;
  out.mean_do1 = s1 / n;
  out.mean_do0 = s0 / n;
  out.ate = out.mean_do1 - out.mean_do0;
  out.se_do1 = std_error(s1, q1);
  out.se_do0 = std_error(s0, q0);
  out.se_ate = std_error(sd, qd);
  out.n_rollouts = n_rollouts;
  return out;
}

double oracle_ate(const DgpConfig& config, std::size_t horizon, std::size_t n_rollouts,
                  RngStream rng) {
  return oracle_ate_detail(config, horizon, n_rollouts, rng).ate;
}

}  // namespace sthcm
