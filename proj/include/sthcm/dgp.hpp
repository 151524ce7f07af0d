#pragma once

#include <cstddef>

#include "sthcm/core_data.hpp"
#include "sthcm/rng.hpp"

namespace sthcm {

/// Stream ids used inside one generate() call. Each latent component has its
/// own stream, so toggling delta or kappa leaves the other draws untouched.
enum class DgpStream : std::uint64_t { Confounder = 1, Treatment = 2, Noise = 3 };

double sigmoid(double x);

/// Draws one synthetic panel. Pure function of the config (seed included).
DgpOutput generate(const DgpConfig& config);

struct OracleAte {
  double ate = 0.0;
  double mean_do1 = 0.0;
  double mean_do0 = 0.0;
  /// Monte-Carlo standard errors of the arm means and of the paired difference.
  double se_do1 = 0.0;
  double se_do0 = 0.0;
  double se_ate = 0.0;
  std::size_t n_rollouts = 0;
};

/// Ground-truth effect of "treat everything" vs "treat nothing" on the global
/// mean outcome at step `horizon` (1-based), by simulating the known process
/// under both forced policies. Both arms of a rollout share one seed.
OracleAte oracle_ate_detail(const DgpConfig& config, std::size_t horizon, std::size_t n_rollouts,
                            RngStream rng);

double oracle_ate(const DgpConfig& config, std::size_t horizon, std::size_t n_rollouts,
                  RngStream rng);

}  // namespace sthcm
