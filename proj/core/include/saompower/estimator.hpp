#pragma once
// Method-of-moments estimation of model parameters from panel data by
// three-phase stochastic approximation (finite-difference derivatives with
// common random numbers, Robbins-Monro updates, simulation-based covariance).

#include <optional>
#include <string>

#include "saompower/types.hpp"

namespace saom {

struct EstimationOptions {
  int phase1_runs = 50;
  int phase2_subphases = 4;
  double phase2_initial_gain = 0.2;  // halved per subphase
  int phase2_max_iterations = 500;   // cap per subphase
  int phase3_runs = 500;
  int phase3_derivative_runs = 100;
  double convergence_t_threshold = 0.1;    // per parameter
  double convergence_ratio_threshold = 0.25;  // overall maximum ratio
  int max_retries = 2;
  double derivative_epsilon = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_step = 2.0;    // per-component clip of a Robbins-Monro step
  double rate_floor = 0.05;
  std::optional<std::vector<double>> initial_parameters;
};

/// Parameter order: network rates per period, behavior rates per period,
/// network evaluation effects, behavior evaluation effects.
struct ParameterLayout {
  int periods = 0;
  int n_net = 0;
  int n_beh = 0;

  int dim() const { return 2 * periods + n_net + n_beh; }
  int net_rate(int m) const { return m; }
  int beh_rate(int m) const { return periods + m; }
  int net_effect(int k) const { return 2 * periods + k; }
  int beh_effect(int k) const { return 2 * periods + n_net + k; }
  bool is_rate(int index) const { return index < 2 * periods; }
};

ParameterLayout parameter_layout(const ModelSpec& model);
std::vector<std::string> parameter_names(const ModelSpec& model);

struct EstimationResult {
  std::vector<std::string> names;
  std::vector<double> theta;
  std::vector<double> se;
  std::vector<double> covariance;  // dim x dim, row-major
  std::vector<double> t_ratio;     // convergence t-ratio per parameter
  double max_convergence_ratio = 0.0;
  bool converged = false;
  int retries_used = 0;
  std::vector<std::uint8_t> fixed;  // held at the rate floor
  std::vector<double> wald_z;
  std::vector<double> wald_p;
  std::vector<std::string> warnings;
  double seconds = 0.0;

  int index_of(const std::string& name) const;
};

/// Observed target statistics in parameter order: rate entries are per-period
/// change counts (tie Hamming distance / total absolute behavior change),
/// evaluation entries are cross-lagged effect sums over included actors.
/// Multigroup input sums the statistics over groups.
std::vector<double> target_statistics(std::span<const PanelData> panels,
                                      const ModelSpec& model);
std::vector<double> target_statistics(const PanelData& panel,
                                      const ModelSpec& model);

EstimationResult estimate(std::span<const PanelData> panels,
                          const ModelSpec& model,
                          const EstimationOptions& options);
EstimationResult estimate(const PanelData& panel, const ModelSpec& model,
                          const EstimationOptions& options);

struct WaldTest {
  double z = 0.0;
  double p = 1.0;
  bool reject = false;
};

/// Two-sided Wald test of one parameter; refused (nullopt) when the
/// estimation did not converge.
std::optional<WaldTest> wald_test(const EstimationResult& result,
                                  const std::string& parameter, double alpha);

}  // namespace saom
