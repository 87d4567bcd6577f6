#pragma once
// Panel generation: initial-state construction (burn-in, community geometry,
// attribute assignment, cohort synthesis) and continuous-time co-evolution.

#include <array>
#include <optional>
#include <string>

#include "saompower/rng.hpp"
#include "saompower/types.hpp"

namespace saom {

/// Mutable simulation state: current network/behavior plus which actors are
/// present (composition change toggles presence mid-period).
struct SimState {
  NetworkState net;
  BehaviorState beh;
  std::vector<std::uint8_t> present;
};

struct CompositionSnapshot {
  int period = 0;
  double time = 0.0;
  NetworkState net;
  BehaviorState beh;
  std::vector<std::uint8_t> present;
};

struct SimulationTrace {
  long network_opportunities = 0;
  long behavior_opportunities = 0;
  std::vector<CompositionSnapshot> composition_snapshots;
};

/// Simulates one period on unit time. Each present actor carries independent
/// exponential clocks with the period's network/behavior rates; composition
/// events are applied exactly at their scheduled times (leavers frozen and
/// excluded, joiners enter as isolates). Returns the state at time 1.
SimState simulate_period(SimState state, const ModelSpec& model,
                         const CovariateSet& covs, int period,
                         std::span<const CompositionEvent> events, Rng& rng,
                         SimulationTrace* trace = nullptr);

/// Chains simulate_period over all periods and records the wave snapshots.
PanelData simulate_panel(const NetworkState& start_net,
                         const BehaviorState& start_beh,
                         const CovariateSet& covs, const ModelSpec& model,
                         int waves, std::span<const CompositionEvent> composition,
                         Rng& rng, const std::string& group_id = "",
                         SimulationTrace* trace = nullptr);

struct BurnInOptions {
  int chunk_ministeps = 0;  // 0: one ministep per actor and chunk
  int window = 5;           // chunks in the moving average
  double tolerance = 0.005;
  int max_chunks = 200;
};

/// Runs tie ministeps from the empty network until the chunk-wise moving
/// average density stabilizes. The model must not contain the similarity
/// (homophily) effect: attributes are assigned only afterwards.
NetworkState burn_in_initial_network(int n, const ModelSpec& model,
                                     const CovariateSet& covs, Rng& rng,
                                     const BurnInOptions& opts = {});

/// i.i.d. uniform integer attributes over the scale, independent of network
/// position.
BehaviorState assign_initial_attributes(int n, BehaviorScale scale, Rng& rng);

struct GeometryConfig {
  int communities = 4;
  double spacing = 4.0;  // grid step between cluster centers
  double sd_min = 0.5;   // per-cluster spread drawn uniformly from this range
  double sd_max = 1.0;
};

/// Planar community layout: cluster centers on a grid, actors Gaussian
/// around their cluster center, plus the Euclidean distance matrix.
/// Actors are assigned to clusters in contiguous blocks of (near) equal size.
struct CommunityGeometry {
  int n = 0;
  int communities = 0;
  std::vector<std::array<double, 2>> means;
  std::vector<double> sds;
  std::vector<std::array<double, 2>> positions;
  std::vector<int> community;   // per actor
  std::vector<double> distances;  // n x n, row-major

  std::vector<int> community_members(int c) const;
};

CommunityGeometry sample_geometry(int n, const GeometryConfig& config, Rng& rng);

/// Targets for synthesizing a school-cohort first wave with a sparse network
/// and a skewed behavior distribution.
struct CohortTargets {
  double mean_degree = 1.4;
  double degree_tolerance = 0.2;
  int max_in_degree = 5;
  double behavior_mean = 1.8;
  double behavior_tolerance = 0.1;
  double share_at_min = 0.075;  // mass at the bottom scale point
  double share_at_max = 0.028;  // mass at the top scale point
  double gender_ratio = 0.5;
  int max_bisection_steps = 30;
};

struct CohortWave1 {
  NetworkState net;
  BehaviorState beh;
  CovariateSet covs;  // actor covariate "gender"
};

/// Generates a first wave matching the targets: the network comes from a
/// burn-in whose density parameter is tuned by bisection, the behavior from
/// a discrete distribution with the stated end-point masses and mean.
/// `burnin_model` supplies the non-focal tie effects; its density parameter
/// is overwritten during tuning.
CohortWave1 synthesize_cohort_wave1(int n, BehaviorScale scale,
                                    const ModelSpec& burnin_model,
                                    const CohortTargets& targets, Rng& rng);

/// The skewed cohort behavior distribution used above, exposed for reuse:
/// masses over [zmin..zmax] with fixed end points and interior masses from a
/// binomial shape solved against the target mean.
std::vector<double> cohort_behavior_distribution(BehaviorScale scale,
                                                 const CohortTargets& targets);

}  // namespace saom
