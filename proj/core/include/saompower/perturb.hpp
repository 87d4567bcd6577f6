#pragma once
// Design subsampling and data-collection interference: MCAR non-response and
// actor turnover schedules. All transformations are pure.

#include "saompower/rng.hpp"
#include "saompower/types.hpp"

namespace saom {

/// Restricts a panel to an actor subset and a leading-contiguous wave subset
/// (waves must be {0,1,...,k-1} with k >= 2). Ties, covariates, masks and
/// composition events are induced on the subset; actor ids are remapped to
/// 0..|subset|-1 in subset order.
PanelData subsample_panel(const PanelData& panel, std::span<const int> actors,
                          std::span<const int> waves);

struct MissingPolicy {
  int per_group_count = 0;      // actors per group and wave treated as missing
  bool independent_draws = true;  // waves are drawn independently
};

/// Marks `per_group_count` uniformly sampled present actors per wave as
/// missing (outgoing row and behavior). Values underneath are retained; only
/// the masks change.
PanelData inject_mcar(const PanelData& panel, const MissingPolicy& policy,
                      Rng& rng);

struct TurnoverPolicy {
  int per_group_count = 0;
  double time = 0.5;  // fraction of the period at which turnover happens
};

/// Joint gender x behavior attribute frequencies of a population, used to
/// draw joiner attributes with replacement.
struct AttributeFrequencyTable {
  std::vector<std::pair<double, int>> entries;  // (gender, behavior) per actor

  static AttributeFrequencyTable from_wave1(const PanelData& panel,
                                            const std::string& gender_covariate);
};

/// Builds per-period turnover events for a group of `n_base` actors observed
/// over `periods` periods: each period, `per_group_count` present actors
/// leave at the policy time and as many joiners (attributes sampled from the
/// table) enter as isolates on fresh actor slots starting at `n_base`.
std::vector<CompositionEvent> build_turnover_schedule(
    int n_base, int periods, const TurnoverPolicy& policy,
    const AttributeFrequencyTable& table, Rng& rng);

/// Widens a wave-1 cohort to `n_total` actor slots so that scheduled joiners
/// have somewhere to live: extra slots are absent isolates whose covariates
/// and placeholder behavior come from the composition events.
PanelData widen_for_joiners(const NetworkState& net, const BehaviorState& beh,
                            const CovariateSet& covs,
                            std::span<const CompositionEvent> composition,
                            const std::string& gender_covariate,
                            const std::string& group_id);

}  // namespace saom
