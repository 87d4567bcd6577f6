#pragma once
// Effect statistics of the actor-oriented model and the multinomial-logit
// choice rule. Everything here is a pure function of its inputs.

#include <span>
#include <vector>

#include "saompower/types.hpp"

namespace saom {

/// Dyadic similarity on an integer scale: 1 - |vi - vj| / width, in [0,1].
inline double similarity(double vi, double vj, double width) {
  const double d = vi >= vj ? vi - vj : vj - vi;
  return 1.0 - d / width;
}

/// Per-actor contribution s_ik of one evaluation effect, computed from
/// scratch on the given state. `effect.kind` must not be `rate`.
double actor_statistic(const NetworkState& net, const BehaviorState& beh,
                       const CovariateSet& covs, int actor,
                       const EffectSpec& effect, const Centering& centering);

/// Sum of actor_statistic over the given actors.
double sum_actor_statistics(const NetworkState& net, const BehaviorState& beh,
                            const CovariateSet& covs,
                            std::span<const int> actors,
                            const EffectSpec& effect,
                            const Centering& centering);

/// Change contributions for a tie ministep of `actor`: out[a*K + k] is
/// s_ik(x with tie actor->a toggled) - s_ik(x) for effect k; the row a ==
/// actor (the "keep" alternative) is all zeros. `out` is resized to n*K.
void network_change_deltas(const NetworkState& net, const BehaviorState& beh,
                           const CovariateSet& covs, int actor,
                           std::span<const EffectSpec> effects,
                           const Centering& centering,
                           std::vector<double>& out);

/// Full evaluation statistics per tie alternative, row-major n x K; row j is
/// the state with tie actor->j toggled, row j == actor is the current state.
std::vector<double> change_statistics_network(
    const NetworkState& net, const BehaviorState& beh, const CovariateSet& covs,
    int actor, std::span<const EffectSpec> effects, const Centering& centering);

/// Behavior ministep alternatives: steps in {-1,0,+1} that stay inside the
/// scale (in that order), with the evaluation statistics at each alternative.
struct BehaviorAlternatives {
  std::vector<int> steps;
  std::vector<double> statistics;  // steps.size() x K, row-major
};
BehaviorAlternatives change_statistics_behavior(
    const NetworkState& net, const BehaviorState& beh, const CovariateSet& covs,
    int actor, std::span<const EffectSpec> effects, const Centering& centering);

/// Multinomial-logit choice probabilities over alternatives: row a of
/// `statistics` (row-major, n_effects wide) scores exp(theta . s_a), computed
/// with max-subtraction; the result sums to one.
std::vector<double> choice_probabilities(std::span<const double> theta,
                                         std::span<const double> statistics,
                                         int n_effects);

}  // namespace saom
