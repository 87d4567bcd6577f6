#include "saompower/effects.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace saom {

namespace {

int popcount_and(std::span<const std::uint64_t> a,
                 std::span<const std::uint64_t> b) {
  int s = 0;
  for (std::size_t w = 0; w < a.size(); ++w)
    s += std::popcount(a[w] & b[w]);
  return s;
}

int popcount_and3(std::span<const std::uint64_t> a,
                  std::span<const std::uint64_t> b,
                  std::span<const std::uint64_t> c) {
  int s = 0;
  for (std::size_t w = 0; w < a.size(); ++w)
    s += std::popcount(a[w] & b[w] & c[w]);
  return s;
}

}  // namespace

double actor_statistic(const NetworkState& net, const BehaviorState& beh,
                       const CovariateSet& covs, int actor,
                       const EffectSpec& effect, const Centering& centering) {
  const int i = actor;
  switch (effect.kind) {
    case EffectKind::rate:
      throw ConfigError("rate has no evaluation statistic");
    case EffectKind::density:
      return net.out_degree(i);
    case EffectKind::recip:
      return popcount_and(net.out_row(i), net.in_col(i));
    case EffectKind::trans_trip: {
      // ordered pairs (j,h): i->j, j->h, i->h
      double s = 0.0;
      net.for_each_out(i, [&](int j) {
        s += popcount_and(net.out_row(j), net.out_row(i));
      });
      return s;
    }
    case EffectKind::cycle3: {
      // ordered pairs (j,h): i->j, j->h, h->i
      double s = 0.0;
      net.for_each_out(i, [&](int j) {
        s += popcount_and(net.out_row(j), net.in_col(i));
      });
      return s;
    }
    case EffectKind::trans_rec_trip: {
      // transitive triplets whose i->j tie is reciprocated
      double s = 0.0;
      net.for_each_out(i, [&](int j) {
        if (net.tie(j, i))
          s += popcount_and(net.out_row(j), net.out_row(i));
      });
      return s;
    }
    case EffectKind::dyad_x: {
      const auto& w = covs.dyadic_covariate(effect.covariate);
      const int n = net.size();
      double s = 0.0;
      net.for_each_out(i, [&](int j) { s += w[static_cast<std::size_t>(i) * n + j]; });
      return s;
    }
    case EffectKind::same_x: {
      const auto& v = covs.actor_covariate(effect.covariate);
      double s = 0.0;
      net.for_each_out(i, [&](int j) { s += v[i] == v[j] ? 1.0 : 0.0; });
      return s;
    }
    case EffectKind::sim_x:
    case EffectKind::tot_sim: {
      const double width = beh.scale.width();
      double s = 0.0;
      net.for_each_out(i, [&](int j) {
        s += similarity(beh.values[i], beh.values[j], width) -
             centering.similarity_mean;
      });
      return s;
    }
    case EffectKind::linear:
      return beh.values[i] - centering.behavior_mean;
    case EffectKind::quad: {
      const double c = beh.values[i] - centering.behavior_mean;
      return c * c;
    }
    case EffectKind::av_alt: {
      const int deg = net.out_degree(i);
      if (deg == 0) return 0.0;
      double alters = 0.0;
      net.for_each_out(i, [&](int j) {
        alters += beh.values[j] - centering.behavior_mean;
      });
      return (beh.values[i] - centering.behavior_mean) * alters / deg;
    }
  }
  return 0.0;
}

double sum_actor_statistics(const NetworkState& net, const BehaviorState& beh,
                            const CovariateSet& covs,
                            std::span<const int> actors,
                            const EffectSpec& effect,
                            const Centering& centering) {
  double s = 0.0;
  for (int i : actors) s += actor_statistic(net, beh, covs, i, effect, centering);
  return s;
}

void network_change_deltas(const NetworkState& net, const BehaviorState& beh,
                           const CovariateSet& covs, int actor,
                           std::span<const EffectSpec> effects,
                           const Centering& centering,
                           std::vector<double>& out) {
  const int n = net.size();
  const int k_effects = static_cast<int>(effects.size());
  out.assign(static_cast<std::size_t>(n) * k_effects, 0.0);
  const int i = actor;

  // Resolve covariate pointers and decide which intersections are needed.
  bool need_oo = false;   // |out(i) & out(a)|
  bool need_oi = false;   // |out(i) & in(a)|
  bool need_ai = false;   // |out(a) & in(i)|
  bool need_mut = false;  // |mut(i) & in(a)|
  std::vector<const double*> dyad(k_effects, nullptr);
  std::vector<const double*> attr(k_effects, nullptr);
  for (int k = 0; k < k_effects; ++k) {
    switch (effects[k].kind) {
      case EffectKind::trans_trip: need_oo = need_oi = true; break;
      case EffectKind::trans_rec_trip: need_oo = need_mut = true; break;
      case EffectKind::cycle3: need_ai = true; break;
      case EffectKind::dyad_x:
        dyad[k] = covs.dyadic_covariate(effects[k].covariate).data();
        break;
      case EffectKind::same_x:
        attr[k] = covs.actor_covariate(effects[k].covariate).data();
        break;
      case EffectKind::density:
      case EffectKind::recip:
      case EffectKind::sim_x:
        break;
      default:
        throw ConfigError(std::string("effect '") + effect_name(effects[k].kind) +
                          "' cannot enter the tie sub-model");
    }
  }

  const auto out_i = net.out_row(i);
  const auto in_i = net.in_col(i);
  std::vector<std::uint64_t> mut_i;
  if (need_mut) {
    mut_i.resize(out_i.size());
    for (std::size_t w = 0; w < out_i.size(); ++w) mut_i[w] = out_i[w] & in_i[w];
  }
  const double width = beh.scale.width();
  const double zi = beh.values[i];

  for (int a = 0; a < n; ++a) {
    if (a == i) continue;
    const double sgn = net.tie(i, a) ? -1.0 : 1.0;
    const auto out_a = net.out_row(a);
    const auto in_a = net.in_col(a);
    const int oo = need_oo ? popcount_and(out_i, out_a) : 0;
    const int oi = need_oi ? popcount_and(out_i, in_a) : 0;
    const int ai = need_ai ? popcount_and(out_a, in_i) : 0;
    const int mu = need_mut ? popcount_and({mut_i.data(), mut_i.size()}, in_a) : 0;
    double* row = out.data() + static_cast<std::size_t>(a) * k_effects;
    for (int k = 0; k < k_effects; ++k) {
      switch (effects[k].kind) {
        case EffectKind::density:
          row[k] = sgn;
          break;
        case EffectKind::recip:
          row[k] = net.tie(a, i) ? sgn : 0.0;
          break;
        case EffectKind::trans_trip:
          row[k] = sgn * (oo + oi);
          break;
        case EffectKind::cycle3:
          row[k] = sgn * ai;
          break;
        case EffectKind::trans_rec_trip:
          row[k] = sgn * ((net.tie(a, i) ? oo : 0) + mu);
          break;
        case EffectKind::dyad_x:
          row[k] = sgn * dyad[k][static_cast<std::size_t>(i) * n + a];
          break;
        case EffectKind::same_x:
          row[k] = attr[k][i] == attr[k][a] ? sgn : 0.0;
          break;
        case EffectKind::sim_x:
          row[k] = sgn * (similarity(zi, beh.values[a], width) -
                          centering.similarity_mean);
          break;
        default:
          break;
      }
    }
  }
}

std::vector<double> change_statistics_network(
    const NetworkState& net, const BehaviorState& beh, const CovariateSet& covs,
    int actor, std::span<const EffectSpec> effects, const Centering& centering) {
  const int n = net.size();
  const int k_effects = static_cast<int>(effects.size());
  std::vector<double> stats;
  network_change_deltas(net, beh, covs, actor, effects, centering, stats);
  std::vector<double> current(k_effects);
  for (int k = 0; k < k_effects; ++k)
    current[k] = actor_statistic(net, beh, covs, actor, effects[k], centering);
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < k_effects; ++k)
      stats[static_cast<std::size_t>(a) * k_effects + k] += current[k];
  return stats;
}

BehaviorAlternatives change_statistics_behavior(
    const NetworkState& net, const BehaviorState& beh, const CovariateSet& covs,
    int actor, std::span<const EffectSpec> effects, const Centering& centering) {
  const int i = actor;
  const int zi = beh.values[i];
  BehaviorAlternatives alts;
  for (int step : {-1, 0, 1}) {
    const int z = zi + step;
    if (z < beh.scale.zmin || z > beh.scale.zmax) continue;
    alts.steps.push_back(step);
  }
  const int k_effects = static_cast<int>(effects.size());
  alts.statistics.resize(alts.steps.size() * k_effects);

  const int deg = net.out_degree(i);
  const double width = beh.scale.width();
  double alter_sum = 0.0;  // sum of centered alter values, for avAlt
  for (std::size_t a = 0; a < alts.steps.size(); ++a) {
    const double z = zi + alts.steps[a];
    const double zc = z - centering.behavior_mean;
    double* row = alts.statistics.data() + a * k_effects;
    for (int k = 0; k < k_effects; ++k) {
      switch (effects[k].kind) {
        case EffectKind::linear:
          row[k] = zc;
          break;
        case EffectKind::quad:
          row[k] = zc * zc;
          break;
        case EffectKind::tot_sim:
        case EffectKind::sim_x: {
          double s = 0.0;
          net.for_each_out(i, [&](int j) {
            s += similarity(z, beh.values[j], width) - centering.similarity_mean;
          });
          row[k] = s;
          break;
        }
        case EffectKind::av_alt: {
          if (deg == 0) {
            row[k] = 0.0;
            break;
          }
          if (a == 0) {
            alter_sum = 0.0;
            net.for_each_out(i, [&](int j) {
              alter_sum += beh.values[j] - centering.behavior_mean;
            });
          }
          row[k] = zc * alter_sum / deg;
          break;
        }
        default:
          throw ConfigError(std::string("effect '") +
                            effect_name(effects[k].kind) +
                            "' cannot enter the behavior sub-model");
      }
    }
  }
  return alts;
}

std::vector<double> choice_probabilities(std::span<const double> theta,
                                         std::span<const double> statistics,
                                         int n_effects) {
  if (n_effects <= 0 || statistics.size() % n_effects != 0)
    throw ConfigError("choice_probabilities: bad statistics shape");
  const std::size_t n_alts = statistics.size() / n_effects;
  std::vector<double> score(n_alts, 0.0);
  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n_alts; ++a) {
    double u = 0.0;
    for (int k = 0; k < n_effects; ++k)
      u += theta[k] * statistics[a * n_effects + k];
    score[a] = u;
    max_score = std::max(max_score, u);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < n_alts; ++a) {
    score[a] = std::exp(score[a] - max_score);
    total += score[a];
  }
  for (double& p : score) p /= total;
  return score;
}

}  // namespace saom
