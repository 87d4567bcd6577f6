#include "saompower/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "saompower/effects.hpp"

namespace saom {

namespace {

struct MinistepScratch {
  std::vector<double> deltas;
  std::vector<double> weights;
  std::vector<double> theta_net;
  std::vector<double> theta_beh;
};

void load_theta(const ModelSpec& model, MinistepScratch& scratch) {
  scratch.theta_net.clear();
  for (const auto& e : model.network_effects)
    scratch.theta_net.push_back(e.parameter);
  scratch.theta_beh.clear();
  for (const auto& e : model.behavior_effects)
    scratch.theta_beh.push_back(e.parameter);
}

/// One tie ministep of `actor`: softmax over toggling each present alter vs.
/// keeping the state. Utilities are change contributions only; the current
/// state's statistic is a constant shift and cancels.
void network_ministep(SimState& state, const ModelSpec& model,
                      const CovariateSet& covs, int actor,
                      MinistepScratch& scratch, Rng& rng) {
  const int n = state.net.size();
  const int k = static_cast<int>(model.network_effects.size());
  network_change_deltas(state.net, state.beh, covs, actor,
                        model.network_effects, model.centering, scratch.deltas);
  scratch.weights.assign(n, 0.0);
  double max_u = 0.0;  // the keep alternative has utility 0
  for (int a = 0; a < n; ++a) {
    if (a == actor || !state.present[a]) continue;
    double u = 0.0;
    const double* row = scratch.deltas.data() + static_cast<std::size_t>(a) * k;
    for (int e = 0; e < k; ++e) u += scratch.theta_net[e] * row[e];
    scratch.weights[a] = u;
    max_u = std::max(max_u, u);
  }
  double total = 0.0;
  for (int a = 0; a < n; ++a) {
    if (a == actor) {
      scratch.weights[a] = std::exp(-max_u);
    } else if (!state.present[a]) {
      scratch.weights[a] = 0.0;
      continue;
    } else {
      scratch.weights[a] = std::exp(scratch.weights[a] - max_u);
    }
    total += scratch.weights[a];
  }
  const int choice = rng.categorical(scratch.weights, total);
  if (choice != actor) state.net.toggle(actor, choice);
}

void behavior_ministep(SimState& state, const ModelSpec& model,
                       const CovariateSet& covs, int actor,
                       MinistepScratch& scratch, Rng& rng) {
  const auto alts = change_statistics_behavior(
      state.net, state.beh, covs, actor, model.behavior_effects, model.centering);
  const int k = static_cast<int>(model.behavior_effects.size());
  const int n_alts = static_cast<int>(alts.steps.size());
  scratch.weights.assign(n_alts, 0.0);
  double max_u = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n_alts; ++a) {
    double u = 0.0;
    for (int e = 0; e < k; ++e)
      u += scratch.theta_beh[e] * alts.statistics[static_cast<std::size_t>(a) * k + e];
    scratch.weights[a] = u;
    max_u = std::max(max_u, u);
  }
  double total = 0.0;
  for (int a = 0; a < n_alts; ++a) {
    scratch.weights[a] = std::exp(scratch.weights[a] - max_u);
    total += scratch.weights[a];
  }
  const int choice = rng.categorical(scratch.weights, total);
  state.beh.values[actor] += alts.steps[choice];
}

void apply_composition(SimState& state, const CompositionEvent& ev) {
  for (int l : ev.leavers) {
    if (!state.present[l])
      throw SimulationError("composition: leaver is not present");
    state.present[l] = 0;
  }
  for (const auto& j : ev.joiners) {
    if (j.actor < 0 || j.actor >= state.net.size())
      throw SimulationError("composition: joiner slot outside actor range");
    if (state.present[j.actor])
      throw SimulationError("composition: joiner is already present");
    if (state.net.out_degree(j.actor) != 0 || state.net.in_degree(j.actor) != 0)
      throw SimulationError("composition: joiner must enter as an isolate");
    state.present[j.actor] = 1;
    state.beh.values[j.actor] = j.behavior;
  }
}

}  // namespace

SimState simulate_period(SimState state, const ModelSpec& model,
                         const CovariateSet& covs, int period,
                         std::span<const CompositionEvent> events, Rng& rng,
                         SimulationTrace* trace) {
  if (period < 0 || period >= model.periods())
    throw ConfigError("simulate_period: period outside model rates");
  const double rate_net = model.network_rate[period];
  const double rate_beh = model.behavior_rate[period];
  const int n = state.net.size();
  if (static_cast<int>(state.present.size()) != n)
    state.present.assign(n, 1);

  std::vector<CompositionEvent> todo(events.begin(), events.end());
  std::stable_sort(todo.begin(), todo.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });

  MinistepScratch scratch;
  load_theta(model, scratch);

  std::vector<int> present_list;
  present_list.reserve(n);
  auto rebuild_present = [&] {
    present_list.clear();
    for (int i = 0; i < n; ++i)
      if (state.present[i]) present_list.push_back(i);
  };
  rebuild_present();

  const double per_actor = rate_net + rate_beh;
  double t = 0.0;
  std::size_t next_event = 0;
  while (true) {
    const double horizon =
        next_event < todo.size() ? todo[next_event].time : 1.0;
    const double total_rate = per_actor * static_cast<double>(present_list.size());
    double t_next = horizon;
    if (total_rate > 0.0) t_next = t + rng.exponential(total_rate);
    if (t_next >= horizon) {
      t = horizon;
      if (next_event < todo.size()) {
        apply_composition(state, todo[next_event]);
        rebuild_present();
        if (trace)
          trace->composition_snapshots.push_back(
              {period, t, state.net, state.beh, state.present});
        ++next_event;
        continue;
      }
      break;  // reached time 1
    }
    t = t_next;
    const int actor = present_list[rng.uniform_int(
        static_cast<int>(present_list.size()))];
    const bool tie_step = rng.uniform() * per_actor < rate_net;
    if (tie_step) {
      if (trace) ++trace->network_opportunities;
      network_ministep(state, model, covs, actor, scratch, rng);
    } else {
      if (trace) ++trace->behavior_opportunities;
      behavior_ministep(state, model, covs, actor, scratch, rng);
    }
  }
  return state;
}

PanelData simulate_panel(const NetworkState& start_net,
                         const BehaviorState& start_beh,
                         const CovariateSet& covs, const ModelSpec& model,
                         int waves, std::span<const CompositionEvent> composition,
                         Rng& rng, const std::string& group_id,
                         SimulationTrace* trace) {
  if (waves < 2) throw ConfigError("simulate_panel: need at least two waves");
  if (model.periods() < waves - 1)
    throw ConfigError("simulate_panel: model rates cover too few periods");

  const int n = start_net.size();
  PanelData panel;
  panel.group_id = group_id;
  panel.covariates = covs;
  panel.composition.assign(composition.begin(), composition.end());

  SimState state{start_net, start_beh, std::vector<std::uint8_t>(n, 1)};
  for (const auto& ev : panel.composition)
    for (const auto& j : ev.joiners) {
      state.present[j.actor] = 0;  // joiners are absent until their event
      if (start_net.out_degree(j.actor) != 0 || start_net.in_degree(j.actor) != 0)
        throw ConfigError("simulate_panel: joiner slot must start without ties");
    }

  panel.waves.push_back({state.net, state.beh, {}});
  for (int m = 0; m + 1 < waves; ++m) {
    std::vector<CompositionEvent> period_events;
    for (const auto& ev : panel.composition)
      if (ev.period == m) period_events.push_back(ev);
    state = simulate_period(std::move(state), model, covs, m, period_events,
                            rng, trace);
    panel.waves.push_back({state.net, state.beh, {}});
  }
  return panel;
}

NetworkState burn_in_initial_network(int n, const ModelSpec& model,
                                     const CovariateSet& covs, Rng& rng,
                                     const BurnInOptions& opts) {
  for (const auto& e : model.network_effects)
    if (e.kind == EffectKind::sim_x)
      throw ConfigError(
          "burn-in model must not contain the homophily effect: attributes "
          "are assigned after the burn-in");
  if (model.network_rate.empty())
    throw ConfigError("burn-in model has no network rate");

  NetworkState net(n);
  if (model.network_rate.front() <= 0.0) return net;  // no opportunities

  SimState state{std::move(net), BehaviorState(n, {0, 1}, 0),
                 std::vector<std::uint8_t>(n, 1)};
  MinistepScratch scratch;
  load_theta(model, scratch);

  const int chunk = opts.chunk_ministeps > 0 ? opts.chunk_ministeps : n;
  std::vector<double> densities;
  double prev_ma = -1.0;
  auto describe = [&](const char* what, double density) {
    std::string msg = std::string("burn-in ") + what + ": density " +
                      std::to_string(density) + " with parameters";
    for (const auto& e : model.network_effects)
      msg += std::string(" ") + effect_name(e.kind) + "=" +
             std::to_string(e.parameter);
    return msg;
  };

  for (int c = 0; c < opts.max_chunks; ++c) {
    for (int s = 0; s < chunk; ++s) {
      const int actor = rng.uniform_int(n);
      network_ministep(state, model, covs, actor, scratch, rng);
    }
    const double d = state.net.density();
    if (d > 0.5) throw SimulationError(describe("drifts dense", d));
    densities.push_back(d);
    if (static_cast<int>(densities.size()) >= opts.window) {
      double ma = 0.0;
      for (int w = 0; w < opts.window; ++w)
        ma += densities[densities.size() - 1 - w];
      ma /= opts.window;
      if (prev_ma >= 0.0 && std::abs(ma - prev_ma) < opts.tolerance)
        return std::move(state.net);
      prev_ma = ma;
    }
  }
  throw SimulationError(
      describe("did not stabilize within the chunk budget", state.net.density()));
}

BehaviorState assign_initial_attributes(int n, BehaviorScale scale, Rng& rng) {
  if (scale.width() < 0) throw ConfigError("behavior scale is empty");
  BehaviorState beh(n, scale, scale.zmin);
  for (int i = 0; i < n; ++i)
    beh.values[i] = scale.zmin + rng.uniform_int(scale.width() + 1);
  return beh;
}

std::vector<int> CommunityGeometry::community_members(int c) const {
  std::vector<int> members;
  for (int i = 0; i < n; ++i)
    if (community[i] == c) members.push_back(i);
  return members;
}

CommunityGeometry sample_geometry(int n, const GeometryConfig& config, Rng& rng) {
  if (config.communities < 1) throw ConfigError("need at least one community");
  if (config.communities > 1 && config.spacing <= 0.0)
    throw ConfigError("cluster means must be pairwise distinct (spacing > 0)");
  if (config.sd_min < 0.0 || config.sd_max < config.sd_min)
    throw ConfigError("invalid community sd range");

  CommunityGeometry g;
  g.n = n;
  g.communities = config.communities;
  const int cols = static_cast<int>(std::ceil(std::sqrt(config.communities)));
  for (int c = 0; c < config.communities; ++c)
    g.means.push_back({config.spacing * (c % cols), config.spacing * (c / cols)});
  for (int c = 0; c < config.communities; ++c)
    g.sds.push_back(config.sd_min +
                    rng.uniform() * (config.sd_max - config.sd_min));

  // contiguous blocks of near-equal size
  g.community.resize(n);
  const int base = n / config.communities;
  const int extra = n % config.communities;
  int next = 0;
  for (int c = 0; c < config.communities; ++c) {
    const int size = base + (c < extra ? 1 : 0);
    for (int s = 0; s < size; ++s) g.community[next++] = c;
  }

  g.positions.resize(n);
  for (int i = 0; i < n; ++i) {
    const int c = g.community[i];
    g.positions[i] = {rng.normal(g.means[c][0], g.sds[c]),
                      rng.normal(g.means[c][1], g.sds[c])};
  }

  g.distances.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double dx = g.positions[i][0] - g.positions[j][0];
      const double dy = g.positions[i][1] - g.positions[j][1];
      const double d = std::sqrt(dx * dx + dy * dy);
      g.distances[static_cast<std::size_t>(i) * n + j] = d;
      g.distances[static_cast<std::size_t>(j) * n + i] = d;
    }
  return g;
}

std::vector<double> cohort_behavior_distribution(BehaviorScale scale,
                                                 const CohortTargets& targets) {
  const int points = scale.width() + 1;
  if (points < 3)
    throw ConfigError("cohort behavior scale needs at least three points");
  std::vector<double> p(points, 0.0);
  p.front() = targets.share_at_min;
  p.back() = targets.share_at_max;
  const double interior_mass = 1.0 - targets.share_at_min - targets.share_at_max;
  if (interior_mass <= 0.0) throw ConfigError("end-point masses exceed one");
  const double interior_sum = targets.behavior_mean -
                              scale.zmin * targets.share_at_min -
                              scale.zmax * targets.share_at_max;
  const double interior_mean = interior_sum / interior_mass;
  const int m = points - 2;  // interior support {zmin+1 .. zmax-1}
  if (m == 1) {
    p[1] = interior_mass;
    return p;
  }
  double q = (interior_mean - (scale.zmin + 1)) / (m - 1);
  q = std::clamp(q, 1e-6, 1.0 - 1e-6);
  // binomial(m-1, q) over the interior points
  double coef = 1.0;
  for (int v = 0; v < m; ++v) {
    if (v > 0) coef = coef * (m - v) / v;
    p[1 + v] = interior_mass * coef * std::pow(q, v) * std::pow(1.0 - q, m - 1 - v);
  }
  return p;
}

CohortWave1 synthesize_cohort_wave1(int n, BehaviorScale scale,
                                    const ModelSpec& burnin_model,
                                    const CohortTargets& targets, Rng& rng) {
  CohortWave1 out;

  // gender: balanced binary covariate, shuffled
  std::vector<double> gender(n, 0.0);
  const int ones = static_cast<int>(std::lround(n * targets.gender_ratio));
  for (int i = 0; i < ones; ++i) gender[i] = 1.0;
  for (int i = n - 1; i > 0; --i)
    std::swap(gender[i], gender[rng.uniform_int(i + 1)]);
  out.covs.actor["gender"] = gender;

  // behavior: draw until the realized mean matches the target
  const auto dist = cohort_behavior_distribution(scale, targets);
  out.beh = BehaviorState(n, scale, scale.zmin);
  for (int attempt = 0;; ++attempt) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      double acc = 0.0;
      int v = scale.zmax;
      for (int s = 0; s < static_cast<int>(dist.size()); ++s) {
        acc += dist[s];
        if (u < acc) {
          v = scale.zmin + s;
          break;
        }
      }
      out.beh.values[i] = v;
      sum += v;
    }
    if (std::abs(sum / n - targets.behavior_mean) <= targets.behavior_tolerance)
      break;
    if (attempt >= 100)
      throw SimulationError("cohort behavior mean did not hit the target band");
  }

  if (targets.mean_degree <= 0.0) {
    out.net = NetworkState(n);
    return out;
  }

  // bisection on the burn-in density parameter
  ModelSpec model = burnin_model;
  bool has_density = false;
  for (auto& e : model.network_effects)
    if (e.kind == EffectKind::density) has_density = true;
  if (!has_density)
    throw ConfigError("cohort burn-in model needs a density effect");

  double lo = -10.0, hi = 0.0;
  for (int step = 0; step < targets.max_bisection_steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    for (auto& e : model.network_effects)
      if (e.kind == EffectKind::density) e.parameter = mid;
    double deg = std::numeric_limits<double>::infinity();
    NetworkState candidate;
    try {
      candidate = burn_in_initial_network(n, model, out.covs, rng);
      deg = static_cast<double>(candidate.tie_count()) / n;
    } catch (const SimulationError&) {
      // degenerate-dense drift: treat as overshooting the target
    }
    if (std::abs(deg - targets.mean_degree) <= targets.degree_tolerance) {
      int max_in = 0;
      for (int i = 0; i < n; ++i) max_in = std::max(max_in, candidate.in_degree(i));
      if (max_in <= targets.max_in_degree) {
        out.net = std::move(candidate);
        return out;
      }
      continue;  // right density, too concentrated: redraw
    }
    if (deg > targets.mean_degree)
      hi = mid;
    else
      lo = mid;
  }
  throw SimulationError(
      "cohort density tuning failed: no parameter hit mean degree " +
      std::to_string(targets.mean_degree) + " within " +
      std::to_string(targets.max_bisection_steps) + " bisection steps");
}

}  // namespace saom
