#include "saompower/estimator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "saompower/effects.hpp"
#include "saompower/parallel.hpp"
#include "saompower/rng.hpp"
#include "saompower/simulator.hpp"
#include "saompower/stats.hpp"

namespace saom {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed stream tags per estimation phase.
enum : std::uint64_t { kPhase1 = 1, kPhase2 = 2, kPhase3 = 3 };

/// Pre-resolved per-period data: the imputed start state, statistic filters
/// and the cross-lagged network used by behavior-effect statistics.
struct PreparedPeriod {
  SimState start;          // imputed wave m; absent actors zeroed
  NetworkState hybrid_net; // start net additionally cleared of absent-at-end actors
  std::vector<CompositionEvent> events;
  std::vector<int> included;            // actors entering the moment sums
  std::vector<std::uint64_t> pair_mask; // alters present at both endpoints
  std::vector<int> absent_end;          // absent at wave m+1
};

struct PreparedGroup {
  const CovariateSet* covs = nullptr;
  std::vector<Wave> imputed;  // observed waves, imputed and absence-zeroed
  std::vector<PreparedPeriod> periods;
};

int behavior_mode(const PanelData& panel) {
  std::map<int, int> counts;
  const auto& w = panel.waves.front();
  for (int i = 0; i < panel.n(); ++i) {
    const bool missing = !w.missing.empty() && w.missing[i];
    if (panel.present_at_wave(i, 0) && !missing) ++counts[w.beh.values[i]];
  }
  int best = w.beh.scale.zmin, best_count = -1;
  for (const auto& [value, count] : counts)
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  return best;
}

void copy_out_row(NetworkState& dst, int i, const NetworkState& src) {
  for (int j = 0; j < dst.size(); ++j)
    if (j != i && dst.tie(i, j) != src.tie(i, j)) dst.set_tie(i, j, src.tie(i, j));
}

void clear_out_row(NetworkState& net, int i) {
  std::vector<int> drop;
  net.for_each_out(i, [&](int j) { drop.push_back(j); });
  for (int j : drop) net.set_tie(i, j, false);
}

PreparedGroup prepare_group(const PanelData& panel, const ModelSpec& model) {
  panel.validate();
  const int n = panel.n();
  const int periods = panel.period_count();
  if (model.periods() != periods)
    throw ConfigError("model rates cover " + std::to_string(model.periods()) +
                      " periods but the panel has " + std::to_string(periods));

  PreparedGroup g;
  g.covs = &panel.covariates;

  // Impute missing rows/behavior: zeros and the behavior mode at wave 1,
  // carry-forward afterwards. Actors outside the observation window are
  // zeroed entirely.
  const int mode = behavior_mode(panel);
  for (int w = 0; w < panel.wave_count(); ++w) {
    Wave imp = panel.waves[w];
    for (int i = 0; i < n; ++i) {
      const bool missing = !imp.missing.empty() && imp.missing[i];
      if (missing) {
        if (w == 0) {
          clear_out_row(imp.net, i);
          imp.beh.values[i] = mode;
        } else {
          copy_out_row(imp.net, i, g.imputed[w - 1].net);
          imp.beh.values[i] = g.imputed[w - 1].beh.values[i];
        }
      }
    }
    for (int i = 0; i < n; ++i)
      if (!panel.present_at_wave(i, w)) imp.net.clear_actor(i);
    g.imputed.push_back(std::move(imp));
  }

  const int words = (n + 63) / 64;
  for (int m = 0; m < periods; ++m) {
    PreparedPeriod pp;
    pp.start.net = g.imputed[m].net;
    pp.start.beh = g.imputed[m].beh;
    pp.start.present.assign(n, 0);
    for (int i = 0; i < n; ++i)
      pp.start.present[i] = panel.present_at_wave(i, m) ? 1 : 0;
    for (const auto& ev : panel.composition)
      if (ev.period == m) pp.events.push_back(ev);
    for (int i = 0; i < n; ++i)
      if (panel.included_in_period(i, m)) pp.included.push_back(i);
    pp.pair_mask.assign(words, 0);
    for (int j = 0; j < n; ++j)
      if (panel.present_at_wave(j, m) && panel.present_at_wave(j, m + 1))
        pp.pair_mask[j >> 6] |= std::uint64_t{1} << (j & 63);
    for (int j = 0; j < n; ++j)
      if (!panel.present_at_wave(j, m + 1)) pp.absent_end.push_back(j);
    pp.hybrid_net = pp.start.net;
    for (int j : pp.absent_end) pp.hybrid_net.clear_actor(j);
    g.periods.push_back(std::move(pp));
  }
  return g;
}

/// Adds one period's statistics (observed or simulated end state) into `out`.
/// `end_net` must already have absent-at-end actors zeroed.
void accumulate_period(const PreparedGroup& g, int m, const ModelSpec& model,
                       const ParameterLayout& layout,
                       const NetworkState& end_net, const BehaviorState& end_beh,
                       std::span<double> out) {
  const auto& pp = g.periods[m];

  double ham = 0.0;
  for (int i : pp.included) {
    const auto a = pp.start.net.out_row(i);
    const auto b = end_net.out_row(i);
    for (std::size_t w = 0; w < a.size(); ++w)
      ham += std::popcount((a[w] ^ b[w]) & pp.pair_mask[w]);
  }
  out[layout.net_rate(m)] += ham;

  double bch = 0.0;
  for (int i : pp.included)
    bch += std::abs(end_beh.values[i] - pp.start.beh.values[i]);
  out[layout.beh_rate(m)] += bch;

  for (int k = 0; k < layout.n_net; ++k)
    for (int i : pp.included)
      out[layout.net_effect(k)] += actor_statistic(
          end_net, end_beh, *g.covs, i, model.network_effects[k], model.centering);
  for (int k = 0; k < layout.n_beh; ++k)
    for (int i : pp.included)
      out[layout.beh_effect(k)] += actor_statistic(
          pp.hybrid_net, end_beh, *g.covs, i, model.behavior_effects[k],
          model.centering);
}

std::vector<double> observed_targets(std::span<const PreparedGroup> groups,
                                     const ModelSpec& model,
                                     const ParameterLayout& layout) {
  std::vector<double> out(layout.dim(), 0.0);
  for (const auto& g : groups)
    for (int m = 0; m < layout.periods; ++m)
      accumulate_period(g, m, model, layout, g.imputed[m + 1].net,
                        g.imputed[m + 1].beh, out);
  return out;
}

ModelSpec apply_theta(const ModelSpec& base, const ParameterLayout& layout,
                      std::span<const double> theta) {
  ModelSpec m = base;
  for (int p = 0; p < layout.periods; ++p) {
    m.network_rate[p] = theta[layout.net_rate(p)];
    m.behavior_rate[p] = theta[layout.beh_rate(p)];
  }
  for (int k = 0; k < layout.n_net; ++k)
    m.network_effects[k].parameter = theta[layout.net_effect(k)];
  for (int k = 0; k < layout.n_beh; ++k)
    m.behavior_effects[k].parameter = theta[layout.beh_effect(k)];
  return m;
}

/// One moment simulation: every period of every group is re-simulated from
/// its imputed start conditional on the earlier observed wave; statistics are
/// accumulated with the same filters as the observed targets.
std::vector<double> simulate_statistics(std::span<const PreparedGroup> groups,
                                        const ModelSpec& base,
                                        const ParameterLayout& layout,
                                        std::span<const double> theta,
                                        std::uint64_t seed) {
  const ModelSpec model = apply_theta(base, layout, theta);
  Rng rng(seed);
  std::vector<double> out(layout.dim(), 0.0);
  for (const auto& g : groups)
    for (int m = 0; m < layout.periods; ++m) {
      SimState s = g.periods[m].start;
      s = simulate_period(std::move(s), model, *g.covs, m, g.periods[m].events,
                          rng);
      for (int j : g.periods[m].absent_end) s.net.clear_actor(j);
      accumulate_period(g, m, model, layout, s.net, s.beh, out);
    }
  return out;
}

struct DerivativeInput {
  std::span<const PreparedGroup> groups;
  const ModelSpec* base;
  const ParameterLayout* layout;
  std::span<const int> free;  // free parameter indices
  double epsilon;
  int threads;
};

/// Finite-difference derivative of expected statistics w.r.t. the free
/// parameters using common random numbers: for run r, the base and every
/// perturbed simulation replay the same stream seed.
Eigen::MatrixXd fd_derivative(const DerivativeInput& in,
                              std::span<const double> theta, int runs,
                              std::uint64_t stream,
                              std::span<const std::vector<double>> base_runs) {
  const int dim = in.layout->dim();
  const int n_free = static_cast<int>(in.free.size());
  std::vector<Eigen::MatrixXd> parts(runs);
  parallel_for(runs, in.threads, [&](int r) {
    const std::uint64_t seed = derive_seed(stream, {static_cast<std::uint64_t>(r)});
    std::vector<double> base =
        r < static_cast<int>(base_runs.size())
            ? base_runs[r]
            : simulate_statistics(in.groups, *in.base, *in.layout, theta, seed);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(dim, n_free);
    std::vector<double> shifted(theta.begin(), theta.end());
    for (int c = 0; c < n_free; ++c) {
      const int p = in.free[c];
      shifted[p] += in.epsilon;
      const auto s =
          simulate_statistics(in.groups, *in.base, *in.layout, shifted, seed);
      shifted[p] = theta[p];
      for (int row = 0; row < dim; ++row)
        d(row, c) = (s[row] - base[row]) / in.epsilon;
    }
    parts[r] = std::move(d);
  });
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim, n_free);
  for (const auto& part : parts) sum += part;
  return sum / static_cast<double>(runs);
}

Eigen::MatrixXd free_square(const Eigen::MatrixXd& d,
                            std::span<const int> free) {
  Eigen::MatrixXd out(free.size(), free.size());
  for (std::size_t r = 0; r < free.size(); ++r)
    for (std::size_t c = 0; c < free.size(); ++c) out(r, c) = d(free[r], c);
  return out;
}

}  // namespace

ParameterLayout parameter_layout(const ModelSpec& model) {
  ParameterLayout layout;
  layout.periods = model.periods();
  layout.n_net = static_cast<int>(model.network_effects.size());
  layout.n_beh = static_cast<int>(model.behavior_effects.size());
  return layout;
}

std::vector<std::string> parameter_names(const ModelSpec& model) {
  std::vector<std::string> names;
  for (int m = 0; m < model.periods(); ++m)
    names.push_back("rate.net.p" + std::to_string(m + 1));
  for (int m = 0; m < model.periods(); ++m)
    names.push_back("rate.beh.p" + std::to_string(m + 1));
  for (const auto& e : model.network_effects) names.push_back(effect_name(e.kind));
  for (const auto& e : model.behavior_effects) names.push_back(effect_name(e.kind));
  return names;
}

int EstimationResult::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw ConfigError("unknown parameter '" + name + "'");
}

std::vector<double> target_statistics(std::span<const PanelData> panels,
                                      const ModelSpec& model) {
  if (panels.empty()) throw ConfigError("no panels");
  model.validate();
  const ParameterLayout layout = parameter_layout(model);
  std::vector<PreparedGroup> groups;
  for (const auto& p : panels) groups.push_back(prepare_group(p, model));
  return observed_targets(groups, model, layout);
}

std::vector<double> target_statistics(const PanelData& panel,
                                      const ModelSpec& model) {
  return target_statistics(std::span<const PanelData>(&panel, 1), model);
}

EstimationResult estimate(std::span<const PanelData> panels,
                          const ModelSpec& model_in,
                          const EstimationOptions& options) {
  const auto t_start = std::chrono::steady_clock::now();
  if (panels.empty()) throw ConfigError("no panels");

  ModelSpec model = model_in;
  model.centering = compute_centering(panels);
  model.validate();

  const ParameterLayout layout = parameter_layout(model);
  const int dim = layout.dim();

  std::vector<PreparedGroup> groups;
  for (const auto& p : panels) groups.push_back(prepare_group(p, model));

  EstimationResult result;
  result.names = parameter_names(model);
  result.fixed.assign(dim, 0);

  const std::vector<double> targets = observed_targets(groups, model, layout);

  // Periods without observed change cannot identify their rate: pin it.
  std::vector<long> included_count(layout.periods, 0);
  for (const auto& g : groups)
    for (int m = 0; m < layout.periods; ++m)
      included_count[m] += static_cast<long>(g.periods[m].included.size());
  for (int m = 0; m < layout.periods; ++m) {
    if (targets[layout.net_rate(m)] == 0.0) {
      result.fixed[layout.net_rate(m)] = 1;
      result.warnings.push_back("no tie change observed in period " +
                                std::to_string(m + 1) +
                                ": network rate fixed at the floor");
    }
    if (targets[layout.beh_rate(m)] == 0.0) {
      result.fixed[layout.beh_rate(m)] = 1;
      result.warnings.push_back("no behavior change observed in period " +
                                std::to_string(m + 1) +
                                ": behavior rate fixed at the floor");
    }
  }

  std::vector<int> free;
  for (int p = 0; p < dim; ++p)
    if (!result.fixed[p]) free.push_back(p);
  const int n_free = static_cast<int>(free.size());
  if (n_free == 0) throw EstimationError("no free parameters");

  // Starting values: crude data-driven rates, weak negative density,
  // everything else zero.
  std::vector<double> theta(dim, 0.0);
  for (int m = 0; m < layout.periods; ++m) {
    const double n_inc = std::max<long>(1, included_count[m]);
    theta[layout.net_rate(m)] =
        std::clamp(2.0 * targets[layout.net_rate(m)] / n_inc, 0.5, 20.0);
    theta[layout.beh_rate(m)] =
        std::clamp(2.5 * targets[layout.beh_rate(m)] / n_inc, 0.3, 20.0);
    if (result.fixed[layout.net_rate(m)])
      theta[layout.net_rate(m)] = options.rate_floor;
    if (result.fixed[layout.beh_rate(m)])
      theta[layout.beh_rate(m)] = options.rate_floor;
  }
  for (int k = 0; k < layout.n_net; ++k)
    if (model.network_effects[k].kind == EffectKind::density)
      theta[layout.net_effect(k)] = -1.0;
  if (options.initial_parameters) {
    if (static_cast<int>(options.initial_parameters->size()) != dim)
      throw ConfigError("initial_parameters has wrong length");
    theta = *options.initial_parameters;
  }

  auto clamp_rates = [&](std::vector<double>& th) {
    for (int m = 0; m < layout.periods; ++m) {
      th[layout.net_rate(m)] =
          std::clamp(th[layout.net_rate(m)], options.rate_floor, 200.0);
      th[layout.beh_rate(m)] =
          std::clamp(th[layout.beh_rate(m)], options.rate_floor, 200.0);
    }
  };
  clamp_rates(theta);

  DerivativeInput din{groups, &model, &layout, free,
                      options.derivative_epsilon, options.threads};

  auto check_invertible = [&](const Eigen::FullPivLU<Eigen::MatrixXd>& lu) {
    if (!lu.isInvertible())
      throw EstimationError(
          "derivative matrix is singular: the moment equations do not "
          "separate the effects (collinear effects or covariates?)");
  };

  Eigen::MatrixXd d_next;  // phase-3 derivative reused by a retry
  bool have_d_next = false;
  int attempt = 0;
  for (;; ++attempt) {
    // ---- phase 2: Robbins-Monro iterations -------------------------------
    if (options.phase2_subphases > 0) {
      Eigen::MatrixXd d_free;
      if (have_d_next) {
        d_free = d_next;
      } else {
        const auto d = fd_derivative(
            din, theta, options.phase1_runs,
            derive_seed(options.seed, {kPhase1, static_cast<std::uint64_t>(attempt)}),
            {});
        d_free = free_square(d, free);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(d_free);
      check_invertible(lu);

      double gain = options.phase2_initial_gain;
      for (int sub = 0; sub < options.phase2_subphases; ++sub) {
        const int iterations = std::min(
            options.phase2_max_iterations,
            static_cast<int>(std::ceil((7.0 + n_free) * std::pow(2.52, sub))));
        std::vector<double> avg(dim, 0.0);
        for (int it = 0; it < iterations; ++it) {
          const std::uint64_t seed = derive_seed(
              options.seed, {kPhase2, static_cast<std::uint64_t>(attempt),
                             static_cast<std::uint64_t>(sub),
                             static_cast<std::uint64_t>(it)});
          const auto sim = simulate_statistics(groups, model, layout, theta, seed);
          Eigen::VectorXd dev(n_free);
          for (int c = 0; c < n_free; ++c)
            dev(c) = sim[free[c]] - targets[free[c]];
          Eigen::VectorXd step = lu.solve(dev);
          for (int c = 0; c < n_free; ++c) {
            const double s = std::clamp(gain * step(c), -options.max_step,
                                        options.max_step);
            theta[free[c]] -= s;
          }
          clamp_rates(theta);
          for (int p = 0; p < dim; ++p) avg[p] += theta[p];
        }
        for (int p = 0; p < dim; ++p) theta[p] = avg[p] / iterations;
        clamp_rates(theta);
        gain *= 0.5;
      }
    }

    // ---- phase 3: covariance, derivative refresh, convergence ratios -----
    const std::uint64_t stream3 = derive_seed(
        options.seed, {kPhase3, static_cast<std::uint64_t>(attempt)});
    std::vector<std::vector<double>> sims(options.phase3_runs);
    parallel_for(options.phase3_runs, options.threads, [&](int r) {
      sims[r] = simulate_statistics(groups, model, layout, theta,
                                    derive_seed(stream3, {static_cast<std::uint64_t>(r)}));
    });

    std::vector<double> mean_dev(dim, 0.0), sd_dev(dim, 0.0);
    for (const auto& s : sims)
      for (int p = 0; p < dim; ++p) mean_dev[p] += s[p] - targets[p];
    for (int p = 0; p < dim; ++p) mean_dev[p] /= options.phase3_runs;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n_free, n_free);
    for (const auto& s : sims) {
      Eigen::VectorXd c(n_free);
      for (int k = 0; k < n_free; ++k)
        c(k) = s[free[k]] - targets[free[k]] - mean_dev[free[k]];
      sigma += c * c.transpose();
    }
    sigma /= std::max(1, options.phase3_runs - 1);
    for (int p = 0; p < dim; ++p) {
      double v = 0.0;
      for (const auto& s : sims) {
        const double d = s[p] - targets[p] - mean_dev[p];
        v += d * d;
      }
      sd_dev[p] = std::sqrt(v / std::max(1, options.phase3_runs - 1));
    }

    result.t_ratio.assign(dim, 0.0);
    for (int p = 0; p < dim; ++p) {
      if (sd_dev[p] > 0.0)
        result.t_ratio[p] = mean_dev[p] / sd_dev[p];
      else
        result.t_ratio[p] = mean_dev[p] == 0.0 ? 0.0 : std::copysign(1e6, mean_dev[p]);
    }

    // Overall maximum convergence ratio: worst standardized deviation over
    // all linear combinations of the free statistics.
    Eigen::VectorXd dev_free(n_free);
    for (int k = 0; k < n_free; ++k) dev_free(k) = mean_dev[free[k]];
    Eigen::MatrixXd sigma_reg = sigma;
    sigma_reg.diagonal().array() += 1e-10 + 1e-8 * sigma.diagonal().mean();
    result.max_convergence_ratio =
        std::sqrt(std::max(0.0, dev_free.dot(sigma_reg.ldlt().solve(dev_free))));

    const auto d3 = fd_derivative(din, theta, options.phase3_derivative_runs,
                                  stream3, sims);
    Eigen::MatrixXd d3_free = free_square(d3, free);
    Eigen::FullPivLU<Eigen::MatrixXd> lu3(d3_free);
    check_invertible(lu3);
    const Eigen::MatrixXd dinv = lu3.inverse();
    const Eigen::MatrixXd cov = dinv * sigma * dinv.transpose();

    result.theta = theta;
    result.covariance.assign(static_cast<std::size_t>(dim) * dim, 0.0);
    result.se.assign(dim, kNaN);
    for (int r = 0; r < n_free; ++r) {
      for (int c = 0; c < n_free; ++c)
        result.covariance[static_cast<std::size_t>(free[r]) * dim + free[c]] =
            cov(r, c);
      result.se[free[r]] = std::sqrt(std::max(0.0, cov(r, r)));
    }

    bool ok = result.max_convergence_ratio < options.convergence_ratio_threshold;
    for (int k = 0; k < n_free && ok; ++k)
      if (std::abs(result.t_ratio[free[k]]) >= options.convergence_t_threshold)
        ok = false;
    result.converged = ok;
    result.retries_used = attempt;

    if (ok || attempt >= options.max_retries) break;
    d_next = d3_free;
    have_d_next = true;
  }

  result.wald_z.assign(dim, kNaN);
  result.wald_p.assign(dim, kNaN);
  for (int p = 0; p < dim; ++p) {
    if (result.fixed[p] || !(result.se[p] > 0.0)) continue;
    result.wald_z[p] = result.theta[p] / result.se[p];
    result.wald_p[p] = 2.0 * (1.0 - norm_cdf(std::abs(result.wald_z[p])));
  }
  if (!result.converged)
    result.warnings.push_back("estimation did not converge after " +
                              std::to_string(result.retries_used) + " retries");

  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  return result;
}

EstimationResult estimate(const PanelData& panel, const ModelSpec& model,
                          const EstimationOptions& options) {
  return estimate(std::span<const PanelData>(&panel, 1), model, options);
}

std::optional<WaldTest> wald_test(const EstimationResult& result,
                                  const std::string& parameter, double alpha) {
  if (!result.converged) return std::nullopt;
  const int idx = result.index_of(parameter);
  if (!(result.se[idx] > 0.0)) return std::nullopt;
  WaldTest t;
  t.z = result.theta[idx] / result.se[idx];
  t.p = 2.0 * (1.0 - norm_cdf(std::abs(t.z)));
  t.reject = t.p < alpha;
  return t;
}

}  // namespace saom
