#include "saompower/perturb.hpp"

#include <algorithm>

namespace saom {

PanelData subsample_panel(const PanelData& panel, std::span<const int> actors,
                          std::span<const int> waves) {
  if (actors.empty()) throw ConfigError("subsample: actor subset is empty");
  if (waves.size() < 2) throw ConfigError("subsample: need at least two waves");
  for (std::size_t w = 0; w < waves.size(); ++w)
    if (waves[w] != static_cast<int>(w))
      throw ConfigError(
          "subsample: wave subset must be contiguous from the first wave");
  if (static_cast<int>(waves.size()) > panel.wave_count())
    throw ConfigError("subsample: wave subset exceeds panel");

  const int n_old = panel.n();
  std::vector<int> map_old_to_new(n_old, -1);
  for (std::size_t k = 0; k < actors.size(); ++k) {
    const int a = actors[k];
    if (a < 0 || a >= n_old) throw ConfigError("subsample: actor out of range");
    if (map_old_to_new[a] != -1) throw ConfigError("subsample: duplicate actor");
    map_old_to_new[a] = static_cast<int>(k);
  }
  const int n_new = static_cast<int>(actors.size());

  PanelData out;
  out.group_id = panel.group_id;
  for (int w = 0; w < static_cast<int>(waves.size()); ++w) {
    const Wave& src = panel.waves[w];
    Wave dst;
    dst.net = NetworkState(n_new);
    for (int i = 0; i < n_new; ++i)
      for (int j = 0; j < n_new; ++j)
        if (i != j && src.net.tie(actors[i], actors[j]))
          dst.net.set_tie(i, j, true);
    dst.beh = BehaviorState(n_new, src.beh.scale, src.beh.scale.zmin);
    for (int i = 0; i < n_new; ++i) dst.beh.values[i] = src.beh.values[actors[i]];
    if (!src.missing.empty()) {
      dst.missing.resize(n_new);
      for (int i = 0; i < n_new; ++i) dst.missing[i] = src.missing[actors[i]];
    }
    out.waves.push_back(std::move(dst));
  }

  for (const auto& [name, v] : panel.covariates.actor) {
    std::vector<double> nv(n_new);
    for (int i = 0; i < n_new; ++i) nv[i] = v[actors[i]];
    out.covariates.actor[name] = std::move(nv);
  }
  for (const auto& [name, m] : panel.covariates.dyadic) {
    std::vector<double> nm(static_cast<std::size_t>(n_new) * n_new, 0.0);
    for (int i = 0; i < n_new; ++i)
      for (int j = 0; j < n_new; ++j)
        nm[static_cast<std::size_t>(i) * n_new + j] =
            m[static_cast<std::size_t>(actors[i]) * n_old + actors[j]];
    out.covariates.dyadic[name] = std::move(nm);
  }

  const int new_periods = static_cast<int>(waves.size()) - 1;
  for (const auto& ev : panel.composition) {
    if (ev.period >= new_periods) continue;
    CompositionEvent nev;
    nev.period = ev.period;
    nev.time = ev.time;
    for (int l : ev.leavers)
      if (map_old_to_new[l] != -1) nev.leavers.push_back(map_old_to_new[l]);
    for (const auto& j : ev.joiners)
      if (map_old_to_new[j.actor] != -1) {
        Joiner nj = j;
        nj.actor = map_old_to_new[j.actor];
        nev.joiners.push_back(std::move(nj));
      }
    if (!nev.leavers.empty() || !nev.joiners.empty())
      out.composition.push_back(std::move(nev));
  }
  return out;
}

PanelData inject_mcar(const PanelData& panel, const MissingPolicy& policy,
                      Rng& rng) {
  if (policy.per_group_count < 0) throw ConfigError("negative missing count");
  PanelData out = panel;
  if (policy.per_group_count == 0) return out;
  for (int w = 0; w < out.wave_count(); ++w) {
    std::vector<int> present;
    for (int i = 0; i < out.n(); ++i)
      if (out.present_at_wave(i, w)) present.push_back(i);
    if (policy.per_group_count > static_cast<int>(present.size()))
      throw ConfigError("missing count exceeds group size");
    auto& mask = out.waves[w].missing;
    if (mask.empty()) mask.assign(out.n(), 0);
    const auto picked = rng.sample_without_replacement(
        static_cast<int>(present.size()), policy.per_group_count);
    for (int p : picked) mask[present[p]] = 1;
  }
  return out;
}

AttributeFrequencyTable AttributeFrequencyTable::from_wave1(
    const PanelData& panel, const std::string& gender_covariate) {
  AttributeFrequencyTable table;
  const auto& gender = panel.covariates.actor_covariate(gender_covariate);
  const auto& wave = panel.waves.front();
  for (int i = 0; i < panel.n(); ++i) {
    if (!panel.present_at_wave(i, 0)) continue;
    table.entries.emplace_back(gender[i], wave.beh.values[i]);
  }
  if (table.entries.empty())
    throw ConfigError("attribute frequency table would be empty");
  return table;
}

std::vector<CompositionEvent> build_turnover_schedule(
    int n_base, int periods, const TurnoverPolicy& policy,
    const AttributeFrequencyTable& table, Rng& rng) {
  if (policy.per_group_count >= n_base)
    throw ConfigError("turnover count must stay below the group size");
  if (policy.time <= 0.0 || policy.time >= 1.0)
    throw ConfigError("turnover time must lie strictly inside (0,1)");
  std::vector<CompositionEvent> events;
  if (policy.per_group_count == 0) return events;

  std::vector<int> pool;  // actors present going into the period
  for (int i = 0; i < n_base; ++i) pool.push_back(i);
  int next_slot = n_base;
  for (int m = 0; m < periods; ++m) {
    CompositionEvent ev;
    ev.period = m;
    ev.time = policy.time;
    const auto picked = rng.sample_without_replacement(
        static_cast<int>(pool.size()), policy.per_group_count);
    std::vector<int> picked_sorted(picked.begin(), picked.end());
    std::sort(picked_sorted.begin(), picked_sorted.end(), std::greater<>());
    for (int p : picked_sorted) {
      ev.leavers.push_back(pool[p]);
      pool.erase(pool.begin() + p);
    }
    std::sort(ev.leavers.begin(), ev.leavers.end());
    for (int c = 0; c < policy.per_group_count; ++c) {
      const auto& [gender, behavior] =
          table.entries[rng.uniform_int(static_cast<int>(table.entries.size()))];
      Joiner j;
      j.actor = next_slot++;
      j.behavior = behavior;
      j.covariates["gender"] = gender;
      pool.push_back(j.actor);
      ev.joiners.push_back(std::move(j));
    }
    events.push_back(std::move(ev));
  }
  return events;
}

PanelData widen_for_joiners(const NetworkState& net, const BehaviorState& beh,
                            const CovariateSet& covs,
                            std::span<const CompositionEvent> composition,
                            const std::string& gender_covariate,
                            const std::string& group_id) {
  int n_total = net.size();
  for (const auto& ev : composition)
    for (const auto& j : ev.joiners) n_total = std::max(n_total, j.actor + 1);

  PanelData panel;
  panel.group_id = group_id;
  panel.composition.assign(composition.begin(), composition.end());

  Wave w0;
  w0.net = NetworkState(n_total);
  for (int i = 0; i < net.size(); ++i)
    net.for_each_out(i, [&](int j) { w0.net.set_tie(i, j, true); });
  w0.beh = BehaviorState(n_total, beh.scale, beh.scale.zmin);
  std::copy(beh.values.begin(), beh.values.end(), w0.beh.values.begin());

  panel.covariates = covs;
  for (auto& [name, v] : panel.covariates.actor) v.resize(n_total, 0.0);
  for (auto& [name, m] : panel.covariates.dyadic) {
    std::vector<double> widened(static_cast<std::size_t>(n_total) * n_total, 0.0);
    for (int i = 0; i < net.size(); ++i)
      for (int j = 0; j < net.size(); ++j)
        widened[static_cast<std::size_t>(i) * n_total + j] =
            m[static_cast<std::size_t>(i) * net.size() + j];
    m = std::move(widened);
  }
  for (const auto& ev : panel.composition)
    for (const auto& j : ev.joiners) {
      w0.beh.values[j.actor] = j.behavior;  // placeholder until the join time
      for (const auto& [name, value] : j.covariates) {
        auto it = panel.covariates.actor.find(name);
        if (it != panel.covariates.actor.end()) it->second[j.actor] = value;
      }
    }
  (void)gender_covariate;
  panel.waves.push_back(std::move(w0));
  return panel;
}

}  // namespace saom
