#include "saompower/types.hpp"

#include <algorithm>
#include <cmath>

namespace saom {

const char* effect_name(EffectKind kind) {
  switch (kind) {
    case EffectKind::rate: return "rate";
    case EffectKind::density: return "density";
    case EffectKind::recip: return "recip";
    case EffectKind::trans_trip: return "transTrip";
    case EffectKind::cycle3: return "cycle3";
    case EffectKind::trans_rec_trip: return "transRecTrip";
    case EffectKind::dyad_x: return "dyadX";
    case EffectKind::same_x: return "sameX";
    case EffectKind::sim_x: return "simX";
    case EffectKind::linear: return "linear";
    case EffectKind::quad: return "quad";
    case EffectKind::tot_sim: return "totSim";
    case EffectKind::av_alt: return "avAlt";
  }
  return "?";
}

EffectKind effect_from_name(const std::string& name) {
  static const std::map<std::string, EffectKind> table = {
      {"rate", EffectKind::rate},
      {"density", EffectKind::density},
      {"recip", EffectKind::recip},
      {"transTrip", EffectKind::trans_trip},
      {"cycle3", EffectKind::cycle3},
      {"transRecTrip", EffectKind::trans_rec_trip},
      {"dyadX", EffectKind::dyad_x},
      {"sameX", EffectKind::same_x},
      {"simX", EffectKind::sim_x},
      {"linear", EffectKind::linear},
      {"quad", EffectKind::quad},
      {"totSim", EffectKind::tot_sim},
      {"avAlt", EffectKind::av_alt},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ConfigError("unknown effect name '" + name + "'");
  return it->second;
}

bool is_network_effect(EffectKind kind) {
  switch (kind) {
    case EffectKind::rate:
    case EffectKind::density:
    case EffectKind::recip:
    case EffectKind::trans_trip:
    case EffectKind::cycle3:
    case EffectKind::trans_rec_trip:
    case EffectKind::dyad_x:
    case EffectKind::same_x:
    case EffectKind::sim_x:
      return true;
    default:
      return false;
  }
}

bool is_behavior_effect(EffectKind kind) {
  switch (kind) {
    case EffectKind::rate:
    case EffectKind::linear:
    case EffectKind::quad:
    case EffectKind::tot_sim:
    case EffectKind::av_alt:
      return true;
    default:
      return false;
  }
}

bool effect_needs_covariate(EffectKind kind) {
  return kind == EffectKind::dyad_x || kind == EffectKind::same_x;
}

void ModelSpec::validate() const {
  auto check_unique = [](const std::vector<EffectSpec>& effects,
                         const char* side) {
    for (std::size_t a = 0; a < effects.size(); ++a)
      for (std::size_t b = a + 1; b < effects.size(); ++b)
        if (effects[a].kind == effects[b].kind)
          throw ConfigError(std::string("duplicate ") + side + " effect '" +
                            effect_name(effects[a].kind) + "'");
  };
  check_unique(network_effects, "network");
  check_unique(behavior_effects, "behavior");
  for (const auto& e : network_effects) {
    if (e.kind == EffectKind::rate)
      throw ConfigError("rate is configured per period, not as an effect");
    if (!is_network_effect(e.kind))
      throw ConfigError(std::string("effect '") + effect_name(e.kind) +
                        "' is not a tie sub-model effect");
    if (effect_needs_covariate(e.kind) && e.covariate.empty())
      throw ConfigError(std::string("effect '") + effect_name(e.kind) +
                        "' requires a covariate name");
  }
  for (const auto& e : behavior_effects) {
    if (e.kind == EffectKind::rate)
      throw ConfigError("rate is configured per period, not as an effect");
    if (!is_behavior_effect(e.kind))
      throw ConfigError(std::string("effect '") + effect_name(e.kind) +
                        "' is not a behavior sub-model effect");
  }
  if (network_rate.size() != behavior_rate.size())
    throw ConfigError("network_rate and behavior_rate must cover the same periods");
  for (double r : network_rate)
    if (r < 0.0 || !std::isfinite(r)) throw ConfigError("network rate must be >= 0");
  for (double r : behavior_rate)
    if (r < 0.0 || !std::isfinite(r)) throw ConfigError("behavior rate must be >= 0");
  if (!std::isfinite(centering.behavior_mean) ||
      !std::isfinite(centering.similarity_mean) ||
      centering.similarity_mean < 0.0 || centering.similarity_mean > 1.0)
    throw ConfigError("centering constants out of range");
}

bool PanelData::present_at_wave(int actor, int w) const {
  for (const auto& ev : composition) {
    for (const auto& j : ev.joiners)
      if (j.actor == actor) return w > ev.period;
    for (int l : ev.leavers)
      if (l == actor) return w <= ev.period;
  }
  return true;
}

bool PanelData::included_in_period(int actor, int m) const {
  if (!present_at_wave(actor, m) || !present_at_wave(actor, m + 1)) return false;
  if (waves[m].missing.size() > static_cast<std::size_t>(actor) &&
      waves[m].missing[actor])
    return false;
  if (waves[m + 1].missing.size() > static_cast<std::size_t>(actor) &&
      waves[m + 1].missing[actor])
    return false;
  return true;
}

void PanelData::validate() const {
  if (waves.empty()) throw ConfigError("panel has no waves");
  const int nn = n();
  for (const auto& w : waves) {
    if (w.net.size() != nn) throw ConfigError("waves differ in actor count");
    if (w.beh.size() != nn) throw ConfigError("behavior vector length mismatch");
    w.beh.validate();
    if (!w.missing.empty() && static_cast<int>(w.missing.size()) != nn)
      throw ConfigError("missing mask length mismatch");
  }
  covariates.validate(nn);
  for (const auto& ev : composition) {
    if (ev.period < 0 || ev.period >= period_count())
      throw ConfigError("composition event outside panel periods");
    if (ev.time <= 0.0 || ev.time >= 1.0)
      throw ConfigError("composition event time must lie strictly inside (0,1)");
    if (ev.leavers.size() != ev.joiners.size())
      throw ConfigError("composition event must keep group size constant");
  }
}

Centering compute_centering(std::span<const PanelData> panels) {
  Centering c;
  double z_sum = 0.0;
  long z_count = 0;
  double sim_sum = 0.0;
  long sim_count = 0;
  for (const auto& panel : panels) {
    if (panel.waves.empty()) continue;
    const auto& wave = panel.waves.front();
    const int n = panel.n();
    const double width = wave.beh.scale.width();
    std::vector<int> observed;
    observed.reserve(n);
    for (int i = 0; i < n; ++i) {
      const bool missing = !wave.missing.empty() && wave.missing[i];
      if (panel.present_at_wave(i, 0) && !missing) observed.push_back(i);
    }
    for (int i : observed) z_sum += wave.beh.values[i];
    z_count += static_cast<long>(observed.size());
    for (int i : observed)
      for (int j : observed) {
        if (i == j) continue;
        sim_sum += 1.0 - std::abs(wave.beh.values[i] - wave.beh.values[j]) / width;
        ++sim_count;
      }
  }
  c.behavior_mean = z_count > 0 ? z_sum / z_count : 0.0;
  c.similarity_mean = sim_count > 0 ? sim_sum / sim_count : 0.0;
  return c;
}

}  // namespace saom
