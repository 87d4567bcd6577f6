#pragma once
// Core state types for actor-oriented network/behavior panels.

#include <bit>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace saom {

// Thrown for malformed configuration / inconsistent inputs (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a simulation degenerates or a tuning loop fails (CLI exit code 3).
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for unrecoverable estimation failures, e.g. a singular derivative
// matrix. Plain non-convergence is NOT an error; it is reported in the result.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Directed binary adjacency matrix with a structurally zero diagonal.
/// Rows (outgoing ties) and columns (incoming ties) are both kept as packed
/// bitsets so that neighborhood intersections are cheap in the ministep loop.
class NetworkState {
 public:
  NetworkState() = default;
  explicit NetworkState(int n)
      : n_(n),
        words_(n <= 0 ? 0 : (n + 63) / 64),
        rows_(static_cast<std::size_t>(n_) * words_, 0),
        cols_(static_cast<std::size_t>(n_) * words_, 0),
        out_deg_(n_, 0),
        in_deg_(n_, 0) {
    if (n < 0) throw ConfigError("NetworkState: negative actor count");
  }

  int size() const { return n_; }
  int words_per_row() const { return words_; }

  bool tie(int i, int j) const {
    return (rows_[row_offset(i) + static_cast<std::size_t>(j >> 6)] >>
            (j & 63)) & 1u;
  }

  void set_tie(int i, int j, bool value) {
    if (i == j) throw ConfigError("NetworkState: self-tie is structurally zero");
    const std::uint64_t rbit = std::uint64_t{1} << (j & 63);
    std::uint64_t& rword = rows_[row_offset(i) + static_cast<std::size_t>(j >> 6)];
    const bool present = rword & rbit;
    if (present == value) return;
    const std::uint64_t cbit = std::uint64_t{1} << (i & 63);
    std::uint64_t& cword = cols_[row_offset(j) + static_cast<std::size_t>(i >> 6)];
    if (value) {
      rword |= rbit;
      cword |= cbit;
      ++out_deg_[i];
      ++in_deg_[j];
      ++tie_count_;
    } else {
      rword &= ~rbit;
      cword &= ~cbit;
      --out_deg_[i];
      --in_deg_[j];
      --tie_count_;
    }
  }

  void toggle(int i, int j) { set_tie(i, j, !tie(i, j)); }

  int out_degree(int i) const { return out_deg_[i]; }
  int in_degree(int i) const { return in_deg_[i]; }
  int tie_count() const { return tie_count_; }

  double density() const {
    return n_ > 1 ? static_cast<double>(tie_count_) /
                        (static_cast<double>(n_) * (n_ - 1))
                  : 0.0;
  }

  std::span<const std::uint64_t> out_row(int i) const {
    return {rows_.data() + row_offset(i), static_cast<std::size_t>(words_)};
  }
  std::span<const std::uint64_t> in_col(int j) const {
    return {cols_.data() + row_offset(j), static_cast<std::size_t>(words_)};
  }

  template <typename Fn>
  void for_each_out(int i, Fn&& fn) const {
    const std::uint64_t* row = rows_.data() + row_offset(i);
    for (int w = 0; w < words_; ++w) {
      std::uint64_t bits = row[w];
      while (bits) {
        const int b = std::countr_zero(bits);
        fn(w * 64 + b);
        bits &= bits - 1;
      }
    }
  }

  /// Zeroes row i and column i (used when an actor is outside the
  /// observation window).
  void clear_actor(int i) {
    for (int j = 0; j < n_; ++j) {
      if (j == i) continue;
      if (tie(i, j)) set_tie(i, j, false);
      if (tie(j, i)) set_tie(j, i, false);
    }
  }

  /// Number of tie variables differing between two equally sized networks.
  int hamming(const NetworkState& other) const {
    int d = 0;
    for (std::size_t w = 0; w < rows_.size(); ++w)
      d += std::popcount(rows_[w] ^ other.rows_[w]);
    return d;
  }

  bool operator==(const NetworkState& other) const {
    return n_ == other.n_ && rows_ == other.rows_;
  }

 private:
  std::size_t row_offset(int i) const {
    return static_cast<std::size_t>(i) * words_;
  }

  int n_ = 0;
  int words_ = 0;
  std::vector<std::uint64_t> rows_;
  std::vector<std::uint64_t> cols_;
  std::vector<int> out_deg_;
  std::vector<int> in_deg_;
  int tie_count_ = 0;
};

/// Inclusive integer scale of a behavior variable.
struct BehaviorScale {
  int zmin = 0;
  int zmax = 1;
  int width() const { return zmax - zmin; }
};

struct BehaviorState {
  BehaviorScale scale;
  std::vector<int> values;

  BehaviorState() = default;
  BehaviorState(int n, BehaviorScale s, int fill) : scale(s), values(n, fill) {}

  int size() const { return static_cast<int>(values.size()); }

  void validate() const {
    if (scale.width() < 1)
      throw ConfigError("BehaviorState: scale width must be >= 1");
    for (int v : values)
      if (v < scale.zmin || v > scale.zmax)
        throw ConfigError("BehaviorState: value outside scale");
  }

  bool operator==(const BehaviorState&) const = default;
};

/// Named actor-level vectors and dyadic matrices (row-major, n x n).
class CovariateSet {
 public:
  std::map<std::string, std::vector<double>> actor;
  std::map<std::string, std::vector<double>> dyadic;

  const std::vector<double>& actor_covariate(const std::string& name) const {
    auto it = actor.find(name);
    if (it == actor.end())
      throw ConfigError("unknown actor covariate '" + name + "'");
    return it->second;
  }

  const std::vector<double>& dyadic_covariate(const std::string& name) const {
    auto it = dyadic.find(name);
    if (it == dyadic.end())
      throw ConfigError("unknown dyadic covariate '" + name + "'");
    return it->second;
  }

  bool has_actor(const std::string& name) const { return actor.count(name) > 0; }
  bool has_dyadic(const std::string& name) const { return dyadic.count(name) > 0; }

  void validate(int n) const {
    for (const auto& [name, v] : actor)
      if (static_cast<int>(v.size()) != n)
        throw ConfigError("actor covariate '" + name + "' has wrong length");
    for (const auto& [name, m] : dyadic)
      if (static_cast<int>(m.size()) != n * n)
        throw ConfigError("dyadic covariate '" + name + "' has wrong size");
  }

  bool operator==(const CovariateSet&) const = default;
};

enum class EffectKind {
  rate,
  density,
  recip,
  trans_trip,
  cycle3,
  trans_rec_trip,
  dyad_x,
  same_x,
  sim_x,
  linear,
  quad,
  tot_sim,
  av_alt,
};

const char* effect_name(EffectKind kind);
EffectKind effect_from_name(const std::string& name);
bool is_network_effect(EffectKind kind);   // valid in the tie sub-model
bool is_behavior_effect(EffectKind kind);  // valid in the behavior sub-model
bool effect_needs_covariate(EffectKind kind);

struct EffectSpec {
  EffectKind kind = EffectKind::density;
  std::string covariate;  // for dyad_x / same_x
  double parameter = 0.0;

  bool operator==(const EffectSpec&) const = default;
};

/// Centering constants shared between simulation and estimation; computed
/// from the first observed wave.
struct Centering {
  double behavior_mean = 0.0;
  double similarity_mean = 0.0;  // mean of sim_ij over ordered pairs, in [0,1]
};

/// Full model parameterization: evaluation effects for both sub-models plus
/// per-period rates.
struct ModelSpec {
  std::vector<EffectSpec> network_effects;
  std::vector<EffectSpec> behavior_effects;
  std::vector<double> network_rate;   // one per period
  std::vector<double> behavior_rate;  // one per period
  Centering centering;

  int periods() const { return static_cast<int>(network_rate.size()); }

  const EffectSpec* find_network(EffectKind kind) const {
    for (const auto& e : network_effects)
      if (e.kind == kind) return &e;
    return nullptr;
  }
  const EffectSpec* find_behavior(EffectKind kind) const {
    for (const auto& e : behavior_effects)
      if (e.kind == kind) return &e;
    return nullptr;
  }

  void validate() const;
};

struct Joiner {
  int actor = -1;
  int behavior = 0;
  std::map<std::string, double> covariates;

  bool operator==(const Joiner&) const = default;
};

/// One composition-change event: at fraction `time` of period `period`,
/// `leavers` are frozen out and `joiners` enter as isolates.
struct CompositionEvent {
  int period = 0;
  double time = 0.5;  // strictly inside (0,1)
  std::vector<int> leavers;
  std::vector<Joiner> joiners;

  bool operator==(const CompositionEvent&) const = default;
};

struct Wave {
  NetworkState net;
  BehaviorState beh;
  std::vector<std::uint8_t> missing;  // row-wise: actor's report absent

  bool operator==(const Wave&) const = default;
};

/// An observed or simulated panel for one group: wave snapshots, covariates,
/// missingness masks and the composition schedule.
struct PanelData {
  std::vector<Wave> waves;
  CovariateSet covariates;
  std::vector<CompositionEvent> composition;
  std::string group_id;

  int n() const { return waves.empty() ? 0 : waves.front().net.size(); }
  int wave_count() const { return static_cast<int>(waves.size()); }
  int period_count() const { return wave_count() - 1; }

  /// Wave index w: joiners of an event in period p are present from wave
  /// p+1 on; leavers are present up to and including wave p.
  bool present_at_wave(int actor, int w) const;

  /// True if the actor's data enter the moment sums of period m: present
  /// and non-missing at both endpoints.
  bool included_in_period(int actor, int m) const;

  void validate() const;

  bool operator==(const PanelData&) const = default;
};

/// Computes wave-1 centering constants: mean behavior and mean pairwise
/// similarity over ordered pairs, pooled over groups.
Centering compute_centering(std::span<const PanelData> panels);

}  // namespace saom
