#pragma once

// Seeded synthetic playthroughs standing in for real cohort telemetry.
//
// Three strategy archetypes:
//   deliberate  focused actions with full effect, long turns, votes trend up
//   hurried     short turns, weak actions, votes stay near flat
//   scattered   actions in uniformly random districts, medium turns

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinetiq/color.hpp"
#include "kinetiq/game_data.hpp"

namespace kinetiq {

enum class Strategy { deliberate, hurried, scattered };

inline constexpr std::array<Strategy, 3> kStrategies{Strategy::deliberate, Strategy::hurried,
                                                      Strategy::scattered};

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::deliberate: return "deliberate";
    case Strategy::hurried: return "hurried";
    case Strategy::scattered: return "scattered";
  }
  return "?";
}

struct SimConfig {
  std::uint64_t seed{0};
  int n_players{100};
  int n_turns{10};
  int n_districts{4};
  int level{1};
  std::map<Strategy, double> strategy_mix{{Strategy::deliberate, 0.5},
                                          {Strategy::hurried, 0.25},
                                          {Strategy::scattered, 0.25}};

  void validate() const {
    if (n_players < 1 || n_turns < 1 || n_districts < 1) throw std::invalid_argument("counts must be >= 1");
    if (level < 1) throw std::invalid_argument("level must be >= 1");
    double sum = 0.0;
    for (const auto& [s, w] : strategy_mix) {
      if (!(w >= 0.0)) throw std::invalid_argument("strategy weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("strategy weights must sum to 1");
  }
};

/// Actions available in every synthetic level.
inline const std::vector<std::string>& synthetic_actions() {
  static const std::vector<std::string> names{"fundraiser", "grassroots", "rally", "voter_drive"};
  return names;
}

struct LabeledDataset {
  Dataset dataset;
  std::vector<Strategy> strategies;  // one per playthrough
};

namespace detail {

// std distributions are implementation-defined; these draw from the raw
// mt19937_64 stream so output is identical across standard libraries.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int index(int n) { return static_cast<int>(uniform() * n) % n; }

  double normal(double mean, double sd) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

/// Rounds to `places` decimals, landing on the double nearest the decimal.
inline double round_to(double v, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(v * scale) / scale;
}

struct Shares {
  double unregistered, undecided, for_share, against_share;
};

inline void move_share(double& from, double& to, double amount) {
  amount = std::min(amount, from);
  from -= amount;
  to += amount;
}

struct StrategyProfile {
  double effect;          // multiplier on action effects
  double duration_mean;   // seconds per turn
  double duration_sd;
  double drift_sd;        // noise on shares per turn
  bool focused;           // picks the most promising district
};

inline StrategyProfile profile(Strategy s) {
  switch (s) {
    case Strategy::deliberate: return {1.0, 45.0, 10.0, 0.002, true};
    case Strategy::hurried: return {0.15, 12.0, 4.0, 0.004, false};
    case Strategy::scattered: return {0.6, 28.0, 9.0, 0.006, false};
  }
  return {};
}

/// Cohort sizes by largest remainder over the weights, then a seeded
/// Fisher-Yates shuffle of the labels.
inline std::vector<Strategy> assign_strategies(const SimConfig& config, SimRng& rng) {
  struct Quota {
    Strategy s;
    int count;
    double remainder;
  };
  std::vector<Quota> quotas;
  int assigned = 0;
  for (auto s : kStrategies) {
    auto it = config.strategy_mix.find(s);
    const double exact = (it == config.strategy_mix.end() ? 0.0 : it->second) * config.n_players;
    const int whole = static_cast<int>(std::floor(exact + 1e-9));
    quotas.push_back({s, whole, exact - whole});
    assigned += whole;
  }
  std::vector<std::size_t> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t i = 0; assigned < config.n_players; i = (i + 1) % order.size(), ++assigned)
    ++quotas[order[i]].count;

  std::vector<Strategy> labels;
  for (const auto& q : quotas) labels.insert(labels.end(), static_cast<std::size_t>(q.count), q.s);
  for (std::size_t i = labels.size(); i > 1; --i)
    std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng.index(static_cast<int>(i)))]);
  return labels;
}

}  // namespace detail

/// Generates a dataset together with each player's archetype.
/// A pure function of `config`.
inline LabeledDataset generate_synthetic_labeled(const SimConfig& config) {
  config.validate();
  detail::SimRng rng(config.seed);
  const auto& actions = synthetic_actions();

  // Level layout shared by every player.
  struct Layout {
    std::int64_t population;
    double favorability;
    detail::Shares shares;
  };
  std::vector<Layout> layout;
  for (int d = 0; d < config.n_districts; ++d) {
    Layout l;
    l.population = 2000 + static_cast<std::int64_t>(rng.uniform() * 8000.0);
    l.favorability = rng.uniform(30.0, 60.0);
    double w[4] = {rng.uniform(0.1, 1.0), rng.uniform(0.5, 1.5), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)};
    double sum = w[0] + w[1] + w[2] + w[3];
    l.shares = {w[0] / sum, w[1] / sum, w[2] / sum, w[3] / sum};
    layout.push_back(l);
  }

  const std::vector<Strategy> assignment = detail::assign_strategies(config, rng);
  LabeledDataset out;
  for (int p = 0; p < config.n_players; ++p) {
    const Strategy strat = assignment[p];
    const auto prof = detail::profile(strat);

    Playthrough pt;
    char id[16];
    std::snprintf(id, sizeof id, "p%04d", p + 1);
    pt.player_id = id;
    pt.level = config.level;

    std::vector<Layout> state = layout;
    double budget = 1000.0;
    for (int t = 0; t < config.n_turns; ++t) {
      // choose 1-2 actions
      int n_actions = 1 + (rng.uniform() < 0.4 ? 1 : 0);
      std::map<int, std::map<std::string, int>> taken;
      for (int k = 0; k < n_actions; ++k) {
        int district;
        if (prof.focused) {
          // district with the largest persuadable share
          district = 0;
          double best = -1.0;
          for (int d = 0; d < config.n_districts; ++d) {
            double score = state[d].shares.undecided + state[d].shares.against_share +
                           0.05 * rng.uniform();
            if (score > best) {
              best = score;
              district = d;
            }
          }
        } else {
          district = rng.index(config.n_districts);
        }
        const std::string& action = actions[rng.index(static_cast<int>(actions.size()))];
        taken[district][action] = 1;
        auto& st = state[district];
        const double e = prof.effect;
        if (action == "rally") {
          budget -= 250.0;
          st.favorability += 6.0 * e;
          detail::move_share(st.shares.undecided, st.shares.for_share, 0.05 * e);
        } else if (action == "grassroots") {
          budget -= 100.0;
          detail::move_share(st.shares.undecided, st.shares.for_share, 0.04 * e);
          detail::move_share(st.shares.against_share, st.shares.undecided, 0.02 * e);
        } else if (action == "fundraiser") {
          budget += 200.0 * (0.5 + e);
        } else {
          budget -= 150.0;
          detail::move_share(st.shares.unregistered, st.shares.undecided, 0.05 * e);
        }
      }
      budget = std::max(0.0, budget + 100.0);

      TurnRecord tr;
      tr.turn_index = t;
      tr.budget = detail::round_to(budget, 2);
      tr.duration_s = detail::round_to(std::max(1.0, rng.normal(prof.duration_mean, prof.duration_sd)), 1);
      double votes = 0.0;
      for (int d = 0; d < config.n_districts; ++d) {
        auto& st = state[d];
        // small opinion drift toward undecided
        double drift = std::abs(rng.normal(0.0, prof.drift_sd));
        detail::move_share(st.shares.for_share, st.shares.undecided, drift);
        st.favorability = std::clamp(st.favorability + rng.normal(0.0, 0.5), 0.0, 100.0);

        DistrictState ds;
        ds.district_id = d + 1;
        ds.population = st.population;
        ds.favorability = detail::round_to(st.favorability, 2);
        ds.unregistered = clamp01(detail::round_to(st.shares.unregistered, 4));
        ds.undecided = clamp01(detail::round_to(st.shares.undecided, 4));
        ds.for_share = clamp01(detail::round_to(st.shares.for_share, 4));
        ds.against_share = clamp01(detail::round_to(st.shares.against_share, 4));
        for (const auto& a : actions) ds.actions[a] = 0;
        if (auto it = taken.find(d); it != taken.end())
          for (const auto& [a, flag] : it->second) ds.actions[a] = flag;
        votes += static_cast<double>(st.population) * st.shares.for_share;
        tr.districts.push_back(std::move(ds));
      }
      tr.total_votes = static_cast<std::int64_t>(std::llround(votes));
      pt.turns.push_back(std::move(tr));
    }
    out.dataset.playthroughs.push_back(std::move(pt));
    out.strategies.push_back(strat);
  }
  finalize_dataset(out.dataset);
  return out;
}

inline Dataset generate_synthetic(const SimConfig& config) {
  return generate_synthetic_labeled(config).dataset;
}

}  // namespace kinetiq
