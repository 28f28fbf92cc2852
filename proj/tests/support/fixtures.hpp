#pragma once

// Hand-built datasets for example tests.

#include <string>
#include <vector>

#include "kinetiq/kinetiq.hpp"

namespace fixtures {

inline kinetiq::DistrictState district(int id, std::map<std::string, int> actions = {}) {
  kinetiq::DistrictState d;
  d.district_id = id;
  d.population = 1000 * id;
  d.favorability = 10.0 * id;
  d.unregistered = 0.1;
  d.undecided = 0.2;
  d.for_share = 0.4;
  d.against_share = 0.3;
  d.actions = std::move(actions);
  return d;
}

/// Every district carries every action in `vocab`, flagged 0.
inline kinetiq::TurnRecord turn(int index, std::int64_t votes, double budget, double duration, int n_districts = 4,
                                const std::vector<std::string>& vocab = {"fundraiser", "rally"}) {
  kinetiq::TurnRecord tr;
  tr.turn_index = index;
  tr.total_votes = votes;
  tr.budget = budget;
  tr.duration_s = duration;
  for (int d = 1; d <= n_districts; ++d) {
    std::map<std::string, int> acts;
    for (const auto& a : vocab) acts[a] = 0;
    tr.districts.push_back(district(d, acts));
  }
  return tr;
}

inline kinetiq::Dataset finalize(kinetiq::Dataset ds) {
  kinetiq::finalize_dataset(ds);
  return ds;
}

/// `players` x `turns` with distinct budgets and durations.
inline kinetiq::Dataset grid(int players, int turns, int n_districts = 4) {
  kinetiq::Dataset ds;
  for (int p = 0; p < players; ++p) {
    kinetiq::Playthrough pt;
    pt.player_id = "p" + std::to_string(p);
    for (int t = 0; t < turns; ++t) pt.turns.push_back(turn(t, 10 * (t + p), 100.0 + 50 * t + p, 10.0 + t, n_districts));
    ds.playthroughs.push_back(pt);
  }
  return finalize(ds);
}

}  // namespace fixtures
