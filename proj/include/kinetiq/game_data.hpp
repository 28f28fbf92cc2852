#pragma once

// Game-telemetry data model and its native JSON Lines form.

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace kinetiq {

/// Raised for any dataset that cannot be ingested. `line` is 1-based, or 0
/// when the problem is not tied to a single input line.
class DataError : public std::runtime_error {
 public:
  DataError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct DistrictState {
  int district_id{1};
  std::int64_t population{0};
  double favorability{0.0};  // raw, scale unknown
  double unregistered{0.0};
  double undecided{0.0};
  double for_share{0.0};
  double against_share{0.0};
  std::map<std::string, int> actions;

  friend bool operator==(const DistrictState&, const DistrictState&) = default;
};

struct TurnRecord {
  int turn_index{0};
  std::int64_t total_votes{0};
  double budget{0.0};
  double duration_s{0.0};
  std::vector<DistrictState> districts;

  /// Lookup by id; ids are usually 1..N in order so try the direct slot first.
  const DistrictState* district(int id) const {
    if (id >= 1 && static_cast<std::size_t>(id) <= districts.size() &&
        districts[id - 1].district_id == id)
      return &districts[id - 1];
    for (const auto& d : districts)
      if (d.district_id == id) return &d;
    return nullptr;
  }

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct Playthrough {
  std::string player_id;
  int level{1};
  std::vector<TurnRecord> turns;

  friend bool operator==(const Playthrough&, const Playthrough&) = default;
};

struct Dataset {
  int level{0};
  std::vector<Playthrough> playthroughs;
  std::vector<std::string> action_vocabulary;  // sorted
  int district_count{0};

  bool empty() const { return playthroughs.empty(); }
  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& p : playthroughs) n += p.turns.size();
    return n;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// One line-chart vertex: a turn of a playthrough.
struct TurnPoint {
  std::size_t playthrough{0};
  std::size_t turn{0};  // position within Playthrough::turns

  friend auto operator<=>(const TurnPoint&, const TurnPoint&) = default;
};

/// Canonical point order: playthrough-major, then turn.
inline std::vector<TurnPoint> point_index(const Dataset& ds) {
  std::vector<TurnPoint> out;
  out.reserve(ds.point_count());
  for (std::size_t p = 0; p < ds.playthroughs.size(); ++p)
    for (std::size_t t = 0; t < ds.playthroughs[p].turns.size(); ++t) out.push_back({p, t});
  return out;
}

namespace detail {

inline void check_fraction(double v, const char* field, std::size_t line, int district) {
  if (!(v >= 0.0 && v <= 1.0))
    throw DataError(line, std::string("district ") + std::to_string(district) + " field '" + field +
                              "' = " + std::to_string(v) + " is outside [0,1]");
}

}  // namespace detail

/// Checks every dataset invariant and recomputes the derived fields
/// (action vocabulary, district count, level). `lines` maps playthrough
/// index to its source line for diagnostics and may be empty.
inline void finalize_dataset(Dataset& ds, const std::vector<std::size_t>& lines = {}) {
  auto line_of = [&](std::size_t p) { return p < lines.size() ? lines[p] : std::size_t{0}; };
  std::set<std::string> vocab;
  std::set<int> expected_ids;
  bool first = true;
  for (std::size_t pi = 0; pi < ds.playthroughs.size(); ++pi) {
    const auto& pt = ds.playthroughs[pi];
    const std::size_t line = line_of(pi);
    if (pt.level < 1) throw DataError(line, "level must be >= 1");
    if (pt.turns.empty()) throw DataError(line, "playthrough '" + pt.player_id + "' has no turns");
    if (first) {
      ds.level = pt.level;
    } else if (pt.level != ds.level) {
      throw DataError(line, "mixed levels: " + std::to_string(pt.level) + " vs " + std::to_string(ds.level));
    }
    for (std::size_t ti = 0; ti < pt.turns.size(); ++ti) {
      const auto& tr = pt.turns[ti];
      if (tr.turn_index < 0) throw DataError(line, "turn index must be >= 0");
      if (ti > 0 && tr.turn_index <= pt.turns[ti - 1].turn_index)
        throw DataError(line, "turn indices must be strictly increasing");
      if (tr.total_votes < 0) throw DataError(line, "total_votes must be >= 0");
      if (!(tr.budget >= 0.0)) throw DataError(line, "budget must be >= 0");
      if (!(tr.duration_s >= 0.0)) throw DataError(line, "duration_s must be >= 0");
      if (tr.districts.empty()) throw DataError(line, "turn " + std::to_string(tr.turn_index) + " has no districts");
      std::set<int> ids;
      for (const auto& d : tr.districts) {
        if (d.district_id < 1) throw DataError(line, "district id must be >= 1");
        if (!ids.insert(d.district_id).second)
          throw DataError(line, "duplicate district id " + std::to_string(d.district_id));
        if (d.population < 0) throw DataError(line, "population must be >= 0");
        if (!std::isfinite(d.favorability)) throw DataError(line, "favorability must be finite");
        detail::check_fraction(d.unregistered, "unregistered", line, d.district_id);
        detail::check_fraction(d.undecided, "undecided", line, d.district_id);
        detail::check_fraction(d.for_share, "for", line, d.district_id);
        detail::check_fraction(d.against_share, "against", line, d.district_id);
        for (const auto& [name, flag] : d.actions) {
          if (flag != 0 && flag != 1)
            throw DataError(line, "action '" + name + "' flag must be 0 or 1");
          vocab.insert(name);
        }
      }
      if (first) {
        expected_ids = ids;
        if (*expected_ids.rbegin() != static_cast<int>(expected_ids.size()))
          throw DataError(line, "district ids must form the contiguous range 1..N");
        first = false;
      } else if (ids != expected_ids) {
        throw DataError(line, "inconsistent district ids (expected 1.." +
                                  std::to_string(expected_ids.size()) + ")");
      }
    }
  }
  if (ds.playthroughs.empty()) ds.level = 0;
  ds.district_count = static_cast<int>(expected_ids.size());
  ds.action_vocabulary.assign(vocab.begin(), vocab.end());
}

namespace detail {

template <typename T>
T require(const nlohmann::json& obj, const char* key, std::size_t line, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(line, where + "missing field '" + key + "'");
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw DataError(line, where + "field '" + key + "' must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw DataError(line, where + "field '" + key + "' must be a number");
    }
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(line, where + "field '" + key + "' has the wrong type");
  }
}

inline DistrictState district_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw DataError(line, "district entry must be an object");
  DistrictState d;
  d.district_id = require<int>(j, "id", line, "");
  const std::string where = "district " + std::to_string(d.district_id) + ": ";
  d.population = require<std::int64_t>(j, "population", line, where);
  d.favorability = require<double>(j, "favorability", line, where);
  d.unregistered = require<double>(j, "unregistered", line, where);
  d.undecided = require<double>(j, "undecided", line, where);
  d.for_share = require<double>(j, "for", line, where);
  d.against_share = require<double>(j, "against", line, where);
  if (auto it = j.find("actions"); it != j.end()) {
    if (!it->is_object()) throw DataError(line, where + "'actions' must be an object");
    for (const auto& [name, flag] : it->items()) {
      if (!flag.is_number_integer() || (flag.get<int>() != 0 && flag.get<int>() != 1))
        throw DataError(line, where + "action '" + name + "' flag must be 0 or 1");
      d.actions.emplace(name, flag.get<int>());
    }
  }
  return d;
}

inline nlohmann::json district_to_json(const DistrictState& d) {
  nlohmann::json j;
  j["id"] = d.district_id;
  j["population"] = d.population;
  j["favorability"] = d.favorability;
  j["unregistered"] = d.unregistered;
  j["undecided"] = d.undecided;
  j["for"] = d.for_share;
  j["against"] = d.against_share;
  j["actions"] = nlohmann::json::object();
  for (const auto& [name, flag] : d.actions) j["actions"][name] = flag;
  return j;
}

}  // namespace detail

inline Playthrough playthrough_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw DataError(line, "expected a JSON object");
  Playthrough pt;
  pt.player_id = detail::require<std::string>(j, "player_id", line, "");
  pt.level = detail::require<int>(j, "level", line, "");
  auto turns = j.find("turns");
  if (turns == j.end() || !turns->is_array()) throw DataError(line, "missing array field 'turns'");
  for (const auto& tj : *turns) {
    if (!tj.is_object()) throw DataError(line, "turn entry must be an object");
    TurnRecord tr;
    tr.turn_index = detail::require<int>(tj, "turn", line, "");
    const std::string where = "turn " + std::to_string(tr.turn_index) + ": ";
    tr.total_votes = detail::require<std::int64_t>(tj, "total_votes", line, where);
    tr.budget = detail::require<double>(tj, "budget", line, where);
    tr.duration_s = detail::require<double>(tj, "duration_s", line, where);
    auto ds = tj.find("districts");
    if (ds == tj.end() || !ds->is_array()) throw DataError(line, where + "missing array field 'districts'");
    for (const auto& dj : *ds) tr.districts.push_back(detail::district_from_json(dj, line));
    pt.turns.push_back(std::move(tr));
  }
  return pt;
}

inline nlohmann::json playthrough_to_json(const Playthrough& pt) {
  nlohmann::json j;
  j["player_id"] = pt.player_id;
  j["level"] = pt.level;
  j["turns"] = nlohmann::json::array();
  for (const auto& tr : pt.turns) {
    nlohmann::json tj;
    tj["turn"] = tr.turn_index;
    tj["total_votes"] = tr.total_votes;
    tj["budget"] = tr.budget;
    tj["duration_s"] = tr.duration_s;
    tj["districts"] = nlohmann::json::array();
    for (const auto& d : tr.districts) tj["districts"].push_back(detail::district_to_json(d));
    j["turns"].push_back(std::move(tj));
  }
  return j;
}

/// Parses one playthrough per line; blank lines are skipped.
inline Dataset parse_dataset(std::istream& in) {
  Dataset ds;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(line, std::string("malformed JSON: ") + e.what());
    }
    ds.playthroughs.push_back(playthrough_from_json(j, line));
    lines.push_back(line);
  }
  finalize_dataset(ds, lines);
  return ds;
}

inline Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  for (const auto& pt : ds.playthroughs) {
    out += playthrough_to_json(pt).dump();
    out += '\n';
  }
  return out;
}

}  // namespace kinetiq
