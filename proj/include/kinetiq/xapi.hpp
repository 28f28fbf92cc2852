#pragma once

// Ingestion of xAPI-style statements into a Dataset.
//
// Profile:
//   actor.account.name (or actor.mbox / actor.name)  -> player_id
//   timestamp (ISO 8601)                            -> ordering
//   verb ".../turn-completed"                       -> one turn; result.extensions
//       holds the post-turn snapshot: total_votes, budget, duration_s, level,
//       districts (array of native district objects)
//   any verb in the action table (e.g. "rallied")   -> sets that action flag
//       on the district named by the "district" extension, in the turn that
//       the next turn-completed statement closes
// Extension keys are matched on their last path segment, so both
// "district" and "https://example.org/xapi/district" work.

#include <algorithm>
#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kinetiq/game_data.hpp"

namespace kinetiq {

/// Past-tense xAPI verbs and the action name they set.
inline const std::map<std::string, std::string, std::less<>>& xapi_action_verbs() {
  static const std::map<std::string, std::string, std::less<>> table{
      {"rallied", "rally"},
      {"fundraised", "fundraiser"},
      {"canvassed", "grassroots"},
      {"organized-grassroots", "grassroots"},
      {"registered-voters", "voter_drive"},
      {"ran-voter-drive", "voter_drive"},
  };
  return table;
}

inline constexpr std::string_view kTurnCompletedVerb = "turn-completed";

struct XapiResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view last_segment(std::string_view s) {
  while (!s.empty() && (s.back() == '/' || s.back() == '#')) s.remove_suffix(1);
  auto pos = s.find_last_of("/#");
  return pos == std::string_view::npos ? s : s.substr(pos + 1);
}

/// Milliseconds since the epoch for "YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm]".
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
  int y, mo, d, h, mi;
  double sec;
  char tail[16] = {0};
  std::string buf(s);
  int n = std::sscanf(buf.c_str(), "%4d-%2d-%2dT%2d:%2d:%lf%15s", &y, &mo, &d, &h, &mi, &sec, tail);
  if (n < 6) return std::nullopt;
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec < 0 || sec >= 61) return std::nullopt;
  std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  std::int64_t ms = ((days * 24 + h) * 60 + mi) * 60000 + static_cast<std::int64_t>(std::llround(sec * 1000));
  std::string_view tz(tail);
  if (tz.empty() || tz == "Z") return ms;
  int oh = 0, om = 0;
  if ((tz[0] == '+' || tz[0] == '-') && std::sscanf(tail + 1, "%2d:%2d", &oh, &om) >= 1) {
    std::int64_t off = (oh * 60 + om) * 60000;
    return tz[0] == '+' ? ms - off : ms + off;
  }
  return std::nullopt;
}

inline const nlohmann::json* find_extension(const nlohmann::json& stmt, std::string_view key) {
  for (const char* where : {"result", "context"}) {
    auto w = stmt.find(where);
    if (w == stmt.end() || !w->is_object()) continue;
    auto ext = w->find("extensions");
    if (ext == w->end() || !ext->is_object()) continue;
    for (auto it = ext->begin(); it != ext->end(); ++it)
      if (last_segment(it.key()) == key) return &*it;
  }
  return nullptr;
}

inline std::optional<std::string> actor_id(const nlohmann::json& stmt) {
  auto a = stmt.find("actor");
  if (a == stmt.end() || !a->is_object()) return std::nullopt;
  if (auto acc = a->find("account"); acc != a->end() && acc->is_object()) {
    if (auto name = acc->find("name"); name != acc->end() && name->is_string()) return name->get<std::string>();
  }
  for (const char* k : {"mbox", "openid", "name"})
    if (auto v = a->find(k); v != a->end() && v->is_string()) return v->get<std::string>();
  return std::nullopt;
}

inline std::string verb_of(const nlohmann::json& stmt) {
  auto v = stmt.find("verb");
  if (v == stmt.end()) return {};
  if (v->is_string()) return std::string(last_segment(v->get<std::string>()));
  if (v->is_object()) {
    if (auto id = v->find("id"); id != v->end() && id->is_string())
      return std::string(last_segment(id->get<std::string>()));
  }
  return {};
}

}  // namespace detail

/// Groups statements by actor into playthroughs ordered by timestamp.
/// Statements without actor or timestamp are skipped with a warning; if
/// nothing usable remains a DataError is thrown.
inline XapiResult ingest_xapi(const nlohmann::json& statements) {
  if (!statements.is_array()) throw DataError(0, "xAPI input must be a JSON array of statements");
  XapiResult out;

  struct Event {
    std::int64_t when;
    std::size_t order;  // input position breaks timestamp ties
    const nlohmann::json* stmt;
    bool turn;
  };
  std::map<std::string, std::vector<Event>> by_actor;
  std::size_t usable = 0;

  for (std::size_t i = 0; i < statements.size(); ++i) {
    const auto& s = statements[i];
    const std::string where = "statement " + std::to_string(i) + ": ";
    if (!s.is_object()) {
      out.warnings.push_back(where + "not an object; skipped");
      continue;
    }
    auto actor = detail::actor_id(s);
    if (!actor) {
      out.warnings.push_back(where + "missing actor; skipped");
      continue;
    }
    auto ts = s.find("timestamp");
    std::optional<std::int64_t> when;
    if (ts != s.end() && ts->is_string()) when = detail::parse_iso8601(ts->get<std::string>());
    if (!when) {
      out.warnings.push_back(where + "missing or unparseable timestamp; skipped");
      continue;
    }
    std::string verb = detail::verb_of(s);
    bool is_turn = verb == kTurnCompletedVerb;
    if (!is_turn && !xapi_action_verbs().contains(verb)) {
      out.warnings.push_back(where + "unrecognized verb '" + verb + "'; skipped");
      continue;
    }
    by_actor[*actor].push_back({*when, i, &s, is_turn});
    ++usable;
  }

  std::set<std::string> vocab;
  for (auto& [actor, events] : by_actor) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
      return a.when < b.when || (a.when == b.when && a.order < b.order);
    });
    Playthrough pt;
    pt.player_id = actor;
    std::vector<std::pair<std::string, int>> pending;  // (action, district) awaiting a turn
    for (const auto& ev : events) {
      const auto& s = *ev.stmt;
      const std::string where = "statement " + std::to_string(ev.order) + ": ";
      if (!ev.turn) {
        auto district = detail::find_extension(s, "district");
        if (!district || !district->is_number_integer()) {
          out.warnings.push_back(where + "action without an integer district extension; skipped");
          --usable;
          continue;
        }
        const std::string& action = xapi_action_verbs().find(detail::verb_of(s))->second;
        pending.emplace_back(action, district->get<int>());
        vocab.insert(action);
        continue;
      }
      TurnRecord tr;
      tr.turn_index = static_cast<int>(pt.turns.size());
      try {
        auto num = [&](std::string_view key) -> const nlohmann::json& {
          auto v = detail::find_extension(s, key);
          if (!v || !v->is_number()) throw DataError(0, where + "missing numeric extension '" + std::string(key) + "'");
          return *v;
        };
        tr.total_votes = num("total_votes").get<std::int64_t>();
        tr.budget = num("budget").get<double>();
        tr.duration_s = num("duration_s").get<double>();
        if (auto lvl = detail::find_extension(s, "level"); lvl && lvl->is_number_integer())
          pt.level = lvl->get<int>();
        auto districts = detail::find_extension(s, "districts");
        if (!districts || !districts->is_array()) throw DataError(0, where + "missing 'districts' extension");
        for (const auto& dj : *districts) tr.districts.push_back(detail::district_from_json(dj, 0));
      } catch (const DataError& e) {
        out.warnings.push_back(std::string(e.what()) + "; skipped");
        --usable;
        continue;
      } catch (const nlohmann::json::exception& e) {
        out.warnings.push_back(where + e.what() + "; skipped");
        --usable;
        continue;
      }
      for (auto& d : tr.districts)
        for (auto& [name, flag] : d.actions) vocab.insert(name);
      for (const auto& [action, district] : pending) {
        bool applied = false;
        for (auto& d : tr.districts)
          if (d.district_id == district) {
            d.actions[action] = 1;
            applied = true;
          }
        if (!applied)
          out.warnings.push_back("actor " + actor + ": action '" + action + "' names unknown district " +
                                 std::to_string(district) + "; ignored");
      }
      pending.clear();
      pt.turns.push_back(std::move(tr));
    }
    if (!pending.empty())
      out.warnings.push_back("actor " + actor + ": " + std::to_string(pending.size()) +
                             " action(s) after the last completed turn; ignored");
    if (!pt.turns.empty()) out.dataset.playthroughs.push_back(std::move(pt));
  }

  if (usable == 0 || out.dataset.playthroughs.empty())
    throw DataError(0, "no usable xAPI statements");

  // every district carries the full vocabulary so turns stay consistent
  for (auto& pt : out.dataset.playthroughs)
    for (auto& tr : pt.turns)
      for (auto& d : tr.districts)
        for (const auto& a : vocab) d.actions.try_emplace(a, 0);
  finalize_dataset(out.dataset);
  return out;
}

inline XapiResult ingest_xapi(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(0, std::string("malformed xAPI JSON: ") + e.what());
  }
  return ingest_xapi(j);
}

}  // namespace kinetiq
