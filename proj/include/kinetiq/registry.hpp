#pragma once

// Parameter references and their normalization into [0,1].

#include <algorithm>
#include <charconv>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kinetiq/color.hpp"
#include "kinetiq/game_data.hpp"
#include "kinetiq/warnings.hpp"

namespace kinetiq {

enum class GlobalField { budget, duration };
enum class DistrictField { population, favorability, unregistered, undecided, for_share, against_share };

inline constexpr GlobalField kGlobalFields[] = {GlobalField::budget, GlobalField::duration};
inline constexpr DistrictField kDistrictFields[] = {
    DistrictField::population, DistrictField::favorability, DistrictField::unregistered,
    DistrictField::undecided,  DistrictField::for_share,    DistrictField::against_share};

inline std::string_view field_name(GlobalField f) {
  return f == GlobalField::budget ? "budget" : "duration";
}

inline std::string_view field_name(DistrictField f) {
  switch (f) {
    case DistrictField::population: return "population";
    case DistrictField::favorability: return "favorability";
    case DistrictField::unregistered: return "unregistered";
    case DistrictField::undecided: return "undecided";
    case DistrictField::for_share: return "for";
    case DistrictField::against_share: return "against";
  }
  return "?";
}

struct BaselineRef {
  friend bool operator==(const BaselineRef&, const BaselineRef&) = default;
};
struct GlobalRef {
  GlobalField field;
  friend bool operator==(const GlobalRef&, const GlobalRef&) = default;
};
struct DistrictRef {
  int district;
  DistrictField field;
  friend bool operator==(const DistrictRef&, const DistrictRef&) = default;
};
struct ActionRef {
  std::string action;
  int district;
  friend bool operator==(const ActionRef&, const ActionRef&) = default;
};

using ParameterRef = std::variant<BaselineRef, GlobalRef, DistrictRef, ActionRef>;

/// "baseline" | "budget" | "duration" | "district.3.favorability" | "action.rally.district.5"
inline std::string to_string(const ParameterRef& ref) {
  struct {
    std::string operator()(const BaselineRef&) const { return "baseline"; }
    std::string operator()(const GlobalRef& g) const { return std::string(field_name(g.field)); }
    std::string operator()(const DistrictRef& d) const {
      return "district." + std::to_string(d.district) + "." + std::string(field_name(d.field));
    }
    std::string operator()(const ActionRef& a) const {
      return "action." + a.action + ".district." + std::to_string(a.district);
    }
  } v;
  return std::visit(v, ref);
}

namespace detail {

inline std::optional<int> parse_positive_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v < 1) return std::nullopt;
  return v;
}

inline std::optional<DistrictField> district_field_from(std::string_view s) {
  for (auto f : kDistrictFields)
    if (field_name(f) == s) return f;
  if (s == "for_share") return DistrictField::for_share;
  if (s == "against_share") return DistrictField::against_share;
  return std::nullopt;
}

}  // namespace detail

inline std::optional<ParameterRef> parse_parameter_ref(std::string_view s) {
  using namespace std::string_view_literals;
  if (s == "baseline") return BaselineRef{};
  if (s == "budget") return GlobalRef{GlobalField::budget};
  if (s == "duration") return GlobalRef{GlobalField::duration};
  if (s.starts_with("district.")) {
    auto rest = s.substr(9);
    auto dot = rest.find('.');
    if (dot == std::string_view::npos) return std::nullopt;
    auto id = detail::parse_positive_int(rest.substr(0, dot));
    auto field = detail::district_field_from(rest.substr(dot + 1));
    if (!id || !field) return std::nullopt;
    return DistrictRef{*id, *field};
  }
  if (s.starts_with("action.")) {
    auto rest = s.substr(7);
    auto pos = rest.rfind(".district."sv);
    if (pos == std::string_view::npos || pos == 0) return std::nullopt;
    auto id = detail::parse_positive_int(rest.substr(pos + 10));
    if (!id) return std::nullopt;
    return ActionRef{std::string(rest.substr(0, pos)), *id};
  }
  return std::nullopt;
}

struct Domain {
  double lo{0.0};
  double hi{1.0};
  friend bool operator==(const Domain&, const Domain&) = default;
};

/// Keys are field names: budget, duration, population, favorability,
/// unregistered, undecided, for, against.
using DomainOverrides = std::map<std::string, Domain, std::less<>>;

/// Normalization domains for every parameter of one dataset. District fields
/// share one domain per field across all districts.
class ParameterRegistry {
 public:
  int district_count() const { return district_count_; }
  const std::vector<std::string>& action_vocabulary() const { return vocab_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Domain of the field a ref reads. Baseline and actions report [0,1];
  /// baseline is constant so its domain is never used.
  Domain domain(const ParameterRef& ref) const {
    if (auto* g = std::get_if<GlobalRef>(&ref)) return field_domains_.at(std::string(field_name(g->field)));
    if (auto* d = std::get_if<DistrictRef>(&ref)) return field_domains_.at(std::string(field_name(d->field)));
    return {0.0, 1.0};
  }

  Domain domain(std::string_view field) const {
    auto it = field_domains_.find(field);
    if (it == field_domains_.end()) throw std::out_of_range("unknown field " + std::string(field));
    return it->second;
  }

  /// Why a ref cannot be resolved against this registry, if it cannot.
  std::optional<std::string> resolve_error(const ParameterRef& ref) const {
    auto check_district = [&](int id) -> std::optional<std::string> {
      if (id < 1 || id > district_count_)
        return "district " + std::to_string(id) + " is out of range (valid: 1.." +
               std::to_string(district_count_) + ")";
      return std::nullopt;
    };
    if (auto* d = std::get_if<DistrictRef>(&ref)) return check_district(d->district);
    if (auto* a = std::get_if<ActionRef>(&ref)) {
      if (auto err = check_district(a->district)) return err;
      if (!std::binary_search(vocab_.begin(), vocab_.end(), a->action)) {
        std::string known;
        for (const auto& v : vocab_) known += (known.empty() ? "" : ", ") + v;
        return "action '" + a->action + "' is not in the dataset vocabulary {" + known + "}";
      }
    }
    return std::nullopt;
  }

  /// Every resolvable ref: baseline, globals, district fields, actions.
  std::vector<ParameterRef> refs() const {
    std::vector<ParameterRef> out{BaselineRef{}};
    for (auto f : kGlobalFields) out.push_back(GlobalRef{f});
    for (int d = 1; d <= district_count_; ++d)
      for (auto f : kDistrictFields) out.push_back(DistrictRef{d, f});
    for (const auto& a : vocab_)
      for (int d = 1; d <= district_count_; ++d) out.push_back(ActionRef{a, d});
    return out;
  }

 private:
  friend ParameterRegistry build_registry(const Dataset&, const DomainOverrides&);

  int district_count_{0};
  std::vector<std::string> vocab_;
  std::map<std::string, Domain, std::less<>> field_domains_;
  std::vector<std::string> warnings_;
};

inline ParameterRegistry build_registry(const Dataset& ds, const DomainOverrides& overrides = {}) {
  if (ds.empty()) throw DataError(0, "no playthroughs");
  ParameterRegistry reg;
  reg.district_count_ = ds.district_count;
  reg.vocab_ = ds.action_vocabulary;

  for (const auto& [key, dom] : overrides) {
    bool known = key == "budget" || key == "duration" || detail::district_field_from(key).has_value();
    if (!known) throw std::invalid_argument("unknown domain override '" + key + "'");
    if (!(std::isfinite(dom.lo) && std::isfinite(dom.hi) && dom.lo < dom.hi))
      throw std::invalid_argument("domain override '" + key + "' needs finite lo < hi");
  }

  struct MinMax {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  MinMax budget, duration, population, favorability;
  for (const auto& pt : ds.playthroughs)
    for (const auto& tr : pt.turns) {
      budget.add(tr.budget);
      duration.add(tr.duration_s);
      for (const auto& d : tr.districts) {
        population.add(static_cast<double>(d.population));
        favorability.add(d.favorability);
      }
    }

  auto observed = [&](const std::string& key, const MinMax& mm) {
    if (mm.lo < mm.hi) {
      reg.field_domains_[key] = {mm.lo, mm.hi};
    } else {
      reg.field_domains_[key] = {mm.lo, mm.lo + 1.0};
      reg.warnings_.push_back("parameter '" + key + "' is constant (" + std::to_string(mm.lo) +
                              "); domain widened to [v, v+1]");
    }
  };
  observed("budget", budget);
  observed("duration", duration);
  observed("population", population);
  observed("favorability", favorability);
  for (auto f : {"unregistered", "undecided", "for", "against"}) reg.field_domains_[f] = {0.0, 1.0};

  for (const auto& [key, dom] : overrides) {
    std::string canonical = key;
    if (auto f = detail::district_field_from(key)) canonical = std::string(field_name(*f));
    reg.field_domains_[canonical] = dom;
  }
  // degenerate-domain warnings for overridden fields no longer apply
  std::erase_if(reg.warnings_, [&](const std::string& w) {
    for (const auto& [key, dom] : overrides)
      if (w.starts_with("parameter '" + key + "'")) return true;
    return false;
  });
  return reg;
}

inline double normalize(double raw, Domain d) { return clamp01((raw - d.lo) / (d.hi - d.lo)); }

/// Normalized value of `ref` at `point`, in [0,1]. Missing districts or
/// actions yield 0 and a once-per-run warning.
inline double parameter_value(const TurnPoint& point, const ParameterRef& ref, const Dataset& ds,
                              const ParameterRegistry& reg) {
  const TurnRecord& tr = ds.playthroughs.at(point.playthrough).turns.at(point.turn);
  auto missing = [&]() {
    WarningLog::instance().warn_once("parameter " + to_string(ref) +
                                     " is absent at some points; treated as 0 there");
    return 0.0;
  };
  struct Visitor {
    const TurnRecord& tr;
    const ParameterRegistry& reg;
    const ParameterRef& ref;
    decltype(missing)& on_missing;

    double operator()(const BaselineRef&) const { return 1.0; }
    double operator()(const GlobalRef& g) const {
      double raw = g.field == GlobalField::budget ? tr.budget : tr.duration_s;
      return normalize(raw, reg.domain(ref));
    }
    double operator()(const DistrictRef& d) const {
      const DistrictState* ds = tr.district(d.district);
      if (!ds) return on_missing();
      double raw = 0.0;
      switch (d.field) {
        case DistrictField::population: raw = static_cast<double>(ds->population); break;
        case DistrictField::favorability: raw = ds->favorability; break;
        case DistrictField::unregistered: raw = ds->unregistered; break;
        case DistrictField::undecided: raw = ds->undecided; break;
        case DistrictField::for_share: raw = ds->for_share; break;
        case DistrictField::against_share: raw = ds->against_share; break;
      }
      return normalize(raw, reg.domain(ref));
    }
    double operator()(const ActionRef& a) const {
      const DistrictState* ds = tr.district(a.district);
      if (!ds) return on_missing();
      auto it = ds->actions.find(a.action);
      if (it == ds->actions.end()) return on_missing();
      return it->second == 1 ? 1.0 : 0.0;
    }
  };
  return std::visit(Visitor{tr, reg, ref, missing}, ref);
}

}  // namespace kinetiq

namespace kinetiq {

/// {"<ref>": {"kind": ..., "lo": ..., "hi": ...}}; baseline carries "value": 1.
inline nlohmann::json registry_json(const ParameterRegistry& reg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& ref : reg.refs()) {
    nlohmann::json e;
    if (std::holds_alternative<BaselineRef>(ref)) {
      e = {{"kind", "baseline"}, {"value", 1.0}};
    } else {
      const Domain d = reg.domain(ref);
      const char* kind = std::holds_alternative<GlobalRef>(ref)     ? "global"
                         : std::holds_alternative<DistrictRef>(ref) ? "district"
                                                                    : "action";
      e = {{"kind", kind}, {"lo", d.lo}, {"hi", d.hi}};
    }
    j[to_string(ref)] = std::move(e);
  }
  return j;
}

}  // namespace kinetiq
