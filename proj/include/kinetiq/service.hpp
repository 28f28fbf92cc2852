#pragma once

// HTTP API for the workbench: dataset upload, parameter introspection,
// frame evaluation and rendering. All routes live under /api.
//
//   GET  /api/health
//   POST /api/datasets                  body: dataset JSONL -> {dataset_id, summary}
//   GET  /api/datasets                  -> {datasets: [{dataset_id, summary}]}
//   GET  /api/datasets/{id}/parameters  -> registry JSON
//   POST /api/evaluate                  EvaluateRequest -> EvaluateResponse
//   POST /api/render                    EvaluateRequest (+ "render") -> animation bytes

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kinetiq/animation.hpp"
#include "kinetiq/chart.hpp"
#include "kinetiq/game_data.hpp"
#include "kinetiq/pipeline.hpp"
#include "kinetiq/query_spec.hpp"
#include "kinetiq/registry.hpp"

namespace kinetiq {

inline constexpr int kMaxServiceFrames = 240;
inline constexpr std::size_t kDefaultMaxUpload = 64u << 20;

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

/// Content id of an uploaded dataset: the first 16 hex digits of its SHA-256.
inline std::string dataset_id(std::string_view body) { return sha256_hex(body).substr(0, 16); }

inline nlohmann::json dataset_summary(const Dataset& ds) {
  return {{"playthroughs", ds.playthroughs.size()},
          {"points", ds.point_count()},
          {"district_count", ds.district_count},
          {"level", ds.level},
          {"action_vocabulary", ds.action_vocabulary}};
}

struct StoredDataset {
  std::string id;
  Dataset dataset;
  ParameterRegistry registry;
};

/// In-memory store keyed by content id, optionally mirrored to a directory.
/// Concurrent reads, exclusive insertion.
class DatasetStore {
 public:
  explicit DatasetStore(std::optional<std::filesystem::path> dir = std::nullopt) : dir_(std::move(dir)) {
    if (!dir_) return;
    std::filesystem::create_directories(*dir_);
    for (const auto& entry : std::filesystem::directory_iterator(*dir_)) {
      if (entry.path().extension() != ".jsonl") continue;
      std::ifstream f(entry.path(), std::ios::binary);
      std::stringstream ss;
      ss << f.rdbuf();
      try {
        insert(ss.str());
      } catch (const std::exception&) {
        // unreadable files are left alone
      }
    }
  }

  /// Parses and stores; returns the entry and whether it was new.
  std::pair<std::shared_ptr<const StoredDataset>, bool> insert(const std::string& body) {
    const std::string id = dataset_id(body);
    if (auto existing = find(id)) return {existing, false};
    Dataset ds = parse_dataset(body);
    if (ds.empty()) throw DataError(0, "no playthroughs");
    auto reg = build_registry(ds);
    auto entry = std::make_shared<const StoredDataset>(StoredDataset{id, std::move(ds), std::move(reg)});
    std::unique_lock lock(mu_);
    auto [it, inserted] = items_.emplace(id, entry);
    if (inserted && dir_) {
      std::ofstream f(*dir_ / (id + ".jsonl"), std::ios::binary);
      f << body;
    }
    return {it->second, inserted};
  }

  std::shared_ptr<const StoredDataset> find(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = items_.find(id);
    return it == items_.end() ? nullptr : it->second;
  }

  std::vector<std::shared_ptr<const StoredDataset>> list() const {
    std::shared_lock lock(mu_);
    std::vector<std::shared_ptr<const StoredDataset>> out;
    for (const auto& [id, e] : items_) out.push_back(e);
    return out;
  }

 private:
  std::optional<std::filesystem::path> dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const StoredDataset>> items_;
};

struct EvaluateRequest {
  std::string dataset_id;
  QueryDocument document;  // query plus the render block it carried
  int n_frames{0};
  bool include_geometry{false};
};

/// Parses an evaluate/render request body. Query diagnostics are re-rooted
/// under /query; a "render" object overrides the document's render block.
inline std::variant<EvaluateRequest, std::vector<Diagnostic>> parse_evaluate_request(const std::string& body) {
  std::vector<Diagnostic> diags;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    return std::vector<Diagnostic>{{Severity::error, std::string("invalid JSON: ") + e.what(), ""}};
  }
  if (!j.is_object()) return std::vector<Diagnostic>{{Severity::error, "request must be a JSON object", ""}};
  EvaluateRequest req;
  if (!j.contains("dataset_id") || !j["dataset_id"].is_string())
    diags.push_back({Severity::error, "missing string field 'dataset_id'", "/dataset_id"});
  else req.dataset_id = j["dataset_id"].get<std::string>();

  if (!j.contains("query")) {
    diags.push_back({Severity::error, "missing field 'query'", "/query"});
    return diags;
  }
  nlohmann::json qj = j["query"];
  if (qj.is_object() && j.contains("render") && j["render"].is_object()) {
    if (!qj.contains("render")) qj["render"] = nlohmann::json::object();
    if (qj["render"].is_object()) qj["render"].update(j["render"]);
  }
  ParsedQuery parsed = parse_query_json(qj);
  for (auto d : parsed.diagnostics) {
    d.path = "/query" + d.path;
    if (d.severity == Severity::error) diags.push_back(std::move(d));
  }
  if (!parsed.document) return diags;
  req.document = std::move(*parsed.document);

  req.n_frames = req.document.render.n_frames;
  if (j.contains("n_frames")) {
    const auto& n = j["n_frames"];
    if (!n.is_number_integer()) diags.push_back({Severity::error, "n_frames must be an integer", "/n_frames"});
    else req.n_frames = n.get<int>();
  }
  if (req.n_frames < 1 || req.n_frames > kMaxServiceFrames)
    diags.push_back({Severity::error, "n_frames must lie in [1, " + std::to_string(kMaxServiceFrames) + "]",
                     "/n_frames"});
  req.document.render.n_frames = req.n_frames;
  if (j.contains("include_geometry")) {
    if (j["include_geometry"].is_boolean()) req.include_geometry = j["include_geometry"].get<bool>();
    else diags.push_back({Severity::error, "include_geometry must be a boolean", "/include_geometry"});
  }
  if (!diags.empty()) return diags;
  return req;
}

namespace service_detail {

inline void append_quantized(std::string& out, double v) {
  // 4 decimal places, trailing zeros trimmed
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, std::round(v * 1e4) / 1e4, std::chars_format::fixed, 4);
  std::string_view s(buf, static_cast<std::size_t>(end - buf));
  while (s.size() > 1 && s.back() == '0') s.remove_suffix(1);
  if (s.back() == '.') s.remove_suffix(1);
  out.append(s);
}

inline nlohmann::json geometry_json(const ChartGeometry& g) {
  nlohmann::json j;
  j["width"] = g.width;
  j["height"] = g.height;
  j["plot"] = {{"left", g.plot_left}, {"right", g.plot_right}, {"top", g.plot_top}, {"bottom", g.plot_bottom}};
  j["polylines"] = nlohmann::json::array();
  for (const auto& line : g.polylines) {
    nlohmann::json l = nlohmann::json::array();
    for (const auto& v : line) l.push_back({v.x, v.y});
    j["polylines"].push_back(std::move(l));
  }
  auto ticks = [](const std::vector<Tick>& ts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& t : ts) a.push_back({{"pos", t.pos}, {"label", t.label}});
    return a;
  };
  j["x_ticks"] = ticks(g.x_ticks);
  j["y_ticks"] = ticks(g.y_ticks);
  return j;
}

inline nlohmann::json diagnostics_json(const std::vector<Diagnostic>& diags) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& d : diags)
    a.push_back({{"severity", d.severity == Severity::error ? "error" : "warning"},
                 {"message", d.message},
                 {"path", d.path}});
  return {{"diagnostics", a}};
}

}  // namespace service_detail

/// Serializes an evaluation: point_index, frame times, quantized colors and
/// optional geometry. Written by hand because frame payloads are large.
inline std::string evaluate_response(const Dataset& ds, const FrameSet& frames,
                                     const std::optional<ChartGeometry>& geometry) {
  std::string out;
  const auto points = point_index(ds);
  out.reserve(points.size() * frames.n_frames() * 28 + 1024);
  out += "{\"point_index\":[";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += ',';
    out += '[' + std::to_string(points[i].playthrough) + ',' +
           std::to_string(ds.playthroughs[points[i].playthrough].turns[points[i].turn].turn_index) + ']';
  }
  out += "],\"times\":[";
  for (std::size_t k = 0; k < frames.n_frames(); ++k) {
    if (k) out += ',';
    service_detail::append_quantized(out, frames.buffers[k].t);
  }
  out += "],\"frames\":[";
  for (std::size_t k = 0; k < frames.n_frames(); ++k) {
    if (k) out += ',';
    out += '[';
    const auto& colors = frames.buffers[k].colors;
    for (std::size_t i = 0; i < colors.size(); ++i) {
      if (i) out += ',';
      out += '[';
      service_detail::append_quantized(out, colors[i].r);
      out += ',';
      service_detail::append_quantized(out, colors[i].g);
      out += ',';
      service_detail::append_quantized(out, colors[i].b);
      out += ',';
      service_detail::append_quantized(out, colors[i].a);
      out += ']';
    }
    out += ']';
  }
  out += ']';
  if (geometry) {
    out += ",\"geometry\":";
    out += service_detail::geometry_json(*geometry).dump();
  }
  out += '}';
  return out;
}

struct ServiceOptions {
  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> ui_dir;
  std::size_t max_upload{kDefaultMaxUpload};
};

class Service {
 public:
  explicit Service(ServiceOptions opts = {}) : opts_(std::move(opts)), store_(opts_.data_dir) {}

  DatasetStore& store() { return store_; }

  void mount(httplib::Server& svr) {
    using httplib::Request;
    using httplib::Response;
    svr.set_payload_max_length(opts_.max_upload);
    svr.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    svr.Options(R"(/api/.*)", [](const Request&, Response& res) { res.status = 204; });
    if (opts_.ui_dir) svr.set_mount_point("/", opts_.ui_dir->string());

    svr.Get("/api/health", [](const Request&, Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });

    svr.Post("/api/datasets", [this](const Request& req, Response& res) {
      try {
        auto [entry, created] = store_.insert(req.body);
        res.status = created ? 201 : 200;
        json_reply(res, {{"dataset_id", entry->id}, {"summary", dataset_summary(entry->dataset)}});
      } catch (const DataError& e) {
        res.status = 400;
        nlohmann::json d = {{"severity", "error"}, {"message", e.what()}, {"path", ""}};
        if (e.line()) d["line"] = e.line();
        json_reply(res, {{"diagnostics", nlohmann::json::array({d})}});
      }
    });

    svr.Get("/api/datasets", [this](const Request&, Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& e : store_.list())
        list.push_back({{"dataset_id", e->id}, {"summary", dataset_summary(e->dataset)}});
      json_reply(res, {{"datasets", list}});
    });

    svr.Get(R"(/api/datasets/([0-9a-f]+)/parameters)", [this](const Request& req, Response& res) {
      auto entry = store_.find(req.matches[1]);
      if (!entry) return not_found(res, req.matches[1]);
      json_reply(res, registry_json(entry->registry));
    });

    svr.Post("/api/evaluate", [this](const Request& req, Response& res) {
      auto prepared = prepare(req.body, res);
      if (!prepared) return;
      auto& [request, entry] = *prepared;
      FrameSet frames = evaluate_loop(request.document.query, entry->dataset, entry->registry,
                                      static_cast<std::size_t>(request.n_frames));
      std::optional<ChartGeometry> geometry;
      if (request.include_geometry) geometry = layout(entry->dataset, request.document.render);
      res.set_content(evaluate_response(entry->dataset, frames, geometry), "application/json");
    });

    svr.Post("/api/render", [this](const Request& req, Response& res) {
      auto prepared = prepare(req.body, res);
      if (!prepared) return;
      auto& [request, entry] = *prepared;
      if (request.document.render.format == AnimationFormat::png_sequence) {
        res.status = 400;
        json_reply(res, service_detail::diagnostics_json(
                            {{Severity::error, "png_sequence cannot be returned as one body", "/render/format"}}));
        return;
      }
      auto anim = render_animation(request.document.query, entry->dataset, entry->registry, request.document.render);
      res.set_content(std::string(anim.bytes.begin(), anim.bytes.end()),
                      request.document.render.format == AnimationFormat::gif ? "image/gif" : "image/png");
    });
  }

 private:
  using Prepared = std::pair<EvaluateRequest, std::shared_ptr<const StoredDataset>>;

  static void json_reply(httplib::Response& res, const nlohmann::json& j) {
    res.set_content(j.dump(), "application/json");
  }

  static void not_found(httplib::Response& res, const std::string& id) {
    res.status = 404;
    json_reply(res, service_detail::diagnostics_json({{Severity::error, "unknown dataset '" + id + "'", ""}}));
  }

  std::optional<Prepared> prepare(const std::string& body, httplib::Response& res) {
    auto parsed = parse_evaluate_request(body);
    if (auto* diags = std::get_if<std::vector<Diagnostic>>(&parsed)) {
      res.status = 400;
      json_reply(res, service_detail::diagnostics_json(*diags));
      return std::nullopt;
    }
    auto& request = std::get<EvaluateRequest>(parsed);
    auto entry = store_.find(request.dataset_id);
    if (!entry) {
      not_found(res, request.dataset_id);
      return std::nullopt;
    }
    auto diags = validate_against(request.document, entry->registry);
    for (auto& d : diags) d.path = "/query" + d.path;
    if (has_errors(diags)) {
      res.status = 400;
      json_reply(res, service_detail::diagnostics_json(diags));
      return std::nullopt;
    }
    return Prepared{std::move(request), std::move(entry)};
  }

  ServiceOptions opts_;
  DatasetStore store_;
};

}  // namespace kinetiq
