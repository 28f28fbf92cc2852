// kinetiq: batch front end for kinetic-query line-chart animations.
//
//   kinetiq render   SPEC [DATA] -o OUT [--frames N] [--fps F] [--format apng|gif|png_sequence]
//   kinetiq frame    SPEC [DATA] --t T -o OUT.png
//   kinetiq params   DATA [--json]
//   kinetiq validate SPEC [DATA]
//   kinetiq simgen   --seed S [--players N --turns N --districts N --level L --mix a=w,...] -o OUT
//   kinetiq serve    [--port P] [--host H] [--data-dir DIR] [--ui-dir DIR]
//
// Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kinetiq/kinetiq.hpp"
#include "kinetiq/service.hpp"

namespace fs = std::filesystem;
using namespace kinetiq;

namespace {

enum ExitStatus : int { kOk = 0, kValidation = 1, kIo = 2, kInternal = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

void flush_warnings() {
  for (const auto& w : WarningLog::instance().drain()) std::cerr << "warning: " << w << "\n";
}

Dataset load_dataset(const fs::path& path) {
  std::string text = read_file(path);
  try {
    return parse_dataset(text);
  } catch (const DataError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

QueryDocument load_spec(const fs::path& path) {
  ParsedQuery parsed = parse_query(read_file(path));
  for (const auto& d : parsed.diagnostics) std::cerr << path.string() << ": " << to_string(d) << "\n";
  if (!parsed.document) throw ValidationError("query document has errors");
  return std::move(*parsed.document);
}

/// Data path from the command line, else the document's dataset field
/// resolved relative to the spec file.
fs::path resolve_data(const std::string& cli_data, const QueryDocument& doc, const fs::path& spec_path) {
  if (!cli_data.empty()) return cli_data;
  if (doc.dataset.empty()) throw ValidationError("no dataset given on the command line or in the document");
  fs::path p = doc.dataset;
  return p.is_absolute() ? p : spec_path.parent_path() / p;
}

ParameterRegistry checked_registry(const Dataset& ds, const QueryDocument* doc, const fs::path& spec_path) {
  if (ds.empty()) throw ValidationError("no playthroughs");
  ParameterRegistry reg = build_registry(ds);
  for (const auto& w : reg.warnings()) std::cerr << "warning: " << w << "\n";
  if (doc) {
    auto diags = validate_against(*doc, reg);
    for (const auto& d : diags) std::cerr << spec_path.string() << ": " << to_string(d) << "\n";
    if (has_errors(diags)) throw ValidationError("query does not match the dataset");
  }
  return reg;
}

std::map<Strategy, double> parse_mix(const std::string& text) {
  std::map<Strategy, double> mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("--mix entries must look like name=weight");
    std::string name = item.substr(0, eq);
    std::optional<Strategy> strat;
    for (auto s : kStrategies)
      if (strategy_name(s) == name) strat = s;
    if (!strat) throw ValidationError("unknown strategy '" + name + "' (deliberate, hurried, scattered)");
    try {
      mix[*strat] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ValidationError("bad weight in --mix entry '" + item + "'");
    }
  }
  return mix;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    int rc = fn();
    flush_warnings();
    return rc;
  } catch (const ValidationError& e) {
    flush_warnings();
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    // write failures surface as runtime_error from the animation writer
    return what.starts_with("cannot open") || what.starts_with("write failed") ? kIo : kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinetiq - animated kinetic-query line charts"};
  app.require_subcommand(1);

  std::string spec_path, data_path, out_path, format;
  int frames = 0, fps = 0;
  auto* render = app.add_subcommand("render", "Render the animation loop for a query document");
  render->add_option("spec", spec_path, "Query document (JSON)")->required();
  render->add_option("data", data_path, "Dataset (JSONL); defaults to the document's dataset field");
  render->add_option("-o,--out", out_path, "Output file (directory for png_sequence)")->required();
  render->add_option("--frames", frames, "Override render.n_frames")->check(CLI::PositiveNumber);
  render->add_option("--fps", fps, "Override render.fps")->check(CLI::PositiveNumber);
  render->add_option("--format", format, "Override render.format")
      ->check(CLI::IsMember({"apng", "gif", "png_sequence"}));

  double t = 0.0;
  auto* frame = app.add_subcommand("frame", "Render one still PNG at loop phase t");
  frame->add_option("spec", spec_path, "Query document (JSON)")->required();
  frame->add_option("data", data_path, "Dataset (JSONL)");
  frame->add_option("--t", t, "Loop phase (any real; taken mod 1)")->required();
  frame->add_option("-o,--out", out_path, "Output PNG")->required();

  bool as_json = false;
  auto* params = app.add_subcommand("params", "List every selectable parameter and its domain");
  params->add_option("data", data_path, "Dataset (JSONL)")->required();
  params->add_flag("--json", as_json, "Emit JSON keyed by parameter reference");

  auto* validate = app.add_subcommand("validate", "Check a query document, optionally against a dataset");
  validate->add_option("spec", spec_path, "Query document (JSON)")->required();
  validate->add_option("data", data_path, "Dataset (JSONL)");

  std::optional<std::uint64_t> seed;
  SimConfig sim;
  std::string mix, labels_path;
  auto* simgen = app.add_subcommand("simgen", "Generate a seeded synthetic dataset");
  simgen->add_option("--seed", seed, "RNG seed (required)");
  simgen->add_option("--players", sim.n_players)->check(CLI::PositiveNumber);
  simgen->add_option("--turns", sim.n_turns)->check(CLI::PositiveNumber);
  simgen->add_option("--districts", sim.n_districts)->check(CLI::PositiveNumber);
  simgen->add_option("--level", sim.level)->check(CLI::PositiveNumber);
  simgen->add_option("--mix", mix, "Strategy weights, e.g. deliberate=0.7,hurried=0.3");
  simgen->add_option("--labels", labels_path, "Also write player_id<TAB>strategy lines here");
  simgen->add_option("-o,--out", out_path, "Output JSONL")->required();

  int port = 8080;
  std::string host = "127.0.0.1", data_dir, ui_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--data-dir", data_dir, "Persist uploaded datasets here");
  serve->add_option("--ui-dir", ui_dir, "Serve static workbench files from here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }

  if (*render) {
    return guarded([&] {
      QueryDocument doc = load_spec(spec_path);
      if (frames > 0) doc.render.n_frames = frames;
      if (fps > 0) doc.render.fps = fps;
      if (!format.empty()) doc.render.format = *parse_format(format);
      Dataset ds = load_dataset(resolve_data(data_path, doc, spec_path));
      ParameterRegistry reg = checked_registry(ds, &doc, spec_path);
      auto anim = render_animation(doc.query, ds, reg, doc.render);
      write_animation(out_path, anim);
      return static_cast<int>(kOk);
    });
  }
  if (*frame) {
    return guarded([&] {
      QueryDocument doc = load_spec(spec_path);
      Dataset ds = load_dataset(resolve_data(data_path, doc, spec_path));
      ParameterRegistry reg = checked_registry(ds, &doc, spec_path);
      write_bytes(out_path, encode_png(render_still(doc.query, ds, reg, doc.render, t)));
      return static_cast<int>(kOk);
    });
  }
  if (*params) {
    return guarded([&] {
      Dataset ds = load_dataset(data_path);
      ParameterRegistry reg = checked_registry(ds, nullptr, {});
      if (as_json) {
        std::cout << registry_json(reg).dump(2) << "\n";
        return static_cast<int>(kOk);
      }
      std::size_t width = 0;
      for (const auto& ref : reg.refs()) width = std::max(width, to_string(ref).size());
      for (const auto& ref : reg.refs()) {
        std::string name = to_string(ref);
        std::printf("%-*s  ", static_cast<int>(width), name.c_str());
        if (std::holds_alternative<BaselineRef>(ref)) {
          std::printf("constant 1\n");
        } else {
          Domain d = reg.domain(ref);
          std::printf("[%g, %g]\n", d.lo, d.hi);
        }
      }
      return static_cast<int>(kOk);
    });
  }
  if (*validate) {
    return guarded([&] {
      QueryDocument doc = load_spec(spec_path);
      if (!data_path.empty() || !doc.dataset.empty()) {
        Dataset ds = load_dataset(resolve_data(data_path, doc, spec_path));
        checked_registry(ds, &doc, spec_path);
      }
      std::cout << "ok\n";
      return static_cast<int>(kOk);
    });
  }
  if (*simgen) {
    return guarded([&] {
      if (!seed) throw ValidationError("--seed is required");
      sim.seed = *seed;
      if (!mix.empty()) sim.strategy_mix = parse_mix(mix);
      LabeledDataset out = generate_synthetic_labeled(sim);
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw IoError("cannot open " + out_path + " for writing");
      f << serialize_dataset(out.dataset);
      if (!labels_path.empty()) {
        std::ofstream l(labels_path);
        if (!l) throw IoError("cannot open " + labels_path + " for writing");
        for (std::size_t i = 0; i < out.strategies.size(); ++i)
          l << out.dataset.playthroughs[i].player_id << '\t' << strategy_name(out.strategies[i]) << '\n';
      }
      return static_cast<int>(kOk);
    });
  }
  if (*serve) {
    return guarded([&] {
      ServiceOptions opts;
      if (!data_dir.empty()) opts.data_dir = data_dir;
      if (!ui_dir.empty()) opts.ui_dir = ui_dir;
      Service service(opts);
      httplib::Server svr;
      service.mount(svr);
      int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      if (!svr.listen_after_bind()) throw IoError("server stopped unexpectedly");
      return static_cast<int>(kOk);
    });
  }
  return kInternal;
}
