// layoutforge command line driver.
#include "layoutforge/kernels.hpp"
#include "layoutforge/metrics.hpp"
#include "layoutforge/pipeline.hpp"
#include "layoutforge/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace layoutforge;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 2, kStage = 3, kStrict = 4 };

struct Options {
  std::string bundle, assets, out, pred, gt;
  int jobs = 0;
  std::optional<std::uint64_t> seed;
  bool strict = false, trace = false, obj = false, no_refine = false, no_settle = false;
  int objects = 12;
  double noise = 0, descriptor_noise = 0;
  std::optional<int> anneal_iters;
};

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
  f << text;
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Stage artifacts in the work directory, each stamped with the hash of
// everything it was computed from.
class WorkDir {
 public:
  explicit WorkDir(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    if (fs::exists(index_path())) {
      try {
        index_ = json::parse(read_text(index_path()));
      } catch (const json::exception&) {
        index_ = json::object();
      }
    }
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  bool fresh(const std::string& stage, const std::string& file, const std::string& key) const {
    return index_.contains(stage) && index_[stage] == key && fs::exists(path(file));
  }
  void stamp(const std::string& stage, const std::string& key) {
    index_[stage] = key;
    write_text(index_path(), index_.dump(2) + "\n");
  }

 private:
  fs::path index_path() const { return dir_ / "cache.json"; }
  fs::path dir_;
  json index_ = json::object();
};

PipelineConfig make_config(const Options& o) {
  PipelineConfig cfg;
  if (o.seed) cfg.set_seed(*o.seed);
  cfg.apply_env_seed();
  cfg.run_refine = !o.no_refine;
  cfg.run_settle = !o.no_settle;
  if (o.anneal_iters) cfg.refine.anneal.iters = *o.anneal_iters;
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::Validation, std::string(flag) + " is required");
}

enum class Stage { Parse, Graph, Retrieve, Pose, Layout };

struct Runner {
  const Options& opt;
  Stage target;
  PipelineConfig cfg;
  WorkDir work;
  SceneBundle bundle;
  std::optional<AssetLibrary> library;
  std::uint64_t bundle_hash = 0, library_hash = 0;
  bool relaxed = false;

  Runner(const Options& o, Stage t) : opt(o), target(t), cfg(make_config(o)), work(o.out) {
    require(o.bundle, "--bundle");
    bundle = load_bundle(o.bundle);
    bundle_hash = hash_directory(o.bundle);
    if (t >= Stage::Retrieve) {
      require(o.assets, "--assets");
      library = load_library(o.assets);
      library_hash = hash_directory(o.assets);
    }
  }

  std::string key(Stage s) const {
    std::uint64_t h = fnv1a(cfg.to_json(), bundle_hash);
    h = fnv1a(std::to_string(static_cast<int>(s)), h);
    if (s >= Stage::Retrieve) h = fnv1a(hex(library_hash), h);
    return hex(h);
  }

  // Reuses a fresh artifact, computes it when this command owns the stage,
  // otherwise reports the missing dependency.
  bool must_run(Stage s, const char* name, const char* file) {
    if (work.fresh(name, file, key(s))) return false;
    if (s == target || target == Stage::Layout) return true;
    throw Error(ErrorCode::StageDependency,
                std::string("'") + name + "' output missing or stale in " + opt.out + "; run `layoutforge " +
                    name + "` first");
  }

  SceneParse parse() {
    if (!must_run(Stage::Parse, "parse", "parse.json")) return parse_from_json(read_text(work.path("parse.json")));
    SceneParse p = parse_scene(bundle, cfg);
    write_text(work.path("parse.json"), parse_to_json(p));
    work.stamp("parse", key(Stage::Parse));
    return p;
  }

  GraphStage graph(const SceneParse& p) {
    if (!must_run(Stage::Graph, "graph", "graph.json")) {
      GraphStage g;
      g.graph = graph_from_json(read_text(work.path("graph.json")));
      g.refined = refine_obbs(g.graph, p.obbs, p.room);
      return g;
    }
    GraphStage g = graph_stage(bundle, p, cfg);
    write_text(work.path("graph.json"), graph_to_json(g.graph));
    work.stamp("graph", key(Stage::Graph));
    return g;
  }

  RetrievalTable retrieve(const SceneParse& p, const GraphStage& g, std::vector<std::string>* warnings) {
    if (!must_run(Stage::Retrieve, "retrieve", "retrieval.json")) {
      return retrieval_from_json(read_text(work.path("retrieval.json")));
    }
    RetrievalTable t = retrieve_stage(bundle, *library, p, g, cfg, warnings);
    write_text(work.path("retrieval.json"), retrieval_to_json(t));
    work.stamp("retrieve", key(Stage::Retrieve));
    return t;
  }

  LayoutDocument pose(const SceneParse& p, const GraphStage& g, const RetrievalTable& t) {
    if (!must_run(Stage::Pose, "pose", "posed.json")) return load_layout(work.path("posed.json"));
    LayoutDocument doc = pose_stage(bundle, *library, p, g, t, cfg);
    save_layout(doc, work.path("posed.json"));
    work.stamp("pose", key(Stage::Pose));
    return doc;
  }

  void layout(const LayoutDocument& posed, const GraphStage& g, std::vector<std::string> warnings) {
    if (!must_run(Stage::Layout, "layout", "layout.json")) {
      const json st = json::parse(read_text(work.path("refine.json")));
      relaxed = st.at("relaxed").get<bool>();
      return;
    }
    LayoutDocument doc;
    json st = {{"relaxed", false}};
    if (cfg.run_refine) {
      RefineStage r = refine_stage(posed, bundle, *library, g, cfg);
      doc = std::move(r.layout);
      relaxed = r.state.relaxed;
      st = {{"relaxed", r.state.relaxed},
            {"initial_objective", std::isfinite(r.initial_objective) ? json(r.initial_objective) : json(nullptr)},
            {"final_objective", std::isfinite(r.state.objective) ? json(r.state.objective) : json(nullptr)},
            {"overlap_cells", r.state.overlap},
            {"proposals", r.state.trace.size()}};
      warnings.insert(warnings.end(), r.state.warnings.begin(), r.state.warnings.end());
      if (opt.trace) write_trace_csv(r.state.trace, work.path("trace.csv"));
    } else {
      doc = local_refine(posed, g.graph, cfg.refine);
    }
    if (cfg.run_settle) {
      try {
        doc = settle(doc, g.graph, &*library, cfg.refine);
      } catch (const Error& e) {
        throw Error(e.code(), std::string("stage 'settle': ") + e.what());
      }
    }
    for (const std::string& w : warnings) {
      if (std::find(doc.warnings.begin(), doc.warnings.end(), w) == doc.warnings.end()) doc.warnings.push_back(w);
    }
    save_layout(doc, work.path("layout.json"));
    write_text(work.path("refine.json"), st.dump(2) + "\n");
    write_text(work.path("config.json"), cfg.to_json() + "\n");
    work.stamp("layout", key(Stage::Layout));
  }

  int run() {
    const SceneParse p = parse();
    if (target == Stage::Parse) return kOk;
    const GraphStage g = graph(p);
    if (target == Stage::Graph) return kOk;
    std::vector<std::string> warnings = p.warnings;
    warnings.insert(warnings.end(), g.warnings.begin(), g.warnings.end());
    const RetrievalTable t = retrieve(p, g, &warnings);
    if (target == Stage::Retrieve) return kOk;
    const LayoutDocument posed = pose(p, g, t);
    if (target == Stage::Pose) return kOk;
    layout(posed, g, warnings);
    const LayoutDocument doc = load_layout(work.path("layout.json"));
    if (opt.obj) write_obj(doc, work.path("layout.obj"));
    const fs::path gt = fs::path(opt.bundle) / "gt.json";
    if (fs::exists(gt)) {
      const EvalReport report = evaluate(doc, load_layout(gt), &*library);
      write_text(work.path("eval.json"), report.to_json());
      write_map_csv(report, work.path("map_curve.csv"));
    }
    for (const std::string& w : doc.warnings) std::cerr << "warning: " << w << "\n";
    if (relaxed && opt.strict) {
      std::cerr << "error: a hard constraint was relaxed (--strict)\n";
      return kStrict;
    }
    return kOk;
  }
};

int run_eval(const Options& o) {
  require(o.pred, "--pred");
  require(o.gt, "--gt");
  std::optional<AssetLibrary> library;
  if (!o.assets.empty()) library = load_library(o.assets);
  const EvalReport report =
      evaluate(load_layout(o.pred), load_layout(o.gt), library ? &*library : nullptr);
  const std::string text = report.to_json();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "eval.json", text);
    write_map_csv(report, fs::path(o.out) / "map_curve.csv");
  }
  std::cout << text;
  return kOk;
}

int run_synth(const Options& o) {
  require(o.out, "--out");
  SynthConfig sc;
  sc.objects = o.objects;
  if (o.seed) sc.seed = *o.seed;
  if (const char* s = std::getenv("LAYOUTFORGE_SEED")) sc.seed = std::strtoull(s, nullptr, 10);
  sc.depth_noise = o.noise;
  sc.descriptor_noise = o.descriptor_noise;
  const SynthLibrary lib = make_synth_library();
  const SynthScene scene = make_synth_scene(lib, sc);
  const fs::path out(o.out);
  save_bundle(scene.bundle, out);
  save_layout(scene.truth, out / "gt.json");
  save_library(lib.library, o.assets.empty() ? out / "assets" : fs::path(o.assets));
  for (const std::string& w : scene.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layoutforge: single-image indoor layout reconstruction"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c, bool assets) {
    c->add_option("--bundle", o.bundle, "scene bundle directory");
    if (assets) c->add_option("--assets", o.assets, "asset library directory");
    c->add_option("--out", o.out, "work directory");
    c->add_option("--jobs", o.jobs, "worker thread cap")->check(CLI::NonNegativeNumber);
    c->add_option("--seed", o.seed, "seed for every random stage");
    c->add_flag("--strict", o.strict, "exit 4 when a hard constraint had to be relaxed");
  };
  std::map<CLI::App*, Stage> stages;
  stages[app.add_subcommand("parse", "room planes and per-object boxes")] = Stage::Parse;
  stages[app.add_subcommand("graph", "support tree")] = Stage::Graph;
  stages[app.add_subcommand("retrieve", "asset retrieval")] = Stage::Retrieve;
  stages[app.add_subcommand("pose", "rotation, translation and scale")] = Stage::Pose;
  CLI::App* layout = app.add_subcommand("layout", "full pipeline");
  stages[layout] = Stage::Layout;
  for (auto& [c, s] : stages) {
    common(c, s >= Stage::Retrieve);
    c->get_option("--bundle")->required();
    c->get_option("--out")->required();
  }
  layout->add_flag("--trace", o.trace, "write the annealing trace");
  layout->add_flag("--obj", o.obj, "write an OBJ of the posed boxes");
  layout->add_flag("--no-refine", o.no_refine, "skip the translation optimization");
  layout->add_flag("--no-settle", o.no_settle, "skip the gravity settle");
  layout->add_option("--anneal-iters", o.anneal_iters, "annealing proposals")->check(CLI::NonNegativeNumber);

  CLI::App* eval = app.add_subcommand("eval", "compare a layout to ground truth");
  eval->add_option("--pred", o.pred)->required();
  eval->add_option("--gt", o.gt)->required();
  eval->add_option("--assets", o.assets, "asset library for voxel shapes");
  eval->add_option("--out", o.out);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic bundle with ground truth");
  synth->add_option("--objects", o.objects)->check(CLI::Range(1, 40));
  synth->add_option("--seed", o.seed);
  synth->add_option("--noise", o.noise, "depth noise sigma in meters")->check(CLI::NonNegativeNumber);
  synth->add_option("--descriptor-noise", o.descriptor_noise)->check(CLI::NonNegativeNumber);
  synth->add_option("--out", o.out)->required();
  synth->add_option("--assets", o.assets, "library output (default <out>/assets)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  if (o.jobs > 0) kernels::set_threads(o.jobs);
  try {
    if (eval->parsed()) return run_eval(o);
    if (synth->parsed()) return run_synth(o);
    for (auto& [c, s] : stages) {
      if (c->parsed()) return Runner(o, s).run();
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return is_input_error(e.code()) ? kInput : kStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStage;
  }
  return kInput;
}
