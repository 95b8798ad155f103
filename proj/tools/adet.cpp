// adet: command-line driver for the adaptive detection pipeline.
//
//   adet gen-corpus    corpus descriptors and ground truth
//   adet train         detector catalog
//   adet eval          detection quality of one catalog variant
//   adet profile       every variant over the profiling corpus
//   adet solve         transition model and MDP policy
//   adet bench         five-strategy stream benchmark
//   adet maze          end-to-end maze episodes
//   adet dump-policy   policy table
//   adet map           ASCII map of a maze
//
// Exit codes: 0 success, 1 usage error, 2 missing or stale artifacts,
// 3 acceptance threshold failure (with --check).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adet/adet.hpp"

namespace fs = std::filesystem;
using namespace adet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitArtifacts = 2;
constexpr int kExitThreshold = 3;

struct ArtifactError : Error {
  using Error::Error;
};

struct ThresholdFailure : Error {
  using Error::Error;
};

void log(const std::string& msg) { std::cerr << "[adet] " << msg << '\n'; }

// ---------------------------------------------------------------------------
// Workspace: the output root plus a manifest of content hashes. Every
// artifact records the hashes of the artifacts it was built from, so a
// consumer can tell when an input changed underneath it.

class Workspace {
 public:
  explicit Workspace(fs::path root) : root_(std::move(root)) {
    const fs::path m = root_ / "manifest.json";
    if (fs::exists(m)) manifest_ = Json::parse(read_file(m));
    if (!manifest_.is_object() || !manifest_.contains("artifacts")) manifest_ = Json{{"artifacts", Json::object()}};
  }

  const fs::path& root() const { return root_; }

  // Reads an input artifact after checking that it is recorded, unmodified
  // and built from the current versions of its own inputs.
  std::string require(const std::string& name) {
    const fs::path p = root_ / name;
    if (!fs::exists(p)) throw ArtifactError("missing artifact " + p.string() + " (run the producing command first)");
    const Json& arts = manifest_["artifacts"];
    if (!arts.contains(name)) throw ArtifactError("artifact " + name + " is not recorded in the manifest");
    std::string bytes = read_file(p);
    const Json& e = arts[name];
    if (e.at("hash").get<std::string>() != content_hash(bytes))
      throw ArtifactError("artifact " + name + " was modified after it was written");
    for (const auto& [input, hash] : e.at("inputs").items()) {
      if (!arts.contains(input) || arts[input].at("hash") != hash)
        throw ArtifactError("artifact " + name + " is stale: " + input + " changed since it was built (re-run " +
                            e.at("command").get<std::string>() + ")");
    }
    inputs_[name] = content_hash(bytes);
    return bytes;
  }

  Json require_json(const std::string& name) { return Json::parse(require(name)); }

  void write(const std::string& name, const std::string& content, const std::string& command) {
    write_file_atomic(root_ / name, content);
    Json inputs = Json::object();
    for (const auto& [k, v] : inputs_) inputs[k] = v;
    manifest_["artifacts"][name] = Json{{"hash", content_hash(content)}, {"command", command}, {"inputs", inputs}};
    write_file_atomic(root_ / "manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  fs::path root_;
  Json manifest_;
  std::map<std::string, std::string> inputs_;
};

// Minimal RFC 4180 reader, used to mirror CSV reports as JSON.
Json csv_to_json(const std::string& csv) {
  std::vector<std::vector<std::string>> rows(1);
  std::string cell;
  bool quoted = false, row_started = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char ch = csv[i];
    if (quoted) {
      if (ch == '"' && i + 1 < csv.size() && csv[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
      row_started = true;
    } else if (ch == ',') {
      rows.back().push_back(std::move(cell));
      cell.clear();
      row_started = true;
    } else if (ch == '\n') {
      rows.back().push_back(std::move(cell));
      cell.clear();
      rows.emplace_back();
      row_started = false;
    } else {
      cell += ch;
      row_started = true;
    }
  }
  if (row_started) rows.back().push_back(std::move(cell));
  if (rows.back().empty()) rows.pop_back();
  Json out = Json::array();
  if (rows.empty()) return out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Json o = Json::object();
    for (std::size_t c = 0; c < rows[0].size(); ++c) o[rows[0][c]] = c < rows[r].size() ? rows[r][c] : "";
    out.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Shared options

struct Options {
  std::string out;
  std::string config;
  std::optional<std::uint64_t> seed;
  bool json = false;
  bool check = false;

  // corpora
  std::optional<int> profile_sequences, bench_sequences, heldout_sequences, frames;
  // training
  std::optional<int> epochs, mining_rounds;
  // solve
  std::optional<double> gamma, w_opt, w_ge, w_ua, alpha;
  // controller
  std::optional<double> score_threshold;
  std::optional<int> retrigger, reinit;
  // eval
  std::optional<int> variant;
  // maze
  std::optional<int> maze_seeds;
  std::vector<std::string> difficulties, strategies;
  bool traces = false;
  bool streams = false;
  std::string difficulty = "hard";
  int seed_index = 0;
  double cell_cm = 50.0;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c;
  if (!o.config.empty()) apply_config(Json::parse(read_file(o.config)), c);
  if (o.seed) c.seed = *o.seed;
  if (o.profile_sequences) c.profile_sequences = *o.profile_sequences;
  if (o.bench_sequences) c.bench_sequences = *o.bench_sequences;
  if (o.heldout_sequences) c.heldout_sequences = *o.heldout_sequences;
  if (o.frames) c.frames_per_sequence = *o.frames;
  if (o.epochs) c.models.svm.epochs = *o.epochs;
  if (o.mining_rounds) c.models.mining_rounds = *o.mining_rounds;
  if (o.gamma) c.solve.gamma = *o.gamma;
  if (o.w_opt) c.solve.reward.w_opt = *o.w_opt;
  if (o.w_ge) c.solve.reward.w_ge = *o.w_ge;
  if (o.w_ua) c.solve.reward.w_ua = *o.w_ua;
  if (o.alpha) c.solve.reward.alpha = *o.alpha;
  if (o.score_threshold) c.controller.score_threshold = c.nav.score_threshold = *o.score_threshold;
  if (o.retrigger) c.controller.retrigger_mdp = *o.retrigger;
  if (o.reinit) c.controller.reinit_klt = *o.reinit;
  if (o.maze_seeds) c.maze_seeds = *o.maze_seeds;
  if (!o.difficulties.empty()) {
    c.mazes.clear();
    for (const auto& d : o.difficulties) c.mazes.push_back(parse_difficulty(d));
  }
  if (!o.strategies.empty()) {
    c.maze_strategies.clear();
    for (const auto& s : o.strategies) c.maze_strategies.push_back(parse_strategy(s));
  }
  c.validate();
  return c;
}

fs::path output_root(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("ADET_OUT"); env && *env) return env;
  return "adet_out";
}

void emit(Workspace& ws, const Options& o, const std::string& name, const std::string& csv, const std::string& command) {
  ws.write(name + ".csv", csv, command);
  if (o.json) ws.write(name + ".json", csv_to_json(csv).dump(2) + "\n", command);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Loaders

struct CorpusDocument {
  std::map<std::string, std::vector<SequenceSpec>> corpora;
  std::map<std::string, int> stride;
};

CorpusDocument load_corpus(Workspace& ws) {
  const Json j = ws.require_json("corpus.json");
  CorpusDocument d;
  for (const auto& [name, c] : j.at("corpora").items()) {
    d.stride[name] = c.at("stride").get<int>();
    auto& v = d.corpora[name];
    for (const auto& s : c.at("sequences")) v.push_back(sequence_from_json(s));
  }
  for (const char* need : {"profile", "bench", "heldout"})
    if (!d.corpora.count(need)) throw ArtifactError(std::string("corpus.json lacks the ") + need + " corpus");
  return d;
}

Catalog load_catalog(Workspace& ws) { return catalog_from_json(ws.require_json("catalog.json")); }

ProfileRun load_profile(Workspace& ws, const Catalog& cat) {
  ProfileRun run;
  run.profiles = profiles_from_json(ws.require_json("profiles.json"), cat);
  const Json d = ws.require_json("detections.json");
  for (const auto& per_variant : d.at("detections")) {
    std::vector<Detection> v;
    for (const auto& det : per_variant) v.push_back(detection_from_json(det));
    run.detections.push_back(std::move(v));
  }
  if (run.detections.size() != cat.size()) throw ArtifactError("detections.json does not match the catalog");
  return run;
}

PolicyDocument load_policy(Workspace& ws) { return policy_from_json(ws.require_json("policy.json")); }

std::vector<VariantSpec> frontier_specs(const Catalog& cat, const PolicyDocument& doc) {
  std::vector<VariantSpec> specs;
  for (int v : doc.frontier) specs.push_back(cat.specs.at(static_cast<std::size_t>(v)));
  return specs;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_gen_corpus(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  Json corpora = Json::object();
  std::ostringstream truth;
  truth << "corpus,sequence,frame,clutter,illumination,label,x,y,w,h,distance\n";
  int out_of_bounds = 0;
  const std::pair<const char*, std::pair<int, int>> sets[] = {{"profile", {c.profile_sequences, c.profile_stride}},
                                                              {"bench", {c.bench_sequences, 1}},
                                                              {"heldout", {c.heldout_sequences, c.heldout_stride}}};
  for (const auto& [name, size] : sets) {
    const auto specs = make_corpus(c.corpus(name, size.first));
    Json seqs = Json::array();
    for (const auto& s : specs) {
      seqs.push_back(to_json(s));
      const SequenceRenderer r(s);
      for (int t = 0; t < s.frames; t += size.second) {
        const LabeledFrame lf = r.frame(t);
        if (!lf.truth) continue;
        const BBox& b = lf.truth->box;
        if (b.x < 0 || b.y < 0 || b.right() > lf.frame.width() || b.bottom() > lf.frame.height()) ++out_of_bounds;
        truth << name << ',' << s.id << ',' << t << ',' << kClutterNames[s.clutter_bucket] << ','
              << kIlluminationNames[s.illumination_bucket] << ',' << sign_name(static_cast<SignClass>(lf.truth->label))
              << ',' << fmt(b.x, 3) << ',' << fmt(b.y, 3) << ',' << fmt(b.w, 3) << ',' << fmt(b.h, 3) << ','
              << fmt(lf.truth->distance, 3) << '\n';
      }
    }
    corpora[name] = Json{{"stride", size.second}, {"sequences", seqs}};
    log(std::string(name) + ": " + std::to_string(specs.size()) + " sequences");
  }
  if (out_of_bounds) throw Error("corpus: " + std::to_string(out_of_bounds) + " ground-truth boxes leave the frame");
  const Json doc{{"format", "adet-corpus"}, {"seed", hex_seed(c.seed)}, {"corpora", corpora}};
  ws.write("corpus.json", doc.dump(1) + "\n", "gen-corpus");
  emit(ws, o, "corpus_truth", truth.str(), "gen-corpus");
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const auto t0 = std::chrono::steady_clock::now();
  const Catalog cat = train_catalog(c);
  log("trained " + std::to_string(cat.size()) + " variants on " + std::to_string(cat.sets.size()) + " model sets in " +
      fmt(seconds_since(t0), 1) + " s");
  ws.write("catalog.json", catalog_to_json(cat).dump() + "\n", "train");
  return 0;
}

int cmd_eval(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const CorpusDocument corpus = load_corpus(ws);
  const std::size_t v = o.variant ? static_cast<std::size_t>(*o.variant) : full_parameter_variant(cat);
  if (v >= cat.size()) throw Error("eval: variant index out of range");
  const auto frames = render_corpus(corpus.corpora.at("heldout"), corpus.stride.at("heldout"));
  const QualityReport r = detection_quality(cat, v, frames, c.controller.score_threshold);
  const Table t = quality_table(r);
  emit(ws, o, "detection_quality", t.csv(), "eval");
  std::cout << pretty(t);
  const double f1 = r.rows.front().counts.f1();
  if (o.check && f1 < 0.8) throw ThresholdFailure("F1 " + fmt(f1, 3) + " below 0.8");
  return 0;
}

int cmd_profile(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const CorpusDocument corpus = load_corpus(ws);
  const auto frames = render_corpus(corpus.corpora.at("profile"), corpus.stride.at("profile"));
  const auto t0 = std::chrono::steady_clock::now();
  const ProfileRun run = profile(cat, frames, c.controller.score_threshold);
  log("profiled " + std::to_string(cat.size()) + " variants on " + std::to_string(frames.size()) + " frames in " +
      fmt(seconds_since(t0), 1) + " s");
  Json dets = Json::array();
  for (const auto& per_variant : run.detections) {
    Json a = Json::array();
    for (const auto& d : per_variant) a.push_back(to_json(d));
    dets.push_back(a);
  }
  ws.write("detections.json", Json{{"format", "adet-detections"}, {"detections", dets}}.dump() + "\n", "profile");
  ws.write("profiles.json", profiles_to_json(run.profiles).dump(2) + "\n", "profile");
  emit(ws, o, "profiles", profiles_csv(run.profiles), "profile");
  return 0;
}

int cmd_solve(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const CorpusDocument corpus = load_corpus(ws);
  const ProfileRun run = load_profile(ws, cat);
  const auto frames = render_corpus(corpus.corpora.at("profile"), corpus.stride.at("profile"));
  if (run.detections.front().size() != frames.size()) throw ArtifactError("detections.json does not match the corpus");
  const PolicyDocument doc = build_policy(run, frames, c.solve);
  const double gap = greediness_gap(doc.policy, doc.transitions, doc.reward);
  log("frontier " + std::to_string(doc.frontier.size()) + " of " + std::to_string(cat.size()) + " variants, " +
      std::to_string(doc.policy.residuals.size()) + " sweeps, greediness gap " + std::to_string(gap));
  if (gap > 1e-6) throw Error("solve: policy fails the greediness re-check");
  ws.write("policy.json", policy_to_json(doc).dump(2) + "\n", "solve");
  const auto specs = frontier_specs(cat, doc);
  emit(ws, o, "policy", policy_csv(doc, specs), "solve");
  return 0;
}

int cmd_bench(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const CorpusDocument corpus = load_corpus(ws);
  const PolicyDocument doc = load_policy(ws);
  const ControllerAssets assets = make_assets(cat, doc);
  const auto t0 = std::chrono::steady_clock::now();
  const BenchReport rep = run_bench(assets, corpus.corpora.at("bench"), c, o.streams);
  log("bench finished in " + fmt(seconds_since(t0), 1) + " s");
  emit(ws, o, "bench", bench_table(rep.rows).csv(), "bench");
  const Table summary = bench_table(rep.overall);
  emit(ws, o, "bench_summary", summary.csv(), "bench");
  if (o.streams) {
    const auto& specs = corpus.corpora.at("bench");
    for (std::size_t s = 0; s < rep.streams.size(); ++s) {
      for (std::size_t q = 0; q < rep.streams[s].size(); ++q) {
        std::ostringstream os;
        write_outcomes_csv(os, rep.streams[s][q].outcomes, rep.streams[s][q].ious);
        emit(ws, o, std::string("streams/") + strategy_name(kAllStrategies[s]) + "_" + std::to_string(specs[q].id),
             os.str(), "bench");
      }
    }
  }
  std::cout << pretty(summary);

  const auto& st = rep.total(Strategy::Static).metrics;
  const auto& md = rep.total(Strategy::Mdp).metrics;
  const auto& stt = rep.total(Strategy::StaticTracker).metrics;
  const auto& mdt = rep.total(Strategy::MdpTracker).metrics;
  std::vector<std::string> failed;
  if (md.mean_cost() > 0.8 * st.mean_cost()) failed.push_back("mdp cost above 80% of static");
  if (md.f1() < 0.9 * st.f1()) failed.push_back("mdp F1 below 90% of static");
  if (mdt.mean_cost() > 0.85 * stt.mean_cost()) failed.push_back("mdp_tracker cost above 85% of static_tracker");
  if (mdt.detect_fraction() >= 0.2) failed.push_back("mdp_tracker detects on 20% of frames or more");
  for (const auto& f : failed) log("threshold: " + f);
  if (o.check && !failed.empty()) throw ThresholdFailure(std::to_string(failed.size()) + " bench threshold(s) failed");
  return 0;
}

int cmd_maze(const Options& o) {
  const ExperimentConfig c = resolve(o);
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const PolicyDocument doc = load_policy(ws);
  const ControllerAssets assets = make_assets(cat, doc);
  const MazeReport rep = run_mazes(assets, c, [&](const MazeRun& run, const EpisodeResult& e) {
    log(std::string(difficulty_name(run.difficulty)) + "/" + strategy_name(run.strategy) + " seed " + hex_seed(run.seed) +
        ": " + e.metrics.end_reason + " after " + fmt(e.metrics.time_to_completion, 1) + " s, " +
        fmt(e.metrics.avg_fps, 2) + " fps");
    if (!o.traces) return;
    std::ostringstream os;
    write_trace_csv(os, e.trace);
    emit(ws, o,
         std::string("traces/") + difficulty_name(run.difficulty) + "_" + strategy_name(run.strategy) + "_" +
             hex_seed(run.seed),
         os.str(), "maze");
  });
  emit(ws, o, "maze_runs", maze_runs_table(rep).csv(), "maze");
  const Table cells = maze_cells_table(rep);
  emit(ws, o, "maze_table", cells.csv(), "maze");
  const std::size_t cols[] = {0, 1, 2, 3, 4, 5, 6};
  std::cout << pretty(cells, cols);

  std::vector<std::string> failed;
  for (const auto& r : rep.runs)
    if (!r.metrics.success)
      failed.push_back(std::string(difficulty_name(r.difficulty)) + "/" + strategy_name(r.strategy) + " did not finish");
  const bool paired = std::count(c.maze_strategies.begin(), c.maze_strategies.end(), Strategy::Static) &&
                      std::count(c.maze_strategies.begin(), c.maze_strategies.end(), Strategy::MdpTracker);
  if (paired) {
    for (Difficulty d : c.mazes) {
      const auto& s = rep.cell(d, Strategy::Static);
      const auto& a = rep.cell(d, Strategy::MdpTracker);
      if (a.time_mean > 0.5 * s.time_mean) failed.push_back(std::string(difficulty_name(d)) + ": time above 0.5x static");
      if (a.fps_mean < 2.0 * s.fps_mean) failed.push_back(std::string(difficulty_name(d)) + ": fps below 2x static");
    }
  }
  for (const auto& f : failed) log("threshold: " + f);
  if (o.check && !failed.empty()) throw ThresholdFailure(std::to_string(failed.size()) + " maze threshold(s) failed");
  return 0;
}

int cmd_dump_policy(const Options& o) {
  Workspace ws(output_root(o));
  const Catalog cat = load_catalog(ws);
  const PolicyDocument doc = load_policy(ws);
  const auto specs = frontier_specs(cat, doc);
  std::cout << "frontier:\n";
  for (std::size_t a = 0; a < specs.size(); ++a)
    std::cout << "  " << a << "  " << specs[a].name() << "  rel_cost " << fmt(doc.rel_cost[a], 3) << '\n';
  std::cout << "condition edges: " << fmt(doc.buckets.edges[0], 4) << ", " << fmt(doc.buckets.edges[1], 4) << "\n\n";
  Table t{{"condition", "category", "variant", "action", "value"}, {}};
  for (std::size_t i = 0; i < doc.policy.size(); ++i) {
    const MdpState s = doc.policy.state(i);
    t.rows.push_back({std::to_string(s.condition), category_name(s.category), std::to_string(s.variant),
                      std::to_string(doc.policy.action[i]), fmt(doc.policy.value[i], 4)});
  }
  if (o.json)
    std::cout << t.json().dump(2) << '\n';
  else
    std::cout << pretty(t);
  return 0;
}

int cmd_map(const Options& o) {
  const ExperimentConfig c = resolve(o);
  const Difficulty d = parse_difficulty(o.difficulty);
  const World w = build_maze(MazeSpec::of(d), maze_seed(c, o.seed_index), c.layout);
  std::cout << difficulty_name(d) << " maze, seed " << hex_seed(w.seed) << ", route " << fmt(path_length(w), 0)
            << " cm\n"
            << ascii_map(w, o.cell_cm);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive detection pipeline: corpus, training, profiling, policy, benchmarks and maze runs"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("-o,--out", o.out, "Output root (default $ADET_OUT or ./adet_out)");
    s->add_option("-c,--config", o.config, "JSON config file; flags override it")->check(CLI::ExistingFile);
    s->add_option("--seed", o.seed, "Root seed");
    s->add_flag("--json", o.json, "Mirror every CSV report as JSON");
  };
  auto corpora = [&](CLI::App* s) {
    s->add_option("--profile-sequences", o.profile_sequences, "Profiling sequences per condition")->check(CLI::PositiveNumber);
    s->add_option("--bench-sequences", o.bench_sequences, "Benchmark sequences per condition")->check(CLI::PositiveNumber);
    s->add_option("--heldout-sequences", o.heldout_sequences, "Held-out sequences per condition")->check(CLI::PositiveNumber);
    s->add_option("--frames", o.frames, "Frames per sequence")->check(CLI::PositiveNumber);
  };
  auto controller = [&](CLI::App* s) {
    s->add_option("--score-threshold", o.score_threshold, "Detector score threshold");
    s->add_option("--retrigger", o.retrigger, "Frames between forced MDP re-detections")->check(CLI::PositiveNumber);
    s->add_option("--reinit", o.reinit, "Frames between KLT re-initialisations")->check(CLI::PositiveNumber);
  };

  std::map<CLI::App*, std::function<int(const Options&)>> handlers;

  auto* gen = app.add_subcommand("gen-corpus", "Write corpus descriptors and ground truth");
  common(gen);
  corpora(gen);
  handlers[gen] = cmd_gen_corpus;

  auto* train = app.add_subcommand("train", "Train the detector catalog");
  common(train);
  train->add_option("--epochs", o.epochs, "SVM epochs")->check(CLI::PositiveNumber);
  train->add_option("--mining-rounds", o.mining_rounds, "Hard-negative mining rounds")->check(CLI::NonNegativeNumber);
  handlers[train] = cmd_train;

  auto* eval = app.add_subcommand("eval", "Detection quality on the held-out corpus");
  common(eval);
  eval->add_option("--variant", o.variant, "Catalog index (default: full-parameter variant)")->check(CLI::NonNegativeNumber);
  eval->add_option("--score-threshold", o.score_threshold, "Detector score threshold");
  eval->add_flag("--check", o.check, "Exit 3 if F1 < 0.8");
  handlers[eval] = cmd_eval;

  auto* prof = app.add_subcommand("profile", "Run every variant over the profiling corpus");
  common(prof);
  prof->add_option("--score-threshold", o.score_threshold, "Detector score threshold");
  handlers[prof] = cmd_profile;

  auto* solve = app.add_subcommand("solve", "Estimate transitions and solve the MDP");
  common(solve);
  solve->add_option("--gamma", o.gamma, "Discount factor");
  solve->add_option("--w-opt", o.w_opt, "Reward weight for Optimal");
  solve->add_option("--w-ge", o.w_ge, "Reward weight for GoodEnough");
  solve->add_option("--w-ua", o.w_ua, "Reward weight for Unacceptable");
  solve->add_option("--alpha", o.alpha, "Cost exponent");
  handlers[solve] = cmd_solve;

  auto* bench = app.add_subcommand("bench", "Five-strategy stream benchmark");
  common(bench);
  controller(bench);
  bench->add_flag("--streams", o.streams, "Write per-frame outcomes of every stream");
  bench->add_flag("--check", o.check, "Exit 3 if a benchmark threshold fails");
  handlers[bench] = cmd_bench;

  auto* maze = app.add_subcommand("maze", "End-to-end maze episodes");
  common(maze);
  controller(maze);
  maze->add_option("--seeds", o.maze_seeds, "Repeats per (maze, strategy) cell")->check(CLI::PositiveNumber);
  maze->add_option("--difficulty", o.difficulties, "Mazes to run (easy, medium, hard)");
  maze->add_option("--strategy", o.strategies, "Strategies to run");
  maze->add_flag("--traces", o.traces, "Write per-frame traces");
  maze->add_flag("--check", o.check, "Exit 3 if a maze threshold fails");
  handlers[maze] = cmd_maze;

  auto* dump = app.add_subcommand("dump-policy", "Print the solved policy");
  dump->add_option("-o,--out", o.out, "Output root (default $ADET_OUT or ./adet_out)");
  dump->add_flag("--json", o.json, "Print JSON instead of a table");
  handlers[dump] = cmd_dump_policy;

  auto* map = app.add_subcommand("map", "Print an ASCII map of a maze");
  map->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  map->add_option("--seed", o.seed, "Root seed");
  map->add_option("--difficulty", o.difficulty, "easy, medium or hard");
  map->add_option("--index", o.seed_index, "Maze repeat index")->check(CLI::NonNegativeNumber);
  map->add_option("--cell", o.cell_cm, "Centimetres per character")->check(CLI::PositiveNumber);
  handlers[map] = cmd_map;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (const auto& [sub, fn] : handlers)
      if (sub->parsed()) return fn(o);
  } catch (const ArtifactError& e) {
    std::cerr << "adet: " << e.what() << '\n';
    return kExitArtifacts;
  } catch (const ThresholdFailure& e) {
    std::cerr << "adet: " << e.what() << '\n';
    return kExitThreshold;
  } catch (const Json::exception& e) {
    std::cerr << "adet: malformed document: " << e.what() << '\n';
    return kExitArtifacts;
  } catch (const std::exception& e) {
    std::cerr << "adet: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
