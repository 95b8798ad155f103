#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "adet/controller.hpp"
#include "adet/corpus.hpp"
#include "adet/io.hpp"
#include "adet/pipeline.hpp"
#include "adet/sim.hpp"
#include "adet/training.hpp"
#include "adet/variants.hpp"

namespace adet {

// Every knob of a run. Seeds for the individual stages are derived from the
// root seed, so (config, seed) fixes all outputs.
struct ExperimentConfig {
  std::uint64_t seed = 1;

  TrainingSetConfig training;
  ModelTrainingConfig models;
  CatalogGrid grid;

  int profile_sequences = 5;  // per condition
  int profile_stride = 5;
  int bench_sequences = 3;
  int heldout_sequences = 2;
  int heldout_stride = 3;
  int frames_per_sequence = 30;

  SolveConfig solve;
  ControllerConfig controller;

  int maze_seeds = 5;
  std::vector<Difficulty> mazes{Difficulty::Easy, Difficulty::Medium, Difficulty::Hard};
  std::vector<Strategy> maze_strategies{Strategy::Static, Strategy::MdpTracker};
  MazeLayout layout;
  NavConfig nav;
  double maze_timeout = 1800.0;

  std::uint64_t stage_seed(const std::string& stage) const { return derive_seed(seed, stage); }

  TrainingSetConfig training_set() const {
    TrainingSetConfig t = training;
    t.seed = stage_seed("training-set");
    return t;
  }

  CorpusConfig corpus(const std::string& name, int sequences) const {
    CorpusConfig c;
    c.sequences_per_condition = sequences;
    c.frames_per_sequence = frames_per_sequence;
    c.seed = stage_seed(name + "-corpus");
    return c;
  }

  ControllerConfig controller_config(Strategy s) const {
    ControllerConfig c = controller;
    c.strategy = s;
    c.seed = stage_seed("controller");
    c.reward = solve.reward;
    return c;
  }

  void validate() const {
    if (profile_sequences < 1 || bench_sequences < 1 || heldout_sequences < 1 || frames_per_sequence < 1)
      throw Error("config: corpus sizes must be >= 1");
    if (profile_stride < 1 || heldout_stride < 1) throw Error("config: strides must be >= 1");
    if (maze_seeds < 1) throw Error("config: maze_seeds must be >= 1");
    if (mazes.empty() || maze_strategies.empty()) throw Error("config: empty maze grid");
    solve.reward.validate();
    controller.validate();
    nav.validate();
  }
};

// ---------------------------------------------------------------------------
// Config files: a JSON object whose keys override the defaults.

namespace detail {

template <class T>
void take(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline void apply_config(const Json& j, ExperimentConfig& c) {
  using detail::take;
  if (!j.is_object()) throw Error("config: expected a JSON object");
  static const char* known[] = {"seed", "training", "models", "grid", "corpora", "solve", "controller", "maze"};
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(std::begin(known), std::end(known), [&](const char* s) { return k == s; }) == std::end(known))
      throw Error("config: unknown key " + k);
  }
  take(j, "seed", c.seed);
  if (j.contains("training")) {
    const Json& t = j["training"];
    take(t, "positives_per_class", c.training.positives_per_class);
    take(t, "scenes", c.training.scenes);
    take(t, "negatives_per_scene", c.training.negatives_per_scene);
    take(t, "mining_scenes", c.training.mining_scenes);
    take(t, "backdrops", c.training.backdrops);
  }
  if (j.contains("models")) {
    const Json& m = j["models"];
    take(m, "mining_rounds", c.models.mining_rounds);
    take(m, "mined_per_scene", c.models.mined_per_scene);
    take(m, "mining_margin", c.models.mining_margin);
    take(m, "epochs", c.models.svm.epochs);
    take(m, "learning_rate", c.models.svm.learning_rate);
    take(m, "lambda", c.models.svm.lambda);
  }
  if (j.contains("grid")) {
    const Json& g = j["grid"];
    take(g, "proposals", c.grid.proposals);
    take(g, "blocks", c.grid.blocks);
    take(g, "cells", c.grid.cells);
    take(g, "bins", c.grid.bins);
    take(g, "prunes", c.grid.prunes);
    if (g.contains("quantization")) {
      c.grid.quants.clear();
      for (const auto& q : g["quantization"]) c.grid.quants.push_back(parse_quantization(q.get<std::string>()));
    }
  }
  if (j.contains("corpora")) {
    const Json& k = j["corpora"];
    take(k, "profile_sequences", c.profile_sequences);
    take(k, "profile_stride", c.profile_stride);
    take(k, "bench_sequences", c.bench_sequences);
    take(k, "heldout_sequences", c.heldout_sequences);
    take(k, "heldout_stride", c.heldout_stride);
    take(k, "frames_per_sequence", c.frames_per_sequence);
  }
  if (j.contains("solve")) {
    const Json& s = j["solve"];
    take(s, "gamma", c.solve.gamma);
    take(s, "tol", c.solve.tol);
    if (s.contains("reward")) c.solve.reward = reward_from_json(s["reward"], c.solve.reward);
  }
  if (j.contains("controller")) {
    const Json& k = j["controller"];
    take(k, "score_threshold", c.controller.score_threshold);
    take(k, "iou_gate", c.controller.iou_gate);
    take(k, "retrigger_mdp", c.controller.retrigger_mdp);
    take(k, "reinit_klt", c.controller.reinit_klt);
    take(k, "max_mdp_per_frame", c.controller.max_mdp_per_frame);
  }
  if (j.contains("maze")) {
    const Json& m = j["maze"];
    take(m, "seeds", c.maze_seeds);
    take(m, "timeout", c.maze_timeout);
    take(m, "clutter", c.layout.clutter);
    take(m, "illumination", c.layout.illumination);
    take(m, "proximity", c.nav.proximity);
    take(m, "max_speed", c.nav.max_speed);
    take(m, "max_step", c.nav.max_step);
    take(m, "confirm_frames", c.nav.confirm_frames);
    if (m.contains("difficulties")) {
      c.mazes.clear();
      for (const auto& d : m["difficulties"]) c.mazes.push_back(parse_difficulty(d.get<std::string>()));
    }
    if (m.contains("strategies")) {
      c.maze_strategies.clear();
      for (const auto& s : m["strategies"]) c.maze_strategies.push_back(parse_strategy(s.get<std::string>()));
    }
  }
  c.nav.score_threshold = c.controller.score_threshold;
}

// ---------------------------------------------------------------------------
// Stages

inline Catalog train_catalog(const ExperimentConfig& cfg) {
  const TrainingSet ts = make_training_set(cfg.training_set());
  return build_catalog(ts, cfg.grid, cfg.models, cfg.stage_seed("models"));
}

inline std::vector<LabeledFrame> profiling_corpus(const ExperimentConfig& cfg) {
  const auto specs = make_corpus(cfg.corpus("profile", cfg.profile_sequences));
  return render_corpus(specs, cfg.profile_stride);
}

inline std::vector<SequenceSpec> bench_corpus(const ExperimentConfig& cfg) {
  return make_corpus(cfg.corpus("bench", cfg.bench_sequences));
}

inline std::vector<LabeledFrame> heldout_corpus(const ExperimentConfig& cfg) {
  return render_corpus(make_corpus(cfg.corpus("heldout", cfg.heldout_sequences)), cfg.heldout_stride);
}

// The most expensive catalog variant: largest proposal budget on the
// finest uncompressed features.
inline std::size_t full_parameter_variant(const Catalog& cat) {
  std::size_t best = 0;
  for (std::size_t v = 1; v < cat.size(); ++v)
    if (variant_cost(cat, v, 480, 270) > variant_cost(cat, best, 480, 270)) best = v;
  return best;
}

// ---------------------------------------------------------------------------
// Detection quality of one variant on a labelled corpus

struct QualityRow {
  std::string axis;
  std::string level;
  int frames = 0;
  DetectionCounts counts;
};

struct QualityReport {
  std::string variant;
  std::vector<QualityRow> rows;  // "all" first, then per condition
};

inline QualityReport detection_quality(const Catalog& cat, std::size_t v, std::span<const LabeledFrame> corpus,
                                       double threshold) {
  QualityReport r;
  r.variant = cat.specs.at(v).name();
  std::vector<Detection> dets;
  for (const auto& lf : corpus) dets.push_back(detect(lf.frame, cat.models(v), cat.specs[v].params));
  QualityRow all{"all", "all", 0, {}};
  std::vector<QualityRow> clutter, illum;
  for (int c = 0; c < 3; ++c) clutter.push_back({"clutter", kClutterNames[c], 0, {}});
  for (int i = 0; i < 2; ++i) illum.push_back({"illumination", kIlluminationNames[i], 0, {}});
  for (std::size_t f = 0; f < corpus.size(); ++f) {
    for (QualityRow* row : {&all, &clutter[static_cast<std::size_t>(corpus[f].clutter_bucket)],
                            &illum[static_cast<std::size_t>(corpus[f].illumination_bucket)]}) {
      ++row->frames;
      tally(row->counts, dets[f], corpus[f].truth, threshold);
    }
  }
  r.rows.push_back(all);
  r.rows.insert(r.rows.end(), clutter.begin(), clutter.end());
  r.rows.insert(r.rows.end(), illum.begin(), illum.end());
  return r;
}

// ---------------------------------------------------------------------------
// Five-strategy stream benchmark

struct BenchRow {
  Strategy strategy = Strategy::Static;
  std::string axis;
  std::string level;
  int sequences = 0;
  StreamMetrics metrics;
};

struct BenchReport {
  std::vector<BenchRow> rows;     // strategy x {clutter levels, illumination levels}
  std::vector<BenchRow> overall;  // one per strategy
  std::vector<std::vector<StreamResult>> streams;  // [strategy][sequence], kept on request

  const BenchRow& total(Strategy s) const {
    for (const auto& r : overall)
      if (r.strategy == s) return r;
    throw Error("bench: strategy missing from report");
  }
};

inline BenchReport run_bench(const ControllerAssets& assets, std::span<const SequenceSpec> specs, const ExperimentConfig& cfg,
                             bool keep_streams = false) {
  BenchReport rep;
  for (Strategy s : kAllStrategies) {
    Controller c(assets, cfg.controller_config(s));
    std::vector<BenchRow> clutter, illum;
    for (int k = 0; k < 3; ++k) clutter.push_back({s, "clutter", kClutterNames[k], 0, {}});
    for (int k = 0; k < 2; ++k) illum.push_back({s, "illumination", kIlluminationNames[k], 0, {}});
    BenchRow all{s, "all", "all", 0, {}};
    std::vector<StreamResult> streams;
    for (const auto& spec : specs) {
      StreamResult r = run_sequence(c, spec);
      for (BenchRow* row : {&all, &clutter[static_cast<std::size_t>(spec.clutter_bucket)],
                            &illum[static_cast<std::size_t>(spec.illumination_bucket)]}) {
        row->metrics.merge(r.metrics);
        ++row->sequences;
      }
      if (keep_streams) streams.push_back(std::move(r));
    }
    rep.rows.insert(rep.rows.end(), clutter.begin(), clutter.end());
    rep.rows.insert(rep.rows.end(), illum.begin(), illum.end());
    rep.overall.push_back(all);
    rep.streams.push_back(std::move(streams));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Maze episodes

struct MazeRun {
  Difficulty difficulty = Difficulty::Easy;
  Strategy strategy = Strategy::Static;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
};

struct MazeCell {
  Difficulty difficulty = Difficulty::Easy;
  Strategy strategy = Strategy::Static;
  int runs = 0;
  int successes = 0;
  double fps_mean = 0.0, fps_dev = 0.0;    // deviation in percent of the mean
  double time_mean = 0.0, time_dev = 0.0;
  double velocity_mean = 0.0, velocity_dev = 0.0;
};

struct MazeReport {
  std::vector<MazeRun> runs;
  std::vector<MazeCell> cells;

  const MazeCell& cell(Difficulty d, Strategy s) const {
    for (const auto& c : cells)
      if (c.difficulty == d && c.strategy == s) return c;
    throw Error("maze: cell missing from report");
  }
};

// Population standard deviation as a percentage of the mean.
inline std::pair<double, double> mean_and_relative_deviation(std::span<const double> xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size());
  return {m, m != 0.0 ? 100.0 * std::sqrt(v) / std::abs(m) : 0.0};
}

inline std::uint64_t maze_seed(const ExperimentConfig& cfg, int k) {
  return derive_seed(cfg.stage_seed("maze"), static_cast<std::uint64_t>(k));
}

inline EpisodeConfig episode_config(const ExperimentConfig& cfg, Difficulty d) {
  EpisodeConfig ec;
  ec.maze = MazeSpec::of(d);
  ec.layout = cfg.layout;
  ec.nav = cfg.nav;
  ec.nav.score_threshold = cfg.controller.score_threshold;
  ec.timeout = cfg.maze_timeout;
  return ec;
}

// on_episode sees every finished episode, e.g. to export its trace.
template <class OnEpisode>
MazeReport run_mazes(const ControllerAssets& assets, const ExperimentConfig& cfg, OnEpisode&& on_episode) {
  MazeReport rep;
  for (Difficulty d : cfg.mazes) {
    for (Strategy s : cfg.maze_strategies) {
      Controller c(assets, cfg.controller_config(s));
      std::vector<double> fps, time, vel;
      MazeCell cell;
      cell.difficulty = d;
      cell.strategy = s;
      for (int k = 0; k < cfg.maze_seeds; ++k) {
        const std::uint64_t seed = maze_seed(cfg, k);
        EpisodeResult e = run_episode(episode_config(cfg, d), c, seed);
        rep.runs.push_back({d, s, seed, e.metrics});
        on_episode(rep.runs.back(), e);
        ++cell.runs;
        cell.successes += e.metrics.success ? 1 : 0;
        fps.push_back(e.metrics.avg_fps);
        time.push_back(e.metrics.time_to_completion);
        vel.push_back(e.metrics.avg_velocity);
      }
      std::tie(cell.fps_mean, cell.fps_dev) = mean_and_relative_deviation(fps);
      std::tie(cell.time_mean, cell.time_dev) = mean_and_relative_deviation(time);
      std::tie(cell.velocity_mean, cell.velocity_dev) = mean_and_relative_deviation(vel);
      rep.cells.push_back(cell);
    }
  }
  return rep;
}

inline MazeReport run_mazes(const ControllerAssets& assets, const ExperimentConfig& cfg) {
  return run_mazes(assets, cfg, [](const MazeRun&, const EpisodeResult&) {});
}

// ---------------------------------------------------------------------------
// Reports. Each table is a header plus rows of strings, written as CSV or as
// a JSON array of objects with the same columns.

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
          os << cells[i];
          continue;
        }
        os << '"';
        for (char ch : cells[i]) os << (ch == '"' ? std::string("\"\"") : std::string(1, ch));
        os << '"';
      }
      os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
  }

  Json json() const {
    Json a = Json::array();
    for (const auto& r : rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < header.size(); ++i) o[header[i]] = r.at(i);
      a.push_back(o);
    }
    return a;
  }
};

inline std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline Table quality_table(const QualityReport& r) {
  Table t{{"variant", "axis", "level", "frames", "tp", "fp", "fn", "f1"}, {}};
  for (const auto& row : r.rows)
    t.rows.push_back({r.variant, row.axis, row.level, std::to_string(row.frames), std::to_string(row.counts.tp),
                      std::to_string(row.counts.fp), std::to_string(row.counts.fn), fmt(row.counts.f1())});
  return t;
}

inline Table bench_table(std::span<const BenchRow> rows) {
  Table t{{"strategy", "axis", "level", "sequences", "frames", "f1", "mean_cost", "fps", "detect_fraction",
           "mdp_accesses", "mean_iou"},
          {}};
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    t.rows.push_back({strategy_name(r.strategy), r.axis, r.level, std::to_string(r.sequences), std::to_string(m.frames),
                      fmt(m.f1()), fmt(m.mean_cost()), fmt(m.fps(), 3), fmt(m.detect_fraction()),
                      std::to_string(m.mdp_accesses), fmt(m.mean_iou())});
  }
  return t;
}

inline Table maze_runs_table(const MazeReport& r) {
  Table t{{"difficulty", "strategy", "seed", "success", "end", "time_to_completion", "avg_fps", "avg_velocity", "frames",
           "detections", "collisions", "path_length"},
          {}};
  for (const auto& run : r.runs) {
    const auto& m = run.metrics;
    t.rows.push_back({difficulty_name(run.difficulty), strategy_name(run.strategy), hex_seed(run.seed),
                      m.success ? "1" : "0", m.end_reason, fmt(m.time_to_completion, 4), fmt(m.avg_fps, 4),
                      fmt(m.avg_velocity, 4), std::to_string(m.frames), std::to_string(m.detections),
                      std::to_string(m.collisions), fmt(m.path_length, 3)});
  }
  return t;
}

inline std::string plus_minus(double mean, double dev_pct, int digits) {
  return fmt(mean, digits) + " ± " + fmt(dev_pct, 1) + "%";
}

inline Table maze_cells_table(const MazeReport& r) {
  Table t{{"difficulty", "strategy", "runs", "successes", "avg_fps", "time_to_completion", "avg_velocity", "fps_mean",
           "fps_dev_pct", "time_mean", "time_dev_pct", "velocity_mean", "velocity_dev_pct"},
          {}};
  for (const auto& c : r.cells)
    t.rows.push_back({difficulty_name(c.difficulty), strategy_name(c.strategy), std::to_string(c.runs),
                      std::to_string(c.successes), plus_minus(c.fps_mean, c.fps_dev, 1),
                      plus_minus(c.time_mean, c.time_dev, 1), plus_minus(c.velocity_mean, c.velocity_dev, 1),
                      fmt(c.fps_mean, 4), fmt(c.fps_dev, 4), fmt(c.time_mean, 4), fmt(c.time_dev, 4),
                      fmt(c.velocity_mean, 4), fmt(c.velocity_dev, 4)});
  return t;
}

// Fixed-width rendering for terminals.
inline std::string pretty(const Table& t, std::span<const std::size_t> columns = {}) {
  std::vector<std::size_t> cols(columns.begin(), columns.end());
  if (cols.empty())
    for (std::size_t i = 0; i < t.header.size(); ++i) cols.push_back(i);
  auto width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;  // count code points
    return n;
  };
  std::vector<std::size_t> w;
  for (std::size_t c : cols) {
    std::size_t m = width(t.header[c]);
    for (const auto& r : t.rows) m = std::max(m, width(r[c]));
    w.push_back(m);
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const std::string& s = cells[cols[i]];
      os << s << std::string(w[i] - width(s) + 2, ' ');
    }
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return os.str();
}

}  // namespace adet
