#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adet/core.hpp"
#include "adet/corpus.hpp"
#include "adet/detector.hpp"
#include "adet/mdp.hpp"
#include "adet/random.hpp"
#include "adet/variants.hpp"

namespace adet {

using Json = nlohmann::ordered_json;

inline constexpr int kCatalogVersion = 1;
inline constexpr int kPolicyVersion = 1;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline std::string content_hash(const std::string& bytes) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
  return os.str();
}

inline std::string hex_seed(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Feature params, specs, models

inline Json to_json(const FeatureParams& p) {
  return Json{{"proposals", p.proposals}, {"block", p.block}, {"cell", p.cell}, {"bins", p.bins}};
}

inline FeatureParams params_from_json(const Json& j) {
  return {j.at("proposals").get<int>(), j.at("block").get<int>(), j.at("cell").get<int>(), j.at("bins").get<int>()};
}

inline Json to_json(const VariantSpec& s) {
  return Json{{"kind", kind_name(s.kind)},
              {"params", to_json(s.params)},
              {"quantization", quantization_name(s.quant)},
              {"pruned_fraction", s.prune},
              {"layers_removed", s.layers_removed},
              {"name", s.name()}};
}

inline VariantSpec spec_from_json(const Json& j) {
  VariantSpec s;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "feature") s.kind = VariantKind::Feature;
  else if (kind == "compressed") s.kind = VariantKind::Compressed;
  else throw Error("catalog: unknown variant kind " + kind);
  s.params = params_from_json(j.at("params"));
  const auto q = j.at("quantization").get<std::string>();
  if (q == "none") s.quant = Quantization::None;
  else if (q == "int8") s.quant = Quantization::Int8;
  else throw Error("catalog: unknown quantization " + q);
  s.prune = j.at("pruned_fraction").get<double>();
  s.layers_removed = j.at("layers_removed").get<int>();
  s.validate();
  return s;
}

inline Json to_json(const LinearModel& m) {
  std::string w;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    if (i) w += ' ';
    w += hex_double(m.weights[i]);
  }
  return Json{{"label", m.label},
              {"window", m.window},
              {"params", to_json(m.params)},
              {"bias", hex_double(m.bias)},
              {"train_accuracy", hex_double(m.train_accuracy)},
              {"degenerate", m.degenerate},
              {"weights", w}};
}

inline LinearModel model_from_json(const Json& j) {
  LinearModel m;
  m.label = j.at("label").get<int>();
  m.window = j.at("window").get<int>();
  m.params = params_from_json(j.at("params"));
  m.bias = parse_double(j.at("bias").get<std::string>());
  m.train_accuracy = parse_double(j.at("train_accuracy").get<std::string>());
  m.degenerate = j.at("degenerate").get<bool>();
  std::istringstream is(j.at("weights").get<std::string>());
  std::string tok;
  while (is >> tok) m.weights.push_back(parse_double(tok));
  if (m.weights.size() != feature_length(m.window, m.params)) throw Error("catalog: model weight count mismatch");
  return m;
}

// ---------------------------------------------------------------------------
// Catalog document

inline Json to_json(const VariantProfile& p) {
  return Json{{"variant", p.index},       {"name", p.spec.name()},  {"accuracy", p.accuracy},
              {"latency", p.latency},     {"rel_cost", p.rel_cost}};
}

inline Json catalog_to_json(const Catalog& cat) {
  Json j;
  j["format"] = "adet-catalog";
  j["version"] = kCatalogVersion;
  j["best_set"] = cat.best_set;
  Json variants = Json::array();
  for (std::size_t v = 0; v < cat.size(); ++v) {
    Json e = to_json(cat.specs[v]);
    e["model_set"] = cat.model_set[v];
    variants.push_back(e);
  }
  j["variants"] = variants;
  Json sets = Json::array();
  for (std::size_t s = 0; s < cat.sets.size(); ++s) {
    Json models = Json::array();
    for (const auto& m : cat.sets[s]) models.push_back(to_json(m));
    sets.push_back(Json{{"features", to_json(cat.set_params[s])}, {"models", models}});
  }
  j["model_sets"] = sets;
  return j;
}

inline Catalog catalog_from_json(const Json& j) {
  if (j.value("format", "") != "adet-catalog" || j.value("version", 0) != kCatalogVersion)
    throw Error("catalog: unsupported document");
  Catalog cat;
  cat.best_set = j.at("best_set").get<int>();
  for (const auto& s : j.at("model_sets")) {
    cat.set_params.push_back(params_from_json(s.at("features")));
    std::vector<LinearModel> models;
    for (const auto& m : s.at("models")) models.push_back(model_from_json(m));
    cat.sets.push_back(std::move(models));
  }
  for (const auto& v : j.at("variants")) {
    cat.specs.push_back(spec_from_json(v));
    const int set = v.at("model_set").get<int>();
    if (set < 0 || set >= static_cast<int>(cat.sets.size())) throw Error("catalog: model set out of range");
    cat.model_set.push_back(set);
  }
  return cat;
}

inline Json profiles_to_json(std::span<const VariantProfile> profiles) {
  Json a = Json::array();
  for (const auto& p : profiles) a.push_back(to_json(p));
  return a;
}

inline std::vector<VariantProfile> profiles_from_json(const Json& a, const Catalog& cat) {
  std::vector<VariantProfile> out;
  for (const auto& j : a) {
    VariantProfile p;
    p.index = j.at("variant").get<int>();
    if (p.index < 0 || p.index >= static_cast<int>(cat.size())) throw Error("profiles: variant out of range");
    p.spec = cat.specs[static_cast<std::size_t>(p.index)];
    p.accuracy = j.at("accuracy").get<double>();
    p.latency = j.at("latency").get<double>();
    p.rel_cost = j.at("rel_cost").get<double>();
    out.push_back(p);
  }
  return out;
}

// spec, accuracy, latency, rel_cost
inline std::string profiles_csv(std::span<const VariantProfile> profiles) {
  std::ostringstream os;
  os << "variant,kind,proposals,block,cell,bins,quantization,pruned_fraction,layers_removed,accuracy,latency,rel_cost\n";
  char buf[160];
  for (const auto& p : profiles) {
    const auto& s = p.spec;
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%d,%d,%s,%.2f,%d,%.6f,%.6f,%.6f\n", p.index, kind_name(s.kind), s.params.proposals,
                  s.params.block, s.params.cell, s.params.bins, quantization_name(s.quant), s.prune, s.layers_removed,
                  p.accuracy, p.latency, p.rel_cost);
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Policy document

inline Json reward_to_json(const RewardConfig& r) {
  return Json{{"w_opt", r.w_opt}, {"w_ge", r.w_ge}, {"w_ua", r.w_ua}, {"alpha", r.alpha},
              {"c_opt", r.c_opt}, {"c_ge", r.c_ge}, {"c_ua", r.c_ua}};
}

inline RewardConfig reward_from_json(const Json& j, RewardConfig r = {}) {
  r.w_opt = j.value("w_opt", r.w_opt);
  r.w_ge = j.value("w_ge", r.w_ge);
  r.w_ua = j.value("w_ua", r.w_ua);
  r.alpha = j.value("alpha", r.alpha);
  r.c_opt = j.value("c_opt", r.c_opt);
  r.c_ge = j.value("c_ge", r.c_ge);
  r.c_ua = j.value("c_ua", r.c_ua);
  r.validate();
  return r;
}

struct PolicyDocument {
  std::vector<int> frontier;  // catalog indices, ascending cost
  std::vector<double> rel_cost;
  ConditionBuckets buckets;
  RewardConfig reward;
  TransitionModel transitions;
  Policy policy;
};

inline Json policy_to_json(const PolicyDocument& d) {
  Json j;
  j["format"] = "adet-policy";
  j["version"] = kPolicyVersion;
  j["frontier"] = d.frontier;
  j["rel_cost"] = d.rel_cost;
  j["condition_edges"] = std::vector<double>(d.buckets.edges.begin(), d.buckets.edges.end());
  j["reward"] = reward_to_json(d.reward);
  j["gamma"] = d.policy.gamma;
  j["conditions"] = d.policy.conditions;
  Json cells = Json::array();
  for (int q = 0; q < d.transitions.conditions; ++q) {
    for (int v = 0; v < d.transitions.variants; ++v) {
      const auto i = d.transitions.cell(q, v);
      cells.push_back(Json{{"condition", q},
                           {"variant", v},
                           {"counts", d.transitions.counts[i]},
                           {"observed", static_cast<bool>(d.transitions.observed[i])}});
    }
  }
  j["transitions"] = cells;
  Json states = Json::array();
  for (std::size_t i = 0; i < d.policy.size(); ++i) {
    const MdpState s = d.policy.state(i);
    states.push_back(Json{{"category", category_name(s.category)},
                          {"variant", s.variant},
                          {"condition", s.condition},
                          {"action", d.policy.action[i]},
                          {"value", hex_double(d.policy.value[i])}});
  }
  j["states"] = states;
  Json res = Json::array();
  for (double r : d.policy.residuals) res.push_back(hex_double(r));
  j["residuals"] = res;
  return j;
}

inline Category category_from_name(const std::string& s) {
  for (int k = 0; k < kNumCategories; ++k)
    if (s == category_name(static_cast<Category>(k))) return static_cast<Category>(k);
  throw Error("policy: unknown category " + s);
}

inline PolicyDocument policy_from_json(const Json& j) {
  if (j.value("format", "") != "adet-policy" || j.value("version", 0) != kPolicyVersion)
    throw Error("policy: unsupported document");
  PolicyDocument d;
  d.frontier = j.at("frontier").get<std::vector<int>>();
  d.rel_cost = j.at("rel_cost").get<std::vector<double>>();
  if (d.rel_cost.size() != d.frontier.size())
    throw Error("policy: frontier tables disagree in length");
  const auto edges = j.at("condition_edges").get<std::vector<double>>();
  if (edges.size() != 2) throw Error("policy: expected two condition edges");
  d.buckets.edges = {edges[0], edges[1]};
  d.reward = reward_from_json(j.at("reward"));
  auto& tm = d.transitions;
  tm.conditions = j.at("conditions").get<int>();
  tm.variants = static_cast<int>(d.frontier.size());
  tm.rel_cost = d.rel_cost;
  const std::size_t n = static_cast<std::size_t>(tm.conditions) * static_cast<std::size_t>(tm.variants);
  tm.counts.assign(n, {0, 0, 0});
  tm.prob.assign(n, {0.0, 0.0, 0.0});
  tm.observed.assign(n, false);
  for (const auto& c : j.at("transitions")) {
    const auto i = tm.cell(c.at("condition").get<int>(), c.at("variant").get<int>());
    tm.counts[i] = c.at("counts").get<std::array<int, kNumCategories>>();
    tm.observed[i] = c.at("observed").get<bool>();
    const int total = tm.counts[i][0] + tm.counts[i][1] + tm.counts[i][2];
    for (int k = 0; k < kNumCategories; ++k)
      tm.prob[i][static_cast<std::size_t>(k)] = static_cast<double>(tm.counts[i][static_cast<std::size_t>(k)] + 1) / (total + kNumCategories);
  }
  auto& pol = d.policy;
  pol.conditions = tm.conditions;
  pol.variants = tm.variants;
  pol.gamma = j.at("gamma").get<double>();
  pol.action.assign(n * kNumCategories, 0);
  pol.value.assign(n * kNumCategories, 0.0);
  for (const auto& s : j.at("states")) {
    const MdpState st{category_from_name(s.at("category").get<std::string>()), s.at("variant").get<int>(),
                      s.at("condition").get<int>()};
    const auto i = pol.index(st);
    pol.action[i] = s.at("action").get<int>();
    pol.value[i] = parse_double(s.at("value").get<std::string>());
  }
  for (const auto& r : j.at("residuals")) pol.residuals.push_back(parse_double(r.get<std::string>()));
  return d;
}

// state, action, value rows for plotting.
inline std::string policy_csv(const PolicyDocument& d, std::span<const VariantSpec> frontier_specs = {}) {
  std::ostringstream os;
  os << "condition,category,variant,action,action_name,value\n";
  char buf[64];
  for (std::size_t i = 0; i < d.policy.size(); ++i) {
    const MdpState s = d.policy.state(i);
    const int a = d.policy.action[i];
    std::snprintf(buf, sizeof buf, "%.6f", d.policy.value[i]);
    os << s.condition << ',' << category_name(s.category) << ',' << s.variant << ',' << a << ','
       << (static_cast<std::size_t>(a) < frontier_specs.size() ? '"' + frontier_specs[static_cast<std::size_t>(a)].name() + '"'
                                                                : std::string())
       << ',' << buf << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Corpus descriptors and detections. Reals are stored as hex strings so a
// reload reproduces every bit.

inline Json to_json(const SequenceSpec& s) {
  return Json{{"id", s.id},
              {"class", sign_name(s.cls)},
              {"clutter", s.clutter_bucket},
              {"illumination", s.illumination_bucket},
              {"start_depth", hex_double(s.start_depth)},
              {"approach", hex_double(s.approach)},
              {"lateral", hex_double(s.lateral)},
              {"drift", hex_double(s.drift)},
              {"pan", hex_double(s.pan)},
              {"frames", s.frames},
              {"seed", hex_seed(s.seed)}};
}

inline SequenceSpec sequence_from_json(const Json& j) {
  SequenceSpec s;
  s.id = j.at("id").get<int>();
  const auto cls = j.at("class").get<std::string>();
  bool found = false;
  for (int k = 0; k < kNumSignClasses; ++k) {
    if (cls == sign_name(static_cast<SignClass>(k))) {
      s.cls = static_cast<SignClass>(k);
      found = true;
    }
  }
  if (!found) throw Error("corpus: unknown sign class " + cls);
  s.clutter_bucket = j.at("clutter").get<int>();
  s.illumination_bucket = j.at("illumination").get<int>();
  if (s.clutter_bucket < 0 || s.clutter_bucket > 2 || s.illumination_bucket < 0 || s.illumination_bucket > 1)
    throw Error("corpus: condition bucket out of range");
  s.start_depth = parse_double(j.at("start_depth").get<std::string>());
  s.approach = parse_double(j.at("approach").get<std::string>());
  s.lateral = parse_double(j.at("lateral").get<std::string>());
  s.drift = parse_double(j.at("drift").get<std::string>());
  s.pan = parse_double(j.at("pan").get<std::string>());
  s.frames = j.at("frames").get<int>();
  s.seed = std::stoull(j.at("seed").get<std::string>(), nullptr, 16);
  return s;
}

inline Json to_json(const Detection& d) {
  if (d.degenerate) return Json{{"degenerate", true}};
  return Json{{"box", {hex_double(d.box.x), hex_double(d.box.y), hex_double(d.box.w), hex_double(d.box.h)}},
              {"confidence", hex_double(d.confidence)},
              {"label", d.label}};
}

inline Detection detection_from_json(const Json& j) {
  Detection d;
  if (j.value("degenerate", false)) {
    d.degenerate = true;
    return d;
  }
  const auto& b = j.at("box");
  d.box = BBox(parse_double(b.at(0).get<std::string>()), parse_double(b.at(1).get<std::string>()),
               parse_double(b.at(2).get<std::string>()), parse_double(b.at(3).get<std::string>()));
  d.confidence = parse_double(j.at("confidence").get<std::string>());
  d.label = j.at("label").get<int>();
  return d;
}

}  // namespace adet
