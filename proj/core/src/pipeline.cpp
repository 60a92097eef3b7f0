// Copyright 2026 The crisisaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crisisaug/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "crisisaug/error.hpp"
#include "crisisaug/image_augmentation.hpp"
#include "crisisaug/plugin.hpp"
#include "crisisaug/quality_metrics.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/synthetic_data.hpp"
#include "crisisaug/text_augmentation.hpp"

namespace crisisaug::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const BackendError*>(&e)) return kExitBackend;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DataError*>(&e) ||
      dynamic_cast<const std::invalid_argument*>(&e) ||
      dynamic_cast<const json::exception*>(&e)) {
    return kExitConfig;
  }
  return kExitFailure;
}

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> keys = {
      "seed",  "output_dir", "data",  "backends", "augment", "model",      "train",
      "synth", "quality",    "eval",  "report",   "train_eval"};
  return keys;
}

}  // namespace

// --- PipelineConfig ----------------------------------------------------------

PipelineConfig::PipelineConfig() : doc_(json::object()), base_(".") {}

PipelineConfig PipelineConfig::from_file(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return from_json(std::move(doc), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

PipelineConfig PipelineConfig::from_json(json doc, fs::path base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  c.doc_ = std::move(doc);
  c.base_ = std::move(base_dir);
  return c;
}

void PipelineConfig::set_json(std::string_view dotted_key, json value) {
  if (dotted_key.empty()) throw ConfigError("empty override key");
  json* node = &doc_;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part(dotted_key.substr(start, dot - start));
    if (part.empty()) throw ConfigError("malformed override key '" + std::string(dotted_key) + "'");
    if (!node->is_object()) {
      throw ConfigError("override '" + std::string(dotted_key) + "' descends into a non-object");
    }
    if (dot == std::string_view::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

void PipelineConfig::set(std::string_view dotted_key, std::string_view value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = std::string(value);
  }
  set_json(dotted_key, std::move(v));
}

json PipelineConfig::section(std::string_view key) const {
  const auto it = doc_.find(std::string(key));
  if (it == doc_.end() || it->is_null()) return json::object();
  return *it;
}

std::uint64_t PipelineConfig::seed() const { return get_or<std::uint64_t>(doc_, "seed", 0); }

fs::path PipelineConfig::output_dir() const {
  return resolve(get_or<std::string>(doc_, "output_dir", "run"));
}

fs::path PipelineConfig::resolve(const fs::path& p) const {
  if (p.is_absolute()) return p;
  return (base_ / p).lexically_normal();
}

fs::path PipelineConfig::manifest() const {
  const json data = section("data");
  if (!data.contains("manifest")) throw ConfigError("data.manifest is not set");
  return resolve(get_or<std::string>(data, "manifest", ""));
}

void PipelineConfig::validate() const {
  for (const auto& [key, value] : doc_.items()) {
    if (!known_sections().count(key)) throw ConfigError("unknown config key '" + key + "'");
    if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) {
        throw ConfigError("seed must be a non-negative integer");
      }
      if (value.is_number_integer() && value.get<long long>() < 0) {
        throw ConfigError("seed must be a non-negative integer");
      }
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ConfigError("output_dir must be a string");
    } else if (!value.is_object() && !value.is_null()) {
      throw ConfigError("'" + key + "' must be an object");
    }
  }
  const json data = section("data");
  if (data.contains("manifest") && !data["manifest"].is_string()) {
    throw ConfigError("data.manifest must be a string");
  }
}

// --- BackendSet --------------------------------------------------------------

namespace {

using ClientCache = std::map<std::string, std::shared_ptr<PluginClient>>;

std::shared_ptr<PluginClient> client_for(const json& cfg, ClientCache& cache, const char* which) {
  const std::string endpoint = get_or<std::string>(cfg, "endpoint", "");
  if (endpoint.empty()) throw ConfigError(std::string("backends.") + which + ": plugin needs an endpoint");
  auto& slot = cache[endpoint];
  if (!slot) slot = std::make_shared<PluginClient>(endpoint);
  return slot;
}

std::string kind_of(const json& cfg, const char* which) {
  const std::string kind = get_or<std::string>(cfg, "kind", "stub");
  if (kind != "stub" && kind != "plugin") {
    throw ConfigError(std::string("backends.") + which + ": unknown kind '" + kind + "'");
  }
  return kind;
}

}  // namespace

BackendSet::BackendSet(const json& cfg) {
  ClientCache clients;
  auto sub = [&](const char* key) { return cfg.is_object() && cfg.contains(key) ? cfg[key] : json::object(); };

  {
    const json c = sub("translator");
    if (kind_of(c, "translator") == "plugin") {
      translator_ = std::make_unique<PluginTranslator>(client_for(c, clients, "translator"));
    } else {
      const std::string mode = get_or<std::string>(c, "mode", "identity");
      if (mode == "identity") translator_ = std::make_unique<StubTranslator>(TranslatorMode::identity);
      else if (mode == "word_reverse") translator_ = std::make_unique<StubTranslator>(TranslatorMode::word_reverse);
      else if (mode == "dictionary") translator_ = std::make_unique<StubTranslator>(StubTranslator::builtin_dictionary());
      else throw ConfigError("backends.translator: unknown stub mode '" + mode + "'");
    }
  }
  {
    const json c = sub("paraphraser");
    if (kind_of(c, "paraphraser") == "plugin") {
      paraphraser_ = std::make_unique<PluginParaphraser>(client_for(c, clients, "paraphraser"));
    } else {
      const std::string mode = get_or<std::string>(c, "mode", "suffix_tag");
      if (mode == "suffix_tag") paraphraser_ = std::make_unique<StubParaphraser>(ParaphraserMode::suffix_tag);
      else if (mode == "token_shuffle") paraphraser_ = std::make_unique<StubParaphraser>(ParaphraserMode::token_shuffle);
      else throw ConfigError("backends.paraphraser: unknown stub mode '" + mode + "'");
    }
  }
  {
    const json c = sub("captioner");
    if (kind_of(c, "captioner") == "plugin") {
      captioner_ = std::make_unique<PluginCaptioner>(client_for(c, clients, "captioner"));
    } else {
      captioner_ = std::make_unique<StubCaptioner>();
    }
  }
  {
    const json c = sub("image_gen");
    if (kind_of(c, "image_gen") == "plugin") {
      image_gen_ = std::make_unique<PluginImageGen>(client_for(c, clients, "image_gen"));
    } else {
      const std::string mode = get_or<std::string>(c, "mode", "identity");
      ImageGenMode m = ImageGenMode::identity;
      if (mode == "invert") m = ImageGenMode::invert;
      else if (mode == "tint") m = ImageGenMode::tint;
      else if (mode != "identity") throw ConfigError("backends.image_gen: unknown stub mode '" + mode + "'");
      image_gen_ = std::make_unique<StubImageGen>(m, get_or<std::size_t>(c, "tint_channel", 0),
                                                  get_or<double>(c, "tint_amount", 0.2));
    }
  }
  {
    const json c = sub("embedder");
    if (kind_of(c, "embedder") == "plugin") {
      embedder_ = std::make_unique<PluginEmbedder>(client_for(c, clients, "embedder"));
    } else {
      embedder_ = std::make_unique<StubEmbedder>(get_or<std::size_t>(c, "dim", 64),
                                                 get_or<std::uint64_t>(c, "seed", 0));
    }
  }
  {
    const json c = sub("lm_scorer");
    if (kind_of(c, "lm_scorer") == "plugin") {
      lm_scorer_ = std::make_unique<PluginLmScorer>(client_for(c, clients, "lm_scorer"));
    } else {
      lm_scorer_ = std::make_unique<StubLmScorer>(get_or<std::size_t>(c, "vocab_size", 50));
    }
  }
  {
    const json c = sub("image_embedder");
    if (kind_of(c, "image_embedder") == "plugin") {
      const std::size_t dim = get_or<std::size_t>(c, "dim", 0);
      if (dim == 0) throw ConfigError("backends.image_embedder: plugin needs dim");
      image_embedder_ = std::make_unique<PluginImageEmbedder>(client_for(c, clients, "image_embedder"), dim);
    } else {
      image_embedder_ = std::make_unique<StubImageEmbedder>(get_or<std::size_t>(c, "grid", 4));
    }
  }
}

// --- RunContext --------------------------------------------------------------

RunContext::RunContext(const PipelineConfig& config, std::string command)
    : root_(config.output_dir()), command_(std::move(command)), started_(utc_now()) {
  std::error_code ec;
  fs::create_directories(root_ / command_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + (root_ / command_).string() + "'");
  write_json(fs::path(command_) / "effective_config.json", ordered_json(config.doc()));
}

void RunContext::write_text(const fs::path& rel, std::string_view content) {
  const fs::path p = root_ / rel;
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + p.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw ConfigError("write failed for '" + p.string() + "'");
  record(rel);
}

void RunContext::write_json(const fs::path& rel, const ordered_json& j) {
  write_text(rel, j.dump(2) + "\n");
}

void RunContext::record(const fs::path& rel) { written_.push_back(rel.generic_string()); }

void RunContext::log(std::string line) { log_.push_back(std::move(line)); }

void RunContext::finish(std::string_view status) {
  if (finished_) return;
  finished_ = true;
  if (status == "ok") {
    std::string text;
    for (const std::string& l : log_) text += l + "\n";
    write_text(fs::path(command_) / "log.txt", text);
  }

  // outputs.json: merged, sorted, content-addressed.
  std::map<std::string, ordered_json> index;
  const fs::path index_path = root_ / "outputs.json";
  if (fs::exists(index_path)) {
    try {
      const json old = json::parse(read_file(index_path));
      for (const auto& e : old.at("files")) index[e.at("path").get<std::string>()] = e;
    } catch (const std::exception&) {
      index.clear();
    }
  }
  for (const std::string& rel : written_) {
    const fs::path p = root_ / rel;
    if (!fs::exists(p)) continue;
    const std::string content = read_file(p);
    index[rel] = ordered_json{{"path", rel},
                              {"command", command_},
                              {"bytes", content.size()},
                              {"fnv1a64", hex64(fnv1a64(content))}};
  }
  ordered_json files = ordered_json::array();
  for (auto& [_, e] : index) files.push_back(e);
  {
    std::ofstream out(index_path, std::ios::binary | std::ios::trunc);
    out << ordered_json{{"files", files}}.dump(2) << "\n";
  }

  // metadata.json: the only file with wall-clock content.
  const fs::path meta_path = root_ / "metadata.json";
  ordered_json meta = {{"runs", ordered_json::array()}};
  if (fs::exists(meta_path)) {
    try {
      meta = ordered_json::parse(read_file(meta_path));
      if (!meta.contains("runs") || !meta["runs"].is_array()) meta = {{"runs", ordered_json::array()}};
    } catch (const std::exception&) {
    }
  }
  meta["runs"].push_back({{"command", command_},
                          {"started_at", started_},
                          {"finished_at", utc_now()},
                          {"status", status}});
  std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
  out << meta.dump(2) << "\n";
}

// --- dataset helpers ---------------------------------------------------------

ManifestLoad load_dataset(const fs::path& manifest) {
  if (!fs::exists(manifest)) throw ConfigError("manifest '" + manifest.string() + "' does not exist");
  const ManifestLoad load = load_manifest(manifest);
  if (!load.errors.empty()) {
    const RowError& e = load.errors.front();
    throw DataError(manifest.string() + ":" + std::to_string(e.line) + ": " + e.message + " (" +
                    std::to_string(load.errors.size()) + " invalid rows)");
  }
  return load;
}

ImageLoader make_image_loader(const fs::path& manifest_dir) {
  return [manifest_dir](const MultimodalSample& s) {
    fs::path p(s.image_ref);
    if (p.is_relative()) p = manifest_dir / p;
    if (!fs::exists(p)) throw DataError("image for '" + s.sample_id + "' not found: " + p.string());
    return load_png(p);
  };
}

std::string rebase_ref(const std::string& ref, const fs::path& from_dir, const fs::path& to_dir) {
  if (ref.empty()) return ref;
  const fs::path p(ref);
  if (p.is_absolute()) return ref;
  const fs::path target = fs::absolute(from_dir / p).lexically_normal();
  const fs::path base = fs::absolute(to_dir).lexically_normal();
  const fs::path rel = target.lexically_relative(base);
  return rel.empty() ? target.generic_string() : rel.generic_string();
}

Datasets build_datasets(std::span<const MultimodalSample> samples, fusion::Arch arch,
                        const fusion::Featurizer& featurizer, const ImageLoader& load,
                        const CaptionerBackend* captioner) {
  const bool multiview = arch != fusion::Arch::early_fusion;
  std::unordered_map<std::string, std::vector<const MultimodalSample*>> children;
  for (const MultimodalSample& s : samples) {
    if (s.provenance == Provenance::augmented && s.parent_id) children[*s.parent_id].push_back(&s);
  }

  auto originals = [&](const MultimodalSample& s, const Image& img) {
    fusion::EncodedBundle b;
    b.orig_text = featurizer.text(s.tweet_text);
    b.orig_image = featurizer.image(img);
    b.presence = fusion::kOriginalsOnly;
    return b;
  };

  Datasets out;
  for (const MultimodalSample& s : samples) {
    const bool is_train = s.split == Split::train;
    if (!is_train && s.provenance != Provenance::original) continue;
    if (multiview && is_train && s.provenance != Provenance::original) continue;

    const Image img = load(s);
    TrainExample ex;
    ex.id = s.sample_id;
    ex.example.label = label_index(s.label);
    ex.example.bundle = originals(s, img);

    if (multiview && is_train) {
      fusion::EncodedBundle& b = ex.example.bundle;
      const auto it = children.find(s.sample_id);
      if (it != children.end()) {
        for (const MultimodalSample* c : it->second) {
          if (!b.presence[fusion::kAugText] && c->tweet_text != s.tweet_text) {
            b.aug_text = featurizer.text(c->tweet_text);
            b.presence[fusion::kAugText] = true;
          }
          if (!b.presence[fusion::kAugImage] && c->image_ref != s.image_ref) {
            b.aug_image = featurizer.image(load(*c));
            b.presence[fusion::kAugImage] = true;
          }
        }
      }
      if (captioner) {
        b.caption = featurizer.text(captioner->caption(img));
        b.presence[fusion::kCaption] = true;
      }
    }

    switch (s.split) {
      case Split::train: out.train.push_back(std::move(ex)); break;
      case Split::dev: out.dev.push_back(std::move(ex)); break;
      case Split::test: out.test.push_back(std::move(ex)); break;
    }
  }
  return out;
}

fusion::FusionConfig model_config(const PipelineConfig& config, const json& model) {
  json m = model.is_object() ? model : json::object();
  // Pipeline-only keys.
  m.erase("caption_view");
  m.erase("name");
  if (!m.contains("seed")) m["seed"] = config.seed();
  const json train = config.section("train");
  if (train.contains("image_size")) {
    if (m.contains("image_size") && m["image_size"] != train["image_size"]) {
      throw ConfigError("model.image_size and train.image_size disagree");
    }
    m["image_size"] = train["image_size"];
  }
  return fusion::FusionConfig::from_json(m);
}

TrainConfig train_config(const PipelineConfig& config) {
  json t = config.section("train");
  t.erase("name");
  t.erase("manifest");
  if (!t.contains("seed")) t["seed"] = config.seed();
  return TrainConfig::from_json(t);
}

// --- commands ----------------------------------------------------------------

namespace {

std::vector<MultimodalSample> train_rows(std::span<const MultimodalSample> samples) {
  std::vector<MultimodalSample> out;
  for (const MultimodalSample& s : samples) {
    if (s.split == Split::train) out.push_back(s);
  }
  return out;
}

std::string file_safe(std::string id) {
  for (char& c : id) {
    if (c == '#' || c == '/' || c == '\\' || c == ' ') c = '-';
  }
  return id;
}

TextAugmentOptions text_options(const json& c) {
  TextAugmentOptions o;
  const std::string method = get_or<std::string>(c, "method", "back_translation");
  const auto m = parse_method(method);
  if (!m || !is_text_method(*m)) throw ConfigError("augment.text.method: '" + method + "' is not a text method");
  o.method = *m;
  if (c.contains("chain")) {
    const auto langs = get_or<std::vector<std::string>>(c, "chain", {});
    if (langs.size() < 2) throw ConfigError("augment.text.chain needs at least two languages");
    o.chain.hops.clear();
    for (std::size_t i = 0; i + 1 < langs.size(); ++i) o.chain.hops.push_back({langs[i], langs[i + 1]});
  }
  o.corpus_lang = get_or<std::string>(c, "corpus_lang", o.corpus_lang);
  o.n_candidates = get_or<std::size_t>(c, "n_candidates", o.n_candidates);
  o.prompt_template = get_or<std::string>(c, "prompt_template", o.prompt_template);
  const json f = c.contains("filter") ? c["filter"] : json::object();
  o.policy.min_similarity = get_or<double>(f, "min_similarity", o.policy.min_similarity);
  o.policy.max_similarity = get_or<double>(f, "max_similarity", o.policy.max_similarity);
  o.policy.min_length_ratio = get_or<double>(f, "min_length_ratio", o.policy.min_length_ratio);
  o.policy.max_length_ratio = get_or<double>(f, "max_length_ratio", o.policy.max_length_ratio);
  o.caption_separator = get_or<std::string>(c, "caption_separator", o.caption_separator);
  o.threads = get_or<std::size_t>(c, "threads", o.threads);
  return o;
}

std::vector<HumanitarianLabel> parse_targets(const json& c) {
  std::vector<HumanitarianLabel> out;
  for (const std::string& s : get_or<std::vector<std::string>>(c, "targets", {})) {
    const auto l = parse_label(s);
    if (!l) throw ConfigError("unknown target label '" + s + "'");
    out.push_back(*l);
  }
  return out;
}

ImageAugmentOptions image_options(const json& c) {
  ImageAugmentOptions o;
  const std::string method = get_or<std::string>(c, "method", "real_guidance");
  const auto m = parse_method(method);
  if (!m || is_text_method(*m)) throw ConfigError("augment.image.method: '" + method + "' is not an image method");
  o.method = *m;
  o.prompt_template = get_or<std::string>(c, "prompt_template", o.prompt_template);
  o.strength = get_or<double>(c, "strength", o.strength);
  o.prompts = get_or<std::vector<std::string>>(c, "prompts", o.prompts);
  if (c.contains("mask_styles")) {
    o.mask_styles.clear();
    for (const std::string& s : get_or<std::vector<std::string>>(c, "mask_styles", {})) {
      const auto ms = parse_mask_style(s);
      if (!ms) throw ConfigError("unknown mask style '" + s + "'");
      o.mask_styles.push_back(*ms);
    }
  }
  o.lambda = get_or<double>(c, "lambda", o.lambda);
  o.diffusemix_strength = get_or<double>(c, "diffusemix_strength", o.diffusemix_strength);
  if (c.contains("targets")) o.targets = parse_targets(c);
  o.factor = get_or<double>(c, "factor", o.factor);
  o.threads = get_or<std::size_t>(c, "threads", o.threads);
  return o;
}

ordered_json verdict_summary(std::span<const AugmentationRecord> records) {
  std::map<std::string, std::size_t> reasons;
  std::size_t accepted = 0;
  for (const AugmentationRecord& r : records) {
    if (r.verdict.accepted) ++accepted;
    else ++reasons[r.verdict.reason];
  }
  ordered_json rej = ordered_json::object();
  for (const auto& [k, v] : reasons) rej[k] = v;
  return {{"records", records.size()}, {"accepted", accepted}, {"rejected", rej}};
}

fs::path relative_to_root(const RunContext& ctx, const fs::path& p) {
  const fs::path rel = fs::absolute(p).lexically_normal().lexically_relative(
      fs::absolute(ctx.root()).lexically_normal());
  return rel;
}

struct TrainedRun {
  fusion::FusionModel model;
  TrainResult result;
  std::optional<EvalReport> test;
};

// Trains one model on `manifest` and writes checkpoint.bin, best.bin (when dev
// data exists), epochs.jsonl, summary.json and, when the manifest has test
// rows, eval.json / eval.txt under `rel_dir`.
TrainedRun run_training(const PipelineConfig& config, RunContext& ctx, const fs::path& rel_dir,
                        const fs::path& manifest, const json& model_json) {
  const ManifestLoad data = load_dataset(manifest);
  const BackendSet backends(config.section("backends"));
  const fusion::FusionConfig mc = model_config(config, model_json);
  const TrainConfig tc = train_config(config);
  const fusion::Featurizer featurizer(
      mc, mc.text_encoder == fusion::EncoderKind::plugin ? &backends.embedder() : nullptr,
      mc.image_encoder == fusion::EncoderKind::plugin ? &backends.image_embedder() : nullptr);
  const bool caption_view = get_or<bool>(model_json, "caption_view", true);
  const Datasets ds =
      build_datasets(data.samples, mc.arch, featurizer, make_image_loader(manifest.parent_path()),
                     caption_view && mc.arch != fusion::Arch::early_fusion ? &backends.captioner()
                                                                           : nullptr);
  ctx.log(rel_dir.generic_string() + ": " + std::string(fusion::arch_name(mc.arch)) + ", " +
          std::to_string(ds.train.size()) + " train / " + std::to_string(ds.dev.size()) +
          " dev / " + std::to_string(ds.test.size()) + " test examples");

  TrainedRun run{fusion::FusionModel(mc), {}, std::nullopt};
  std::string epochs;
  run.result = train(run.model, ds.train, ds.dev, tc, [&](const EpochLog& e) {
    epochs += epoch_to_json(e).dump() + "\n";
    std::string line = "epoch " + std::to_string(e.epoch) + " loss " + fmt("%.6f", e.train_loss);
    if (e.dev_weighted_f1) {
      line += " dev_acc " + fmt("%.4f", *e.dev_accuracy) + " dev_f1 " + fmt("%.4f", *e.dev_weighted_f1);
    }
    ctx.log(line);
  });
  ctx.write_text(rel_dir / "epochs.jsonl", epochs);

  const ordered_json meta = {{"train", tc.to_json()},
                             {"epochs_run", run.result.log.size()},
                             {"best_epoch", run.result.best_epoch},
                             {"best_dev_weighted_f1", run.result.best_dev_f1}};
  save_checkpoint(run.model, ctx.root() / rel_dir / "checkpoint.bin", meta);
  ctx.record(rel_dir / "checkpoint.bin");
  if (run.result.best_params) {
    fusion::FusionModel best(mc);
    best.params() = *run.result.best_params;
    save_checkpoint(best, ctx.root() / rel_dir / "best.bin", meta);
    ctx.record(rel_dir / "best.bin");
  }

  ordered_json summary = {{"model", mc.to_json()},
                          {"train", tc.to_json()},
                          {"examples", {{"train", ds.train.size()}, {"dev", ds.dev.size()}, {"test", ds.test.size()}}},
                          {"final_train_loss", run.result.log.back().train_loss},
                          {"best_epoch", run.result.best_epoch},
                          {"best_dev_weighted_f1", run.result.best_dev_f1}};
  if (!ds.test.empty()) {
    std::vector<fusion::Example> test;
    for (const TrainExample& t : ds.test) test.push_back(t.example);
    run.test = evaluate(run.model, test);
    ctx.write_json(rel_dir / "eval.json", eval_to_json(*run.test));
    ctx.write_text(rel_dir / "eval.txt", format_eval_report(*run.test));
    summary["test"] = {{"accuracy", run.test->accuracy}, {"weighted_f1", run.test->weighted_f1}};
  }
  ctx.write_json(rel_dir / "summary.json", summary);
  return run;
}

std::string model_name(const json& model) {
  if (model.contains("name")) return model["name"].get<std::string>();
  return get_or<std::string>(model, "arch", "early_fusion");
}

}  // namespace

std::string cmd_synth(const PipelineConfig& config) {
  RunContext ctx(config, "synth");
  json spec_json = config.section("synth");
  const bool with_images = get_or<bool>(spec_json, "images", true);
  const std::string format = get_or<std::string>(spec_json, "format", "tsv");
  if (format != "tsv" && format != "jsonl") throw ConfigError("synth.format must be tsv or jsonl");
  const fs::path dir = spec_json.contains("output_dir")
                           ? config.resolve(spec_json["output_dir"].get<std::string>())
                           : ctx.dir();
  for (const char* k : {"images", "format", "output_dir"}) spec_json.erase(k);
  if (!spec_json.contains("seed")) spec_json["seed"] = config.seed();
  const SynthSpec spec = SynthSpec::from_json(spec_json);
  const fs::path manifest =
      write_corpus(spec, dir, format == "tsv" ? ManifestFormat::tsv : ManifestFormat::jsonl, with_images);

  const fs::path rel = relative_to_root(ctx, dir);
  const bool inside = !rel.empty() && *rel.begin() != "..";
  const ManifestLoad load = load_manifest(manifest);
  if (inside) {
    ctx.record(rel / manifest.filename());
    if (with_images) {
      for (const MultimodalSample& s : load.samples) ctx.record(rel / s.image_ref);
    }
  }
  const ClassDistribution dist = class_distribution(load.samples);
  ctx.write_json("synth/spec.json", spec.to_json());
  ctx.write_json("synth/distribution.json", distribution_to_json(dist));
  ctx.log("wrote " + std::to_string(load.samples.size()) + " samples to " + manifest.generic_string());
  ctx.finish();
  return "synth: " + std::to_string(load.samples.size()) + " samples -> " + manifest.string() + "\n" +
         format_distribution_table(dist);
}

std::string cmd_ingest(const PipelineConfig& config) {
  RunContext ctx(config, "ingest");
  const fs::path manifest = config.manifest();
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw ConfigError("manifest '" + manifest.string() + "' does not exist");
  LoadOptions opts;
  opts.image_root = manifest.parent_path();
  opts.check_images = get_or<bool>(config.section("data"), "check_images", true);
  const ManifestLoad load = read_manifest(in, format_from_path(manifest), opts);

  std::string errors;
  for (const RowError& e : load.errors) {
    errors += ordered_json{{"line", e.line}, {"message", e.message}}.dump() + "\n";
  }
  std::string warnings;
  for (const std::string& w : load.warnings) warnings += w + "\n";
  ctx.write_text("ingest/errors.jsonl", errors);
  ctx.write_text("ingest/warnings.txt", warnings);

  const ClassDistribution dist = class_distribution(load.samples);
  ctx.write_json("ingest/distribution.json", distribution_to_json(dist));
  ctx.write_text("ingest/distribution.txt", format_distribution_table(dist));
  if (dist.total(Split::train) > 0) {
    ordered_json imb = ordered_json::array();
    for (const ImbalanceEntry& e : imbalance_report(dist)) {
      imb.push_back({{"label", label_name(e.label)}, {"count", e.count}, {"fraction", e.fraction}});
    }
    ctx.write_json("ingest/imbalance.json", imb);
  }
  ctx.log(std::to_string(load.samples.size()) + " valid rows, " + std::to_string(load.errors.size()) +
          " invalid, " + std::to_string(load.warnings.size()) + " warnings");
  if (!load.errors.empty()) {
    ctx.finish("invalid_rows");
    throw DataError(std::to_string(load.errors.size()) +
                    " invalid manifest rows; see ingest/errors.jsonl (first: line " +
                    std::to_string(load.errors.front().line) + ": " + load.errors.front().message + ")");
  }
  ctx.finish();
  return "ingest: " + std::to_string(load.samples.size()) + " rows, " +
         std::to_string(load.warnings.size()) + " warnings\n" + format_distribution_table(dist);
}

std::string cmd_plan(const PipelineConfig& config) {
  RunContext ctx(config, "plan");
  const ManifestLoad data = load_dataset(config.manifest());
  std::vector<MultimodalSample> originals;
  for (const MultimodalSample& s : data.samples) {
    if (s.provenance == Provenance::original) originals.push_back(s);
  }
  const ImageAugmentOptions o = image_options(config.section("augment").value("image", json::object()));
  const ClassDistribution dist = class_distribution(originals);
  const BalancePlan plan = plan_balance(dist, o.targets, o.factor);
  ordered_json j = plan_to_json(plan);
  ctx.write_json("plan/plan.json", j);
  std::string text = "Class                  Train  Additions\n";
  char buf[128];
  for (HumanitarianLabel l : kAllLabels) {
    std::snprintf(buf, sizeof buf, "%-22s %6zu %10zu\n", std::string(label_name(l)).c_str(),
                  dist.count(Split::train, l), plan.of(l));
    text += buf;
  }
  std::snprintf(buf, sizeof buf, "%-22s %6zu %10zu\n", "total", dist.total(Split::train), plan.total());
  text += buf;
  ctx.write_text("plan/plan.txt", text);
  ctx.log("planned " + std::to_string(plan.total()) + " additions");
  ctx.finish();
  return "plan (factor " + fmt("%g", o.factor) + ")\n" + text;
}

std::string cmd_augment(const PipelineConfig& config, std::string_view modality) {
  if (modality != "text" && modality != "image") {
    throw ConfigError("augment: modality must be 'text' or 'image'");
  }
  RunContext ctx(config, "augment");
  const fs::path manifest = config.manifest();
  const ManifestLoad data = load_dataset(manifest);
  const BackendSet backends(config.section("backends"));
  const json aug = config.section("augment");
  const json section = aug.value(std::string(modality), json::object());
  const std::uint64_t seed = get_or<std::uint64_t>(section, "seed", config.seed());
  const ImageLoader load = make_image_loader(manifest.parent_path());
  const std::vector<MultimodalSample> train = train_rows(data.samples);
  IdAllocator ids(data.samples);

  std::vector<AugmentationRecord> records;
  std::string method;
  fs::path rel_dir;
  if (modality == "text") {
    const TextAugmentOptions o = text_options(section);
    method = std::string(method_name(o.method));
    rel_dir = fs::path("augment") / method;
    TextBackends tb;
    tb.translator = &backends.translator();
    tb.paraphraser = &backends.paraphraser();
    tb.embedder = &backends.embedder();
    tb.captioner = &backends.captioner();
    tb.load_image = load;
    records = augment_text_corpus(train, o, tb, seed, ids);
  } else {
    const ImageAugmentOptions o = image_options(section);
    method = std::string(method_name(o.method));
    rel_dir = fs::path("augment") / method;
    const fs::path out_dir = ctx.root() / rel_dir;
    records = augment_image_corpus(
        train, o, backends.image_gen(), load,
        [](const std::string& id) { return "images/" + file_safe(id) + ".png"; },
        [&](const Image& img, const std::string& ref) {
          save_png(img, out_dir / ref);
          ctx.record(rel_dir / ref);
        },
        seed, ids);
  }

  // Augmented manifest: every input row (refs rebased) followed by accepted
  // new samples. Text children share their parent's image and are rebased
  // too; generated images already live under the output directory.
  const fs::path out_dir = ctx.root() / rel_dir;
  std::vector<MultimodalSample> rows;
  for (MultimodalSample s : data.samples) {
    s.image_ref = rebase_ref(s.image_ref, manifest.parent_path(), out_dir);
    rows.push_back(std::move(s));
  }
  for (MultimodalSample s : accepted_samples(records)) {
    if (modality == "text") s.image_ref = rebase_ref(s.image_ref, manifest.parent_path(), out_dir);
    rows.push_back(std::move(s));
  }
  const ManifestFormat fmt_out = format_from_path(manifest);
  const std::string manifest_name = fmt_out == ManifestFormat::tsv ? "manifest.tsv" : "manifest.jsonl";
  std::ostringstream ms;
  write_manifest(ms, rows, fmt_out);
  ctx.write_text(rel_dir / manifest_name, ms.str());
  std::ostringstream rs;
  write_records(rs, records);
  ctx.write_text(rel_dir / "records.jsonl", rs.str());

  const ClassDistribution before = class_distribution(data.samples);
  const ClassDistribution after = class_distribution(rows);
  ordered_json summary = {{"method", method},
                          {"modality", modality},
                          {"seed", seed},
                          {"verdicts", verdict_summary(records)},
                          {"train_rows_before", before.total(Split::train)},
                          {"train_rows_after", after.total(Split::train)},
                          {"distribution", distribution_to_json(after)}};
  ctx.write_json(rel_dir / "summary.json", summary);
  ctx.log(method + ": " + std::to_string(records.size()) + " records, train rows " +
          std::to_string(before.total(Split::train)) + " -> " + std::to_string(after.total(Split::train)));
  ctx.finish();
  return "augment " + method + ": " + std::to_string(records.size()) + " records, train rows " +
         std::to_string(before.total(Split::train)) + " -> " +
         std::to_string(after.total(Split::train)) + "\n  " + (ctx.root() / rel_dir / manifest_name).string() +
         "\n";
}

std::string cmd_quality(const PipelineConfig& config) {
  RunContext ctx(config, "quality");
  const ManifestLoad data = load_dataset(config.manifest());
  std::unordered_map<std::string, const MultimodalSample*> by_id;
  for (const MultimodalSample& s : data.samples) by_id[s.sample_id] = &s;

  std::vector<fs::path> files;
  const json q = config.section("quality");
  if (q.contains("records")) {
    for (const std::string& p : get_or<std::vector<std::string>>(q, "records", {})) {
      files.push_back(config.resolve(p));
    }
  } else {
    for (AugMethod m : {AugMethod::back_translation, AugMethod::paraphrase, AugMethod::caption_concat}) {
      const fs::path p = ctx.root() / "augment" / std::string(method_name(m)) / "records.jsonl";
      if (fs::exists(p)) files.push_back(p);
    }
  }
  if (files.empty()) throw DataError("quality: no text augmentation records found");

  const BackendSet backends(config.section("backends"));
  std::vector<QualityReport> reports;
  for (const fs::path& f : files) {
    if (!fs::exists(f)) throw ConfigError("records file '" + f.string() + "' does not exist");
    const auto records = read_records(f);
    std::vector<TextPair> pairs;
    std::string method;
    for (const AugmentationRecord& r : records) {
      if (!is_text_method(r.method)) throw DataError(f.string() + ": not a text augmentation record");
      method = std::string(method_name(r.method));
      if (!r.verdict.accepted) continue;
      const auto parent = r.new_sample.parent_id ? by_id.find(*r.new_sample.parent_id) : by_id.end();
      if (parent == by_id.end()) {
        throw DataError(f.string() + ": parent of '" + r.new_sample.sample_id + "' is not in the manifest");
      }
      pairs.push_back({parent->second->tweet_text, r.new_sample.tweet_text});
    }
    if (pairs.empty()) throw DataError(f.string() + ": no accepted augmented texts to score");
    QualityReport rep = corpus_quality(pairs, method, backends.embedder(), backends.lm_scorer());
    ctx.write_json(fs::path("quality") / (method + ".json"), quality_to_json(rep));
    ctx.log(method + ": " + std::to_string(rep.n) + " pairs");
    reports.push_back(std::move(rep));
  }
  ordered_json all = ordered_json::array();
  for (const QualityReport& r : reports) all.push_back(quality_to_json(r));
  ctx.write_json("quality/reports.json", all);
  const std::string table = format_quality_table(reports);
  ctx.write_text("quality/table.txt", table);
  ctx.finish();
  return table;
}

std::string cmd_train(const PipelineConfig& config) {
  RunContext ctx(config, "train");
  const json model = config.section("model");
  const json t = config.section("train");
  const fs::path manifest =
      t.contains("manifest") ? config.resolve(t["manifest"].get<std::string>()) : config.manifest();
  const std::string name = get_or<std::string>(t, "name", model_name(model));
  TrainedRun run = run_training(config, ctx, fs::path("train") / name, manifest, model);
  ctx.finish();
  std::string out = "train " + name + ": " + std::to_string(run.result.log.size()) +
                    " epochs, final loss " + fmt("%.6f", run.result.log.back().train_loss) + "\n";
  if (run.test) {
    out += "test accuracy " + fmt("%.4f", run.test->accuracy) + ", weighted F1 " +
           fmt("%.4f", run.test->weighted_f1) + "\n";
  }
  return out;
}

std::string cmd_eval(const PipelineConfig& config) {
  RunContext ctx(config, "eval");
  const json e = config.section("eval");
  const std::string name = get_or<std::string>(e, "name", model_name(config.section("model")));
  const fs::path checkpoint =
      e.contains("checkpoint") ? config.resolve(e["checkpoint"].get<std::string>())
                               : ctx.root() / "train" / name /
                                     (get_or<bool>(e, "use_best", false) ? "best.bin" : "checkpoint.bin");
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint '" + checkpoint.string() + "' does not exist");
  const fs::path manifest =
      e.contains("manifest") ? config.resolve(e["manifest"].get<std::string>()) : config.manifest();
  const auto split = parse_split(get_or<std::string>(e, "split", "test"));
  if (!split) throw ConfigError("eval.split must be train, dev or test");

  fusion::LoadedCheckpoint ck = fusion::load_checkpoint(checkpoint);
  const fusion::FusionConfig& mc = ck.model.config();
  const BackendSet backends(config.section("backends"));
  const fusion::Featurizer featurizer(
      mc, mc.text_encoder == fusion::EncoderKind::plugin ? &backends.embedder() : nullptr,
      mc.image_encoder == fusion::EncoderKind::plugin ? &backends.image_embedder() : nullptr);
  const ManifestLoad data = load_dataset(manifest);
  std::vector<MultimodalSample> rows;
  for (const MultimodalSample& s : data.samples) {
    if (s.split == *split && s.provenance == Provenance::original) rows.push_back(s);
  }
  if (rows.empty()) throw DataError("eval: no original rows in the " + std::string(split_name(*split)) + " split");
  // Inference supplies original pairs only.
  const Datasets ds = build_datasets(rows, fusion::Arch::early_fusion, featurizer,
                                     make_image_loader(manifest.parent_path()), nullptr);
  const auto& set = *split == Split::train ? ds.train : (*split == Split::dev ? ds.dev : ds.test);
  std::vector<fusion::Example> examples;
  for (const TrainExample& t : set) examples.push_back(t.example);
  const EvalReport report = evaluate(ck.model, examples);
  const fs::path rel = fs::path("eval") / name;
  ctx.write_json(rel / "report.json", eval_to_json(report));
  const std::string text = format_eval_report(report);
  ctx.write_text(rel / "report.txt", text);
  ctx.log(name + ": accuracy " + fmt("%.4f", report.accuracy) + " weighted_f1 " + fmt("%.4f", report.weighted_f1));
  ctx.finish();
  return text;
}

namespace {

std::optional<RunMetrics> metrics_from(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  return RunMetrics{j.at("accuracy").get<double>(), j.at("weighted_f1").get<double>()};
}

void write_comparison(RunContext& ctx, const fs::path& rel_dir, std::span<const ComparisonRow> rows,
                      std::string_view label) {
  ctx.write_text(rel_dir / "comparison.txt", comparison_report(rows, label));
  ctx.write_json(rel_dir / "comparison.json", comparison_to_json(rows));
}

}  // namespace

std::string cmd_report(const PipelineConfig& config) {
  RunContext ctx(config, "report");
  const json r = config.section("report");
  const std::string label = get_or<std::string>(r, "augmented_label", "Augmented");
  std::vector<ComparisonRow> rows;
  if (r.contains("runs")) {
    for (const auto& run : r["runs"]) {
      ComparisonRow row;
      row.model = get_or<std::string>(run, "model", "");
      if (row.model.empty()) throw ConfigError("report.runs entries need a model name");
      if (run.contains("original")) {
        const fs::path p = config.resolve(run["original"].get<std::string>());
        row.original = metrics_from(p);
        if (!row.original) throw ConfigError("report: '" + p.string() + "' does not exist");
      }
      if (run.contains("augmented")) {
        const fs::path p = config.resolve(run["augmented"].get<std::string>());
        row.augmented = metrics_from(p);
        if (!row.augmented) throw ConfigError("report: '" + p.string() + "' does not exist");
      }
      rows.push_back(std::move(row));
    }
  } else {
    const fs::path base = ctx.root() / "train_eval";
    std::vector<std::string> names;
    if (fs::exists(base)) {
      for (const auto& entry : fs::directory_iterator(base)) {
        if (entry.is_directory()) names.push_back(entry.path().filename().string());
      }
    }
    std::sort(names.begin(), names.end());
    for (const std::string& n : names) {
      ComparisonRow row;
      row.model = n;
      row.original = metrics_from(base / n / "original" / "eval.json");
      row.augmented = metrics_from(base / n / "augmented" / "eval.json");
      if (row.original || row.augmented) rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) throw DataError("report: no evaluation results found");
  write_comparison(ctx, "report", rows, label);
  ctx.finish();
  return comparison_report(rows, label);
}

std::string cmd_train_eval(const PipelineConfig& config) {
  RunContext ctx(config, "train_eval");
  const json te = config.section("train_eval");
  const json base_model = config.section("model");
  std::vector<std::string> archs = get_or<std::vector<std::string>>(
      te, "archs", {get_or<std::string>(base_model, "arch", "early_fusion")});
  if (archs.empty()) throw ConfigError("train_eval.archs is empty");
  const fs::path original = config.manifest();
  std::optional<fs::path> augmented;
  if (te.contains("augmented_manifest")) augmented = config.resolve(te["augmented_manifest"].get<std::string>());
  const std::string label = get_or<std::string>(te, "augmented_label", "Augmented");

  std::vector<ComparisonRow> rows;
  for (const std::string& arch : archs) {
    json m = base_model;
    m["arch"] = arch;
    ComparisonRow row;
    row.model = arch;
    const fs::path dir = fs::path("train_eval") / arch;
    TrainedRun a = run_training(config, ctx, dir / "original", original, m);
    if (a.test) row.original = RunMetrics{a.test->accuracy, a.test->weighted_f1};
    if (augmented) {
      TrainedRun b = run_training(config, ctx, dir / "augmented", *augmented, m);
      if (b.test) row.augmented = RunMetrics{b.test->accuracy, b.test->weighted_f1};
    }
    rows.push_back(std::move(row));
  }
  write_comparison(ctx, "train_eval", rows, label);
  ctx.finish();
  return comparison_report(rows, label);
}

}  // namespace crisisaug::pipeline
