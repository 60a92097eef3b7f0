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

#include "crisisaug/text_augmentation.hpp"

#include <cmath>
#include <stdexcept>

#include "crisisaug/error.hpp"
#include "crisisaug/executor.hpp"
#include "crisisaug/quality_metrics.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {

BackTranslationChain BackTranslationChain::standard() {
  return {{{"en", "fr"}, {"fr", "de"}, {"de", "fr"}, {"fr", "en"}}};
}

void BackTranslationChain::validate(std::string_view corpus_lang) const {
  if (hops.empty()) throw std::invalid_argument("back-translation chain is empty");
  if (hops.front().source != corpus_lang || hops.back().target != corpus_lang) {
    throw std::invalid_argument("back-translation chain must start and end at '" +
                                std::string(corpus_lang) + "'");
  }
  for (std::size_t i = 1; i < hops.size(); ++i) {
    if (hops[i].source != hops[i - 1].target) {
      throw std::invalid_argument("back-translation hop " + std::to_string(i) +
                                  " does not continue from the previous target");
    }
  }
}

BackTranslation back_translate(std::string_view text, const BackTranslationChain& chain,
                               const TranslatorBackend& translator) {
  chain.validate(chain.hops.empty() ? "en" : chain.hops.front().source);
  BackTranslation out;
  std::string current(text);
  for (std::size_t k = 0; k < chain.hops.size(); ++k) {
    const TranslationHop& hop = chain.hops[k];
    try {
      current = translator.translate(current, hop.source, hop.target);
    } catch (const std::exception& e) {
      throw BackendError("back-translation hop " + std::to_string(k) + " (" + hop.source +
                         "->" + hop.target + ") failed: " + e.what());
    }
    out.transcript.push_back({hop, current});
  }
  out.text = std::move(current);
  return out;
}

std::vector<ParaphraseCandidate> paraphrase_candidates(std::string_view text, std::size_t n,
                                                       const ParaphraserBackend& backend,
                                                       std::string_view prompt_template,
                                                       std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("paraphrase candidate count must be >= 1");
  std::vector<ParaphraseCandidate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParaphraseCandidate c;
    c.seed = seed + i;
    try {
      std::string p = backend.paraphrase(text, prompt_template, c.seed);
      if (text::trim(p).empty()) {
        c.error = "paraphraser returned empty text";
      } else {
        c.text = std::move(p);
      }
    } catch (const std::exception& e) {
      c.error = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

void ParaphraseFilterPolicy::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(min_similarity) || !unit(max_similarity)) {
    throw std::invalid_argument("similarity thresholds must lie in [0, 1]");
  }
  if (!(min_similarity <= max_similarity)) {
    throw std::invalid_argument("min_similarity must not exceed max_similarity");
  }
  if (!(min_length_ratio > 0.0) || !(max_length_ratio > 0.0) ||
      !(min_length_ratio < max_length_ratio)) {
    throw std::invalid_argument("length ratios must be positive with min < max");
  }
}

nlohmann::ordered_json ParaphraseFilterPolicy::to_json() const {
  return {{"min_similarity", min_similarity},
          {"max_similarity", max_similarity},
          {"min_length_ratio", min_length_ratio},
          {"max_length_ratio", max_length_ratio},
          {"label_check", static_cast<bool>(label_checker)}};
}

FilterOutcome filter_paraphrase(std::string_view original, std::string_view candidate,
                                const ParaphraseFilterPolicy& policy,
                                const EmbedderBackend& embedder,
                                std::optional<HumanitarianLabel> label) {
  const auto orig_tokens = text::whitespace_tokens(original);
  const auto cand_tokens = text::whitespace_tokens(candidate);
  if (orig_tokens.empty() || cand_tokens.empty()) {
    throw std::invalid_argument("paraphrase filter needs non-empty texts");
  }
  FilterOutcome out;
  out.similarity = cosine_similarity(embedder.embed(original), embedder.embed(candidate));
  out.length_ratio =
      static_cast<double>(cand_tokens.size()) / static_cast<double>(orig_tokens.size());

  if (out.similarity > policy.max_similarity) {
    out.verdict = Verdict::reject(std::string(kRejectNotDiverse));
  } else if (out.similarity < policy.min_similarity) {
    out.verdict = Verdict::reject(std::string(kRejectOffMeaning));
  } else if (out.length_ratio < policy.min_length_ratio ||
             out.length_ratio > policy.max_length_ratio) {
    out.verdict = Verdict::reject(std::string(kRejectLength));
  } else if (policy.label_checker && label && !policy.label_checker(candidate, *label)) {
    out.verdict = Verdict::reject(std::string(kRejectLabel));
  } else {
    out.verdict = Verdict::accept();
  }
  return out;
}

std::string caption_augment(std::string_view text, std::string_view caption,
                            std::string_view separator) {
  if (text::trim(caption).empty()) throw std::invalid_argument("caption is empty");
  std::string out(text);
  out.append(separator);
  out.append(caption);
  return out;
}

namespace {

// A record without its final sample id; ids are assigned afterwards in input
// order so parallel execution cannot perturb them.
struct Draft {
  std::string text;
  nlohmann::ordered_json params;
  Verdict verdict;
};

nlohmann::ordered_json chain_to_json(const BackTranslationChain& chain) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const TranslationHop& h : chain.hops) j.push_back({h.source, h.target});
  return j;
}

std::vector<Draft> augment_one(const MultimodalSample& s, const TextAugmentOptions& opt,
                               const TextBackends& be, std::uint64_t sample_seed) {
  std::vector<Draft> drafts;
  switch (opt.method) {
    case AugMethod::back_translation: {
      Draft d;
      d.params["chain"] = chain_to_json(opt.chain);
      try {
        BackTranslation bt = back_translate(s.tweet_text, opt.chain, *be.translator);
        nlohmann::ordered_json transcript = nlohmann::ordered_json::array();
        for (const HopOutput& h : bt.transcript) {
          transcript.push_back({{"source", h.hop.source}, {"target", h.hop.target}, {"text", h.text}});
        }
        d.params["transcript"] = transcript;
        if (text::trim(bt.text).empty()) {
          d.text = s.tweet_text;
          d.verdict = Verdict::reject(std::string(kRejectBackend));
          d.params["error"] = "translator returned empty text";
        } else {
          d.text = std::move(bt.text);
        }
      } catch (const std::exception& e) {
        d.text = s.tweet_text;
        d.verdict = Verdict::reject(std::string(kRejectBackend));
        d.params["error"] = e.what();
      }
      drafts.push_back(std::move(d));
      break;
    }
    case AugMethod::paraphrase: {
      const auto candidates = paraphrase_candidates(s.tweet_text, opt.n_candidates,
                                                    *be.paraphraser, opt.prompt_template,
                                                    sample_seed);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const ParaphraseCandidate& c = candidates[i];
        Draft d;
        d.params["template"] = opt.prompt_template;
        d.params["candidate_index"] = i;
        d.params["seed"] = c.seed;
        d.params["policy"] = opt.policy.to_json();
        if (!c.text) {
          d.text = s.tweet_text;
          d.verdict = Verdict::reject(std::string(kRejectBackend));
          d.params["error"] = c.error;
        } else {
          d.text = *c.text;
          try {
            const FilterOutcome f =
                filter_paraphrase(s.tweet_text, *c.text, opt.policy, *be.embedder, s.label);
            d.verdict = f.verdict;
            d.params["similarity"] = f.similarity;
            d.params["length_ratio"] = f.length_ratio;
          } catch (const std::exception& e) {
            d.verdict = Verdict::reject(std::string(kRejectBackend));
            d.params["error"] = e.what();
          }
        }
        drafts.push_back(std::move(d));
      }
      break;
    }
    case AugMethod::caption_concat: {
      Draft d;
      d.params["separator"] = opt.caption_separator;
      try {
        const std::string caption = be.captioner->caption(be.load_image(s));
        d.params["caption"] = caption;
        d.text = caption_augment(s.tweet_text, caption, opt.caption_separator);
      } catch (const std::exception& e) {
        d.text = s.tweet_text;
        d.verdict = Verdict::reject(std::string(kRejectBackend));
        d.params["error"] = e.what();
      }
      drafts.push_back(std::move(d));
      break;
    }
    default:
      throw std::invalid_argument("not a text augmentation method: " +
                                  std::string(method_name(opt.method)));
  }
  return drafts;
}

}  // namespace

std::vector<AugmentationRecord> augment_text_corpus(std::span<const MultimodalSample> samples,
                                                    const TextAugmentOptions& options,
                                                    const TextBackends& backends,
                                                    std::uint64_t seed, IdAllocator& ids) {
  if (!is_text_method(options.method)) {
    throw std::invalid_argument("not a text augmentation method");
  }
  for (const MultimodalSample& s : samples) {
    if (s.split != Split::train) {
      throw std::invalid_argument("text augmentation applies to the train split only ('" +
                                  s.sample_id + "' is " + std::string(split_name(s.split)) + ")");
    }
  }
  Concurrency cls = Concurrency::reentrant;
  switch (options.method) {
    case AugMethod::back_translation:
      if (!backends.translator) throw std::invalid_argument("back-translation needs a translator");
      options.chain.validate(options.corpus_lang);
      cls = backends.translator->concurrency();
      break;
    case AugMethod::paraphrase:
      if (!backends.paraphraser || !backends.embedder) {
        throw std::invalid_argument("paraphrasing needs a paraphraser and an embedder");
      }
      if (options.n_candidates == 0) throw std::invalid_argument("n_candidates must be >= 1");
      options.policy.validate();
      cls = combine(backends.paraphraser->concurrency(), backends.embedder->concurrency());
      break;
    case AugMethod::caption_concat:
      if (!backends.captioner || !backends.load_image) {
        throw std::invalid_argument("caption augmentation needs a captioner and an image loader");
      }
      cls = backends.captioner->concurrency();
      break;
    default:
      break;
  }

  const auto drafts = ordered_map<std::vector<Draft>>(
      samples.size(),
      [&](std::size_t i) -> std::vector<Draft> {
        const MultimodalSample& s = samples[i];
        if (s.provenance != Provenance::original) {
          Draft d;
          d.text = s.tweet_text;
          d.verdict = Verdict::reject(std::string(kRejectProvenance));
          return {d};
        }
        return augment_one(s, options, backends, mix_seed(seed, fnv1a64(s.sample_id)));
      },
      cls, options.threads);

  std::vector<AugmentationRecord> records;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MultimodalSample& parent = samples[i];
    for (std::size_t k = 0; k < drafts[i].size(); ++k) {
      const Draft& d = drafts[i][k];
      AugmentationRecord r;
      r.method = options.method;
      r.params = d.params;
      r.verdict = d.verdict;
      r.new_sample = parent;
      r.new_sample.tweet_text = d.text;
      r.new_sample.provenance = Provenance::augmented;
      r.new_sample.parent_id = parent.sample_id;
      r.new_sample.sample_id = d.verdict.accepted
                                   ? ids.next(parent.sample_id)
                                   : parent.sample_id + "#rejected" + std::to_string(k);
      records.push_back(std::move(r));
    }
  }
  return records;
}

}  // namespace crisisaug
