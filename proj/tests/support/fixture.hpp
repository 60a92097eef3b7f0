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

#pragma once

// A small end-to-end pipeline configuration shared by the CLI tests.

#include <string>

#include <nlohmann/json.hpp>

namespace testutil {

/// Everything lands under <dir>/run; the synthetic corpus is run/synth.
inline nlohmann::json small_pipeline_config() {
  nlohmann::json counts = {
      {"train", {{"affected_individuals", 4}, {"infrastructure_damage", 4}, {"not_humanitarian", 4},
                 {"other_relevant", 4}, {"rescue_volunteering", 4}}},
      {"dev", {{"affected_individuals", 2}, {"infrastructure_damage", 2}, {"not_humanitarian", 2},
               {"other_relevant", 2}, {"rescue_volunteering", 2}}},
      {"test", {{"affected_individuals", 2}, {"infrastructure_damage", 2}, {"not_humanitarian", 2},
                {"other_relevant", 2}, {"rescue_volunteering", 2}}}};
  return {
      {"seed", 7},
      {"output_dir", "run"},
      {"data", {{"manifest", "run/synth/manifest.tsv"}}},
      {"synth", {{"counts", counts}, {"image_size", 16}, {"signal", 1.0}, {"vocab_size", 50}}},
      {"backends", {{"translator", {{"kind", "stub"}, {"mode", "identity"}}},
                    {"lm_scorer", {{"vocab_size", 50}}}}},
      {"augment",
       {{"text", {{"method", "back_translation"}}},
        {"image", {{"method", "real_guidance"}}}}},
      {"model",
       {{"arch", "early_fusion"}, {"d", 8}, {"heads", 2}, {"hidden", 8}, {"text_buckets", 64},
        {"token_dim", 8}, {"image_size", 16}, {"patch_size", 4}}},
      {"train", {{"epochs", 2}, {"batch_size", 8}, {"learning_rate", 0.01}}},
      {"train_eval",
       {{"archs", {"early_fusion", "multiview_cross"}},
        {"augmented_manifest", "run/augment/back_translation/manifest.tsv"},
        {"augmented_label", "Back-translation"}}},
  };
}

}  // namespace testutil
