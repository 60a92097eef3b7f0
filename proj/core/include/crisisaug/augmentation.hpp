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

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "crisisaug/data_model.hpp"
#include "crisisaug/image.hpp"

namespace crisisaug {

enum class AugMethod { back_translation, paraphrase, caption_concat, real_guidance, diffusemix };

std::string_view method_name(AugMethod m);
std::optional<AugMethod> parse_method(std::string_view s);
bool is_text_method(AugMethod m);

struct Verdict {
  bool accepted = true;
  std::string reason;  // empty when accepted

  static Verdict accept() { return {}; }
  static Verdict reject(std::string why) { return {false, std::move(why)}; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// One attempted augmentation. Rejected records keep the candidate for
/// auditing but never reach a training manifest.
struct AugmentationRecord {
  MultimodalSample new_sample;
  AugMethod method = AugMethod::back_translation;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  Verdict verdict;

  friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

nlohmann::ordered_json record_to_json(const AugmentationRecord& r);
/// Keeps the key order of `params`.
AugmentationRecord record_from_json(const nlohmann::ordered_json& j);

void write_records(std::ostream& out, std::span<const AugmentationRecord> records);
void write_records(const std::filesystem::path& path, std::span<const AugmentationRecord> records);
std::vector<AugmentationRecord> read_records(std::istream& in);
std::vector<AugmentationRecord> read_records(const std::filesystem::path& path);

/// New samples of accepted records, in record order.
std::vector<MultimodalSample> accepted_samples(std::span<const AugmentationRecord> records);

/// Resolves and decodes a sample's image.
using ImageLoader = std::function<Image(const MultimodalSample&)>;

/// Hands out "{parent_id}#aug{k}" ids, k the smallest index not yet taken.
class IdAllocator {
 public:
  IdAllocator() = default;
  explicit IdAllocator(std::span<const MultimodalSample> existing);

  std::string next(std::string_view parent_id);

 private:
  std::unordered_set<std::string> taken_;
  std::unordered_map<std::string, std::size_t> cursor_;
};

}  // namespace crisisaug
