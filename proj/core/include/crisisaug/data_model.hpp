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

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace crisisaug {

/// The five humanitarian categories. The index mapping is fixed; model
/// outputs, confusion matrices and checkpoints all depend on it.
enum class HumanitarianLabel : int {
  affected_individuals = 0,
  infrastructure_damage = 1,
  not_humanitarian = 2,
  other_relevant = 3,
  rescue_volunteering = 4,
};

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<HumanitarianLabel, kNumClasses> kAllLabels = {
    HumanitarianLabel::affected_individuals,
    HumanitarianLabel::infrastructure_damage,
    HumanitarianLabel::not_humanitarian,
    HumanitarianLabel::other_relevant,
    HumanitarianLabel::rescue_volunteering,
};

constexpr std::size_t label_index(HumanitarianLabel l) {
  return static_cast<std::size_t>(l);
}
HumanitarianLabel label_from_index(std::size_t i);

/// Canonical snake_case name, e.g. "infrastructure_damage".
std::string_view label_name(HumanitarianLabel l);
/// Human-readable phrase used in prompts, e.g. "infrastructure and utility damage".
std::string_view label_phrase(HumanitarianLabel l);
/// Case-insensitive; spaces, underscores and hyphens are interchangeable.
std::optional<HumanitarianLabel> parse_label(std::string_view s);

enum class Split : int { train = 0, dev = 1, test = 2 };
inline constexpr std::size_t kNumSplits = 3;
std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view s);

enum class Provenance : int { original = 0, augmented = 1 };
std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

// One tweet with its image. Augmented samples point at their parent.
struct MultimodalSample {
  std::string sample_id;
  std::string tweet_text;
  std::string image_ref;
  HumanitarianLabel label = HumanitarianLabel::not_humanitarian;
  Split split = Split::train;
  Provenance provenance = Provenance::original;
  std::optional<std::string> parent_id;

  friend bool operator==(const MultimodalSample&,
                         const MultimodalSample&) = default;
};

nlohmann::ordered_json sample_to_json(const MultimodalSample& s);
/// Throws DataError on missing keys or unknown enum values.
MultimodalSample sample_from_json(const nlohmann::json& j);

enum class ManifestFormat { tsv, jsonl };
std::string_view format_name(ManifestFormat f);
/// ".tsv" / ".jsonl" / ".json" by extension; throws ConfigError otherwise.
ManifestFormat format_from_path(const std::filesystem::path& p);

struct RowError {
  std::size_t line = 0;  // 1-based; header is line 1 for TSV
  std::string message;
};

struct LoadOptions {
  /// Resolve relative image_refs against this directory and warn when the
  /// file is missing. Empty disables the check.
  std::filesystem::path image_root;
  bool check_images = false;
};

struct ManifestLoad {
  std::vector<MultimodalSample> samples;
  std::vector<RowError> errors;
  std::vector<std::string> warnings;
};

/// Parses a manifest. Bad rows become RowErrors; a duplicate sample_id or a
/// missing required column is fatal (DataError). Augmented rows whose parent
/// is unknown or lives in another split are rejected as row errors.
ManifestLoad read_manifest(std::istream& in, ManifestFormat format,
                           const LoadOptions& opts = {});
ManifestLoad load_manifest(const std::filesystem::path& path,
                           ManifestFormat format);
ManifestLoad load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, std::span<const MultimodalSample> samples,
                    ManifestFormat format);
void write_manifest(const std::filesystem::path& path,
                    std::span<const MultimodalSample> samples,
                    ManifestFormat format);

/// Throws DataError if the sample set violates the provenance invariants
/// (parent presence, resolvability, split inheritance) or has duplicate ids.
void validate_samples(std::span<const MultimodalSample> samples);

struct ClassDistribution {
  std::array<std::array<std::size_t, kNumClasses>, kNumSplits> counts{};

  std::size_t count(Split s, HumanitarianLabel l) const {
    return counts[static_cast<std::size_t>(s)][label_index(l)];
  }
  std::size_t total(Split s) const;
  friend bool operator==(const ClassDistribution&,
                         const ClassDistribution&) = default;
};

ClassDistribution class_distribution(std::span<const MultimodalSample> samples);

struct ImbalanceEntry {
  HumanitarianLabel label;
  std::size_t count = 0;
  double fraction = 0.0;
};

/// Train-split classes ranked by descending count (ties by label index).
/// Throws DataError when the train split is empty.
std::vector<ImbalanceEntry> imbalance_report(const ClassDistribution& dist);

nlohmann::ordered_json distribution_to_json(const ClassDistribution& dist);
/// Text table with one row per class and a Total row, Train/Dev/Test columns.
std::string format_distribution_table(const ClassDistribution& dist);

/// The per-class split counts of the agreed-upon humanitarian subset.
ClassDistribution reference_distribution();

}  // namespace crisisaug
