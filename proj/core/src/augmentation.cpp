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

#include "crisisaug/augmentation.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>

#include "crisisaug/error.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {
namespace {

constexpr std::array<std::string_view, 5> kMethodNames = {
    "back_translation", "paraphrase", "caption_concat", "real_guidance", "diffusemix"};

}  // namespace

std::string_view method_name(AugMethod m) { return kMethodNames[static_cast<std::size_t>(m)]; }

std::optional<AugMethod> parse_method(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (key == kMethodNames[i]) return static_cast<AugMethod>(i);
  }
  return std::nullopt;
}

bool is_text_method(AugMethod m) {
  return m == AugMethod::back_translation || m == AugMethod::paraphrase ||
         m == AugMethod::caption_concat;
}

nlohmann::ordered_json record_to_json(const AugmentationRecord& r) {
  nlohmann::ordered_json j;
  j["method"] = method_name(r.method);
  j["sample"] = sample_to_json(r.new_sample);
  j["params"] = r.params;
  nlohmann::ordered_json v;
  v["status"] = r.verdict.accepted ? "accepted" : "rejected";
  if (!r.verdict.accepted) v["reason"] = r.verdict.reason;
  j["verdict"] = v;
  return j;
}

AugmentationRecord record_from_json(const nlohmann::ordered_json& j) {
  AugmentationRecord r;
  try {
    const auto method = parse_method(j.at("method").get<std::string>());
    if (!method) throw DataError("unknown augmentation method");
    r.method = *method;
    r.new_sample = sample_from_json(nlohmann::json(j.at("sample")));
    r.params = j.at("params");
    const auto& v = j.at("verdict");
    const std::string status = v.at("status").get<std::string>();
    if (status == "accepted") {
      r.verdict = Verdict::accept();
    } else if (status == "rejected") {
      r.verdict = Verdict::reject(v.at("reason").get<std::string>());
    } else {
      throw DataError("unknown verdict status '" + status + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed augmentation record: ") + e.what());
  }
  return r;
}

void write_records(std::ostream& out, std::span<const AugmentationRecord> records) {
  for (const AugmentationRecord& r : records) out << record_to_json(r).dump() << '\n';
}

void write_records(const std::filesystem::path& path, std::span<const AugmentationRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write records '" + path.string() + "'");
  write_records(out, records);
}

std::vector<AugmentationRecord> read_records(std::istream& in) {
  std::vector<AugmentationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AugmentationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open records '" + path.string() + "'");
  return read_records(in);
}

std::vector<MultimodalSample> accepted_samples(std::span<const AugmentationRecord> records) {
  std::vector<MultimodalSample> out;
  for (const AugmentationRecord& r : records) {
    if (r.verdict.accepted) out.push_back(r.new_sample);
  }
  return out;
}

IdAllocator::IdAllocator(std::span<const MultimodalSample> existing) {
  for (const MultimodalSample& s : existing) taken_.insert(s.sample_id);
}

std::string IdAllocator::next(std::string_view parent_id) {
  std::size_t& k = cursor_[std::string(parent_id)];
  for (;; ++k) {
    std::string id = std::string(parent_id) + "#aug" + std::to_string(k);
    if (taken_.insert(id).second) {
      ++k;
      return id;
    }
  }
}

}  // namespace crisisaug
