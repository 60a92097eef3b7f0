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

#include "crisisaug/data_model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "crisisaug/error.hpp"
#include "crisisaug/text.hpp"

namespace crisisaug {
namespace {

constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "affected_individuals", "infrastructure_damage", "not_humanitarian",
    "other_relevant", "rescue_volunteering"};

constexpr std::array<std::string_view, kNumClasses> kLabelPhrases = {
    "affected individuals", "infrastructure and utility damage",
    "not humanitarian", "other relevant information",
    "rescue, volunteering, or donation effort"};

constexpr std::array<std::string_view, kNumSplits> kSplitNames = {"train", "dev",
                                                                  "test"};

constexpr std::array<std::string_view, 7> kColumns = {
    "sample_id", "tweet_text", "image_ref", "label",
    "split",     "provenance", "parent_id"};
constexpr std::size_t kRequiredColumns = 5;

// "Rescue, Volunteering" -> "rescue_volunteering"
std::string normalize_key(std::string_view s) {
  std::string out;
  bool pending_sep = false;
  for (char c : text::trim(s)) {
    if (c == ' ' || c == '_' || c == '-' || c == '\t') {
      pending_sep = !out.empty();
      continue;
    }
    if (pending_sep) out.push_back('_');
    pending_sep = false;
    out.push_back(c);
  }
  return text::to_lower(out);
}

std::string escape_tsv(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_tsv(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      switch (n) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default:
          out.push_back('\\');
          out.push_back(n);
      }
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Field-level parse shared by both formats. Returns an error message, or
// empty on success.
std::string build_sample(const std::array<std::optional<std::string>, 7>& f,
                         MultimodalSample& out) {
  for (std::size_t i = 0; i < kRequiredColumns; ++i) {
    if (!f[i]) return "missing field '" + std::string(kColumns[i]) + "'";
  }
  out.sample_id = std::string(text::trim(*f[0]));
  if (out.sample_id.empty()) return "empty sample_id";
  out.tweet_text = *f[1];
  if (text::trim(out.tweet_text).empty()) return "empty tweet_text";
  out.image_ref = *f[2];
  const auto label = parse_label(*f[3]);
  if (!label) return "unknown label '" + *f[3] + "'";
  out.label = *label;
  const auto split = parse_split(*f[4]);
  if (!split) return "unknown split '" + *f[4] + "'";
  out.split = *split;
  out.provenance = Provenance::original;
  if (f[5] && !text::trim(*f[5]).empty()) {
    const auto prov = parse_provenance(*f[5]);
    if (!prov) return "unknown provenance '" + *f[5] + "'";
    out.provenance = *prov;
  }
  out.parent_id.reset();
  if (f[6] && !text::trim(*f[6]).empty()) {
    out.parent_id = std::string(text::trim(*f[6]));
  }
  return {};
}

struct PendingRow {
  std::size_t line;
  MultimodalSample sample;
};

// Drops rows that violate the provenance invariants against the set of rows
// that survived. Iterates because removing a parent orphans its children.
void enforce_provenance(std::vector<PendingRow>& rows,
                        std::vector<RowError>& errors) {
  for (PendingRow& r : rows) {
    const MultimodalSample& s = r.sample;
    if (s.provenance == Provenance::original && s.parent_id) {
      errors.push_back({r.line, "original sample must not carry parent_id"});
      r.line = 0;
    } else if (s.provenance == Provenance::augmented && !s.parent_id) {
      errors.push_back({r.line, "augmented sample without parent_id"});
      r.line = 0;
    }
  }
  std::erase_if(rows, [](const PendingRow& r) { return r.line == 0; });

  bool changed = true;
  while (changed) {
    changed = false;
    std::unordered_map<std::string, Split> split_of;
    for (const PendingRow& r : rows) split_of.emplace(r.sample.sample_id, r.sample.split);
    for (PendingRow& r : rows) {
      if (r.sample.provenance != Provenance::augmented) continue;
      const auto it = split_of.find(*r.sample.parent_id);
      if (it == split_of.end()) {
        errors.push_back({r.line, "unresolvable parent_id '" +
                                      *r.sample.parent_id + "'"});
        r.line = 0;
        changed = true;
      } else if (it->second != r.sample.split) {
        errors.push_back({r.line, "augmented sample split differs from parent"});
        r.line = 0;
        changed = true;
      }
    }
    std::erase_if(rows, [](const PendingRow& r) { return r.line == 0; });
  }
  std::sort(errors.begin(), errors.end(),
            [](const RowError& a, const RowError& b) { return a.line < b.line; });
}

}  // namespace

HumanitarianLabel label_from_index(std::size_t i) {
  if (i >= kNumClasses) throw std::out_of_range("label index out of range");
  return static_cast<HumanitarianLabel>(i);
}

std::string_view label_name(HumanitarianLabel l) { return kLabelNames[label_index(l)]; }
std::string_view label_phrase(HumanitarianLabel l) { return kLabelPhrases[label_index(l)]; }

std::optional<HumanitarianLabel> parse_label(std::string_view s) {
  const std::string key = normalize_key(s);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    if (key == kLabelNames[i]) return static_cast<HumanitarianLabel>(i);
  }
  return std::nullopt;
}

std::string_view split_name(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }

std::optional<Split> parse_split(std::string_view s) {
  const std::string key = normalize_key(s);
  for (std::size_t i = 0; i < kNumSplits; ++i) {
    if (key == kSplitNames[i]) return static_cast<Split>(i);
  }
  return std::nullopt;
}

std::string_view provenance_name(Provenance p) {
  return p == Provenance::original ? "original" : "augmented";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  const std::string key = normalize_key(s);
  if (key == "original") return Provenance::original;
  if (key == "augmented") return Provenance::augmented;
  return std::nullopt;
}

nlohmann::ordered_json sample_to_json(const MultimodalSample& s) {
  nlohmann::ordered_json j;
  j["sample_id"] = s.sample_id;
  j["tweet_text"] = s.tweet_text;
  j["image_ref"] = s.image_ref;
  j["label"] = label_name(s.label);
  j["split"] = split_name(s.split);
  j["provenance"] = provenance_name(s.provenance);
  j["parent_id"] = s.parent_id ? nlohmann::ordered_json(*s.parent_id)
                               : nlohmann::ordered_json(nullptr);
  return j;
}

MultimodalSample sample_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("sample is not a JSON object");
  std::array<std::optional<std::string>, 7> fields;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    const auto it = j.find(kColumns[i]);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_string()) {
      throw DataError("field '" + std::string(kColumns[i]) + "' is not a string");
    }
    fields[i] = it->get<std::string>();
  }
  MultimodalSample s;
  if (std::string err = build_sample(fields, s); !err.empty()) throw DataError(err);
  return s;
}

std::string_view format_name(ManifestFormat f) {
  return f == ManifestFormat::tsv ? "tsv" : "jsonl";
}

ManifestFormat format_from_path(const std::filesystem::path& p) {
  const std::string ext = text::to_lower(p.extension().string());
  if (ext == ".tsv") return ManifestFormat::tsv;
  if (ext == ".jsonl" || ext == ".json") return ManifestFormat::jsonl;
  throw ConfigError("cannot infer manifest format from '" + p.string() + "'");
}

ManifestLoad read_manifest(std::istream& in, ManifestFormat format,
                           const LoadOptions& opts) {
  ManifestLoad result;
  std::vector<PendingRow> rows;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;

  auto accept = [&](std::size_t ln, const std::array<std::optional<std::string>, 7>& f) {
    MultimodalSample s;
    if (std::string err = build_sample(f, s); !err.empty()) {
      result.errors.push_back({ln, err});
      return;
    }
    if (!seen.insert(s.sample_id).second) {
      throw DataError("duplicate sample_id '" + s.sample_id + "' at line " +
                      std::to_string(ln));
    }
    rows.push_back({ln, std::move(s)});
  };

  if (format == ManifestFormat::tsv) {
    std::array<std::optional<std::size_t>, 7> column_of;
    std::size_t header_width = 0;
    if (!std::getline(in, line)) throw DataError("manifest is empty");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_tabs(line);
    header_width = header.size();
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string key = normalize_key(header[c]);
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (key == kColumns[k]) column_of[k] = c;
      }
    }
    for (std::size_t k = 0; k < kRequiredColumns; ++k) {
      if (!column_of[k]) {
        throw DataError("manifest header lacks column '" + std::string(kColumns[k]) + "'");
      }
    }
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto cells = split_tabs(line);
      if (cells.size() != header_width) {
        result.errors.push_back(
            {line_no, "expected " + std::to_string(header_width) + " columns, got " +
                          std::to_string(cells.size())});
        continue;
      }
      std::array<std::optional<std::string>, 7> fields;
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        if (column_of[k]) fields[k] = unescape_tsv(cells[*column_of[k]]);
      }
      accept(line_no, fields);
    }
  } else {
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        result.errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
        continue;
      }
      if (!j.is_object()) {
        result.errors.push_back({line_no, "row is not a JSON object"});
        continue;
      }
      std::array<std::optional<std::string>, 7> fields;
      bool bad = false;
      for (std::size_t k = 0; k < kColumns.size(); ++k) {
        const auto it = j.find(kColumns[k]);
        if (it == j.end() || it->is_null()) continue;
        if (!it->is_string()) {
          result.errors.push_back(
              {line_no, "field '" + std::string(kColumns[k]) + "' is not a string"});
          bad = true;
          break;
        }
        fields[k] = it->get<std::string>();
      }
      if (!bad) accept(line_no, fields);
    }
  }

  enforce_provenance(rows, result.errors);
  result.samples.reserve(rows.size());
  for (PendingRow& r : rows) {
    if (opts.check_images) {
      std::filesystem::path p(r.sample.image_ref);
      if (p.is_relative() && !opts.image_root.empty()) p = opts.image_root / p;
      if (r.sample.image_ref.empty() || !std::filesystem::exists(p)) {
        result.warnings.push_back("line " + std::to_string(r.line) +
                                  ": image not found: " + p.string());
      }
    }
    result.samples.push_back(std::move(r.sample));
  }
  return result;
}

ManifestLoad load_manifest(const std::filesystem::path& path, ManifestFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
  LoadOptions opts;
  opts.image_root = path.parent_path();
  opts.check_images = true;
  return read_manifest(in, format, opts);
}

ManifestLoad load_manifest(const std::filesystem::path& path) {
  return load_manifest(path, format_from_path(path));
}

void write_manifest(std::ostream& out, std::span<const MultimodalSample> samples,
                    ManifestFormat format) {
  if (format == ManifestFormat::tsv) {
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
      if (k) out << '\t';
      out << kColumns[k];
    }
    out << '\n';
    for (const MultimodalSample& s : samples) {
      out << escape_tsv(s.sample_id) << '\t' << escape_tsv(s.tweet_text) << '\t'
          << escape_tsv(s.image_ref) << '\t' << label_name(s.label) << '\t'
          << split_name(s.split) << '\t' << provenance_name(s.provenance) << '\t'
          << (s.parent_id ? escape_tsv(*s.parent_id) : std::string()) << '\n';
    }
  } else {
    for (const MultimodalSample& s : samples) out << sample_to_json(s).dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const MultimodalSample> samples, ManifestFormat format) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write manifest '" + path.string() + "'");
  write_manifest(out, samples, format);
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

void validate_samples(std::span<const MultimodalSample> samples) {
  std::unordered_map<std::string_view, const MultimodalSample*> by_id;
  for (const MultimodalSample& s : samples) {
    if (!by_id.emplace(s.sample_id, &s).second) {
      throw DataError("duplicate sample_id '" + s.sample_id + "'");
    }
  }
  for (const MultimodalSample& s : samples) {
    if (s.provenance == Provenance::original) {
      if (s.parent_id) throw DataError("original sample '" + s.sample_id + "' has parent_id");
      continue;
    }
    if (!s.parent_id) throw DataError("augmented sample '" + s.sample_id + "' lacks parent_id");
    const auto it = by_id.find(*s.parent_id);
    if (it == by_id.end()) {
      throw DataError("augmented sample '" + s.sample_id + "' has unresolvable parent");
    }
    if (it->second->split != s.split) {
      throw DataError("augmented sample '" + s.sample_id + "' split differs from parent");
    }
  }
}

std::size_t ClassDistribution::total(Split s) const {
  std::size_t t = 0;
  for (std::size_t c : counts[static_cast<std::size_t>(s)]) t += c;
  return t;
}

ClassDistribution class_distribution(std::span<const MultimodalSample> samples) {
  ClassDistribution d;
  for (const MultimodalSample& s : samples) {
    ++d.counts[static_cast<std::size_t>(s.split)][label_index(s.label)];
  }
  return d;
}

std::vector<ImbalanceEntry> imbalance_report(const ClassDistribution& dist) {
  const std::size_t total = dist.total(Split::train);
  if (total == 0) throw DataError("imbalance report needs a non-empty train split");
  std::vector<ImbalanceEntry> out;
  for (HumanitarianLabel l : kAllLabels) {
    const std::size_t c = dist.count(Split::train, l);
    out.push_back({l, c, static_cast<double>(c) / static_cast<double>(total)});
  }
  std::stable_sort(out.begin(), out.end(), [](const ImbalanceEntry& a, const ImbalanceEntry& b) {
    return a.count > b.count;
  });
  return out;
}

nlohmann::ordered_json distribution_to_json(const ClassDistribution& dist) {
  nlohmann::ordered_json j;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    const auto split = static_cast<Split>(s);
    nlohmann::ordered_json per;
    for (HumanitarianLabel l : kAllLabels) per[std::string(label_name(l))] = dist.count(split, l);
    j[std::string(split_name(split))] = {{"counts", per}, {"total", dist.total(split)}};
  }
  return j;
}

std::string format_distribution_table(const ClassDistribution& dist) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s\n", "Class Label", "Train", "Dev", "Test");
  os << buf;
  for (HumanitarianLabel l : kAllLabels) {
    std::snprintf(buf, sizeof buf, "%-24s %8zu %8zu %8zu\n", std::string(label_name(l)).c_str(),
                  dist.count(Split::train, l), dist.count(Split::dev, l),
                  dist.count(Split::test, l));
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %8zu %8zu %8zu\n", "Total", dist.total(Split::train),
                dist.total(Split::dev), dist.total(Split::test));
  os << buf;
  return os.str();
}

ClassDistribution reference_distribution() {
  ClassDistribution d;
  d.counts[0] = {71, 612, 3252, 1279, 912};
  d.counts[1] = {9, 80, 521, 239, 149};
  d.counts[2] = {9, 81, 504, 235, 126};
  return d;
}

}  // namespace crisisaug
