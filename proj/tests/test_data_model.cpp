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

#include <algorithm>
#include <sstream>

#include "doctest.h"

#include "crisisaug/data_model.hpp"
#include "crisisaug/error.hpp"
#include "crisisaug/random.hpp"
#include "crisisaug/synthetic_data.hpp"
#include "support/support.hpp"

using namespace crisisaug;

namespace {

const char* kHeader = "sample_id\ttweet_text\timage_ref\tlabel\tsplit\n";

ManifestLoad parse_tsv(const std::string& body) {
  std::istringstream in(body);
  return read_manifest(in, ManifestFormat::tsv);
}

std::vector<MultimodalSample> random_samples(Rng& rng, std::size_t n) {
  std::vector<MultimodalSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(testutil::sample("s" + std::to_string(i), "text",
                                   label_from_index(rng.below(kNumClasses)),
                                   static_cast<Split>(rng.below(kNumSplits))));
  }
  return out;
}

}  // namespace

TEST_CASE("labels map to fixed indices and parse leniently") {
  CHECK(label_index(HumanitarianLabel::affected_individuals) == 0);
  CHECK(label_index(HumanitarianLabel::rescue_volunteering) == 4);
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    CHECK(label_index(label_from_index(i)) == i);
    CHECK(parse_label(label_name(label_from_index(i))) == label_from_index(i));
  }
  CHECK(parse_label("Infrastructure Damage") == HumanitarianLabel::infrastructure_damage);
  CHECK(parse_label("rescue-volunteering") == HumanitarianLabel::rescue_volunteering);
  CHECK_FALSE(parse_label("flood_damage"));
  CHECK_THROWS_AS(label_from_index(5), std::out_of_range);
}

TEST_CASE("five canonical labels give five samples, one per class") {
  std::string body = kHeader;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    body += "id" + std::to_string(i) + "\ttweet " + std::to_string(i) + "\timg" +
            std::to_string(i) + ".png\t" + std::string(label_name(label_from_index(i))) +
            "\ttrain\n";
  }
  const ManifestLoad m = parse_tsv(body);
  REQUIRE(m.errors.empty());
  REQUIRE(m.samples.size() == 5);
  for (std::size_t i = 0; i < kNumClasses; ++i) CHECK(label_index(m.samples[i].label) == i);
}

TEST_CASE("unknown label is a row error, not fatal") {
  const ManifestLoad m = parse_tsv(std::string(kHeader) +
                                   "a\thello\ta.png\tflood_damage\ttrain\n"
                                   "b\thello\tb.png\tnot_humanitarian\ttrain\n");
  REQUIRE(m.errors.size() == 1);
  CHECK(m.errors[0].line == 2);
  CHECK(m.errors[0].message.find("unknown label") != std::string::npos);
  CHECK(m.samples.size() == 1);
}

TEST_CASE("duplicate sample_id is fatal") {
  CHECK_THROWS_AS(parse_tsv(std::string(kHeader) + "a\tx\ta.png\tnot_humanitarian\ttrain\n"
                                                   "a\ty\tb.png\tnot_humanitarian\ttrain\n"),
                  DataError);
}

TEST_CASE("missing required column is fatal") {
  CHECK_THROWS_AS(parse_tsv("sample_id\ttweet_text\tlabel\tsplit\n"), DataError);
}

TEST_CASE("empty tweet text is rejected") {
  const ManifestLoad m =
      parse_tsv(std::string(kHeader) + "a\t \ta.png\tnot_humanitarian\ttrain\n");
  CHECK(m.samples.empty());
  CHECK(m.errors.size() == 1);
}

TEST_CASE("provenance invariants are enforced on ingestion") {
  const std::string h = "sample_id\ttweet_text\timage_ref\tlabel\tsplit\tprovenance\tparent_id\n";
  SUBCASE("augmented row needs a parent") {
    const auto m = parse_tsv(h + "a\tx\ta.png\tnot_humanitarian\ttrain\taugmented\t\n");
    CHECK(m.samples.empty());
    CHECK(m.errors.size() == 1);
  }
  SUBCASE("original row must not carry a parent") {
    const auto m = parse_tsv(h + "p\tx\tp.png\tnot_humanitarian\ttrain\toriginal\t\n"
                                 "a\tx\ta.png\tnot_humanitarian\ttrain\toriginal\tp\n");
    CHECK(m.samples.size() == 1);
    CHECK(m.errors.size() == 1);
  }
  SUBCASE("unresolvable parent") {
    const auto m = parse_tsv(h + "a\tx\ta.png\tnot_humanitarian\ttrain\taugmented\tnope\n");
    CHECK(m.samples.empty());
    CHECK(m.errors.size() == 1);
  }
  SUBCASE("split must match the parent") {
    const auto m = parse_tsv(h + "p\tx\tp.png\tnot_humanitarian\ttrain\toriginal\t\n"
                                 "a\tx\ta.png\tnot_humanitarian\tdev\taugmented\tp\n");
    CHECK(m.samples.size() == 1);
    REQUIRE(m.errors.size() == 1);
    CHECK(m.errors[0].line == 3);
  }
  SUBCASE("valid child is kept") {
    const auto m = parse_tsv(h + "p\tx\tp.png\tnot_humanitarian\ttrain\toriginal\t\n"
                                 "a\ty\ta.png\tnot_humanitarian\ttrain\taugmented\tp\n");
    CHECK(m.errors.empty());
    REQUIRE(m.samples.size() == 2);
    CHECK(m.samples[1].parent_id == "p");
  }
}

TEST_CASE("round trip preserves every field in both formats") {
  std::vector<MultimodalSample> in;
  in.push_back(testutil::sample("p1", "tabs\tand\nnewlines \\ and émojis 🙏",
                                HumanitarianLabel::infrastructure_damage));
  in.push_back(testutil::sample("p2", "plain", HumanitarianLabel::other_relevant, Split::dev));
  MultimodalSample child = in[0];
  child.sample_id = "p1#aug1";
  child.tweet_text = "child";
  child.provenance = Provenance::augmented;
  child.parent_id = "p1";
  in.push_back(child);
  for (ManifestFormat f : {ManifestFormat::tsv, ManifestFormat::jsonl}) {
    std::ostringstream out;
    write_manifest(out, in, f);
    std::istringstream back(out.str());
    const ManifestLoad m = read_manifest(back, f);
    CHECK(m.errors.empty());
    CHECK(m.samples == in);
    std::ostringstream again;
    write_manifest(again, m.samples, f);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("jsonl rows with wrong types become row errors") {
  std::istringstream in(
      "{\"sample_id\":\"a\",\"tweet_text\":\"x\",\"image_ref\":\"a.png\",\"label\":\"not_humanitarian\",\"split\":\"train\"}\n"
      "not json\n"
      "{\"sample_id\":\"b\",\"tweet_text\":5,\"image_ref\":\"b.png\",\"label\":\"not_humanitarian\",\"split\":\"train\"}\n");
  const ManifestLoad m = read_manifest(in, ManifestFormat::jsonl);
  CHECK(m.samples.size() == 1);
  REQUIRE(m.errors.size() == 2);
  CHECK(m.errors[0].line == 2);
  CHECK(m.errors[1].line == 3);
}

TEST_CASE("missing images produce warnings when checked") {
  testutil::TempDir dir;
  std::vector<MultimodalSample> s = {testutil::sample("a", "x", HumanitarianLabel::not_humanitarian)};
  write_manifest(dir / "m.tsv", s, ManifestFormat::tsv);
  const ManifestLoad m = load_manifest(dir / "m.tsv");
  CHECK(m.samples.size() == 1);
  CHECK(m.warnings.size() == 1);
  CHECK_THROWS_AS(load_manifest(dir / "absent.tsv"), ConfigError);
  CHECK_THROWS_AS(format_from_path("m.csv"), ConfigError);
}

TEST_CASE("class_distribution of empty input is all zero") {
  const ClassDistribution d = class_distribution({});
  CHECK(d == ClassDistribution{});
  for (std::size_t s = 0; s < kNumSplits; ++s) CHECK(d.total(static_cast<Split>(s)) == 0);
}

TEST_CASE("synthetic reference manifest reproduces the published distribution") {
  const auto items = generate_corpus(SynthSpec::reference(3), false);
  std::vector<MultimodalSample> samples;
  for (const auto& it : items) samples.push_back(it.sample);
  const ClassDistribution d = class_distribution(samples);
  CHECK(d.total(Split::train) == 6126);
  CHECK(d.total(Split::dev) == 998);
  CHECK(d.total(Split::test) == 955);
  CHECK(d.count(Split::train, HumanitarianLabel::affected_individuals) == 71);
  CHECK(d == reference_distribution());
}

TEST_CASE("class_distribution matches a brute-force recount and is order free") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto samples = random_samples(rng, rng.below(300));
    const ClassDistribution d = class_distribution(samples);
    for (std::size_t s = 0; s < kNumSplits; ++s) {
      std::size_t split_total = 0;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto n = static_cast<std::size_t>(std::count_if(
            samples.begin(), samples.end(), [&](const MultimodalSample& x) {
              return static_cast<std::size_t>(x.split) == s && label_index(x.label) == c;
            }));
        CHECK(d.counts[s][c] == n);
        split_total += n;
      }
      CHECK(d.total(static_cast<Split>(s)) == split_total);
    }
    rng.shuffle(samples);
    CHECK(class_distribution(samples) == d);
  }
}

TEST_CASE("imbalance_report ranks the reference train counts") {
  const auto r = imbalance_report(reference_distribution());
  REQUIRE(r.size() == kNumClasses);
  CHECK(r[0].label == HumanitarianLabel::not_humanitarian);
  CHECK(r[0].count == 3252);
  double sum = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sum += r[i].fraction;
    if (i) CHECK(r[i - 1].count >= r[i].count);
    CHECK(r[i].fraction == doctest::Approx(static_cast<double>(r[i].count) / 6126.0).epsilon(1e-12));
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("imbalance_report of uniform counts gives one fifth each") {
  ClassDistribution d;
  d.counts[0].fill(7);
  for (const auto& e : imbalance_report(d)) CHECK(std::abs(e.fraction - 0.2) < 1e-12);
  CHECK_THROWS_AS(imbalance_report(ClassDistribution{}), DataError);
}

TEST_CASE("imbalance fractions match direct division") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    ClassDistribution d;
    for (auto& c : d.counts[0]) c = rng.below(1000);
    d.counts[0][0] += 1;
    const double total = static_cast<double>(d.total(Split::train));
    for (const auto& e : imbalance_report(d)) {
      CHECK(std::abs(e.fraction - static_cast<double>(d.count(Split::train, e.label)) / total) <
            1e-12);
    }
  }
}

TEST_CASE("validate_samples rejects broken provenance") {
  auto p = testutil::sample("p", "x", HumanitarianLabel::not_humanitarian);
  auto c = p;
  c.sample_id = "c";
  c.provenance = Provenance::augmented;
  c.parent_id = "p";
  std::vector<MultimodalSample> ok = {p, c};
  CHECK_NOTHROW(validate_samples(ok));
  c.split = Split::test;
  std::vector<MultimodalSample> bad = {p, c};
  CHECK_THROWS_AS(validate_samples(bad), DataError);
  std::vector<MultimodalSample> dup = {p, p};
  CHECK_THROWS_AS(validate_samples(dup), DataError);
}

TEST_CASE("distribution table lists totals") {
  const std::string t = format_distribution_table(reference_distribution());
  CHECK(t.find("6126") != std::string::npos);
  CHECK(t.find("Total") != std::string::npos);
  const auto j = distribution_to_json(reference_distribution());
  CHECK(j.dump().find("3252") != std::string::npos);
}
