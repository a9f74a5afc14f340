#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "genst/data_prep.hpp"
#include "genst/errors.hpp"
#include "genst/rng.hpp"

using namespace genst;

namespace {

std::vector<ManifestRow> make_rows(int n_f, int n_m, int talks_per_gender = 0) {
  std::vector<ManifestRow> rows;
  int i = 0;
  auto push = [&](GenderTag g, int count, char prefix) {
    for (int k = 0; k < count; ++k, ++i) {
      ManifestRow r;
      r.id = std::string(1, prefix) + std::to_string(k);
      r.talk_id = talks_per_gender > 0
                      ? std::string(1, prefix) + "t" +
                            std::to_string(k % talks_per_gender)
                      : std::string(1, prefix) + "t";
      r.src = "src " + std::to_string(i);
      r.tgt = "tgt " + std::to_string(i);
      r.gender = g;
      rows.push_back(std::move(r));
    }
  };
  push(GenderTag::F, n_f, 'f');
  push(GenderTag::M, n_m, 'm');
  return rows;
}

std::map<GenderTag, long> gender_counts(const std::vector<ManifestRow>& rows) {
  std::map<GenderTag, long> counts;
  for (const auto& r : rows) ++counts[*r.gender];
  return counts;
}

}  // namespace

TEST_CASE("sample_balanced_dev") {
  // 6 F-talks x 3 segments, 8 M-talks x 4 segments, plus a They-talk that
  // must never be picked.
  std::vector<SpeakerRecord> speakers;
  std::vector<ManifestRow> manifest;
  int seg = 0;
  auto add_talk = [&](const std::string& talk, PronounLabel p, int n_segs) {
    speakers.push_back({talk, "x", p});
    for (int i = 0; i < n_segs; ++i) {
      ManifestRow r;
      r.id = "s" + std::to_string(seg++);
      r.talk_id = talk;
      r.src = "a";
      r.tgt = "b";
      manifest.push_back(std::move(r));
    }
  };
  for (int t = 0; t < 6; ++t) add_talk("f" + std::to_string(t), PronounLabel::She, 3);
  for (int t = 0; t < 8; ++t) add_talk("m" + std::to_string(t), PronounLabel::He, 4);
  add_talk("x0", PronounLabel::They, 5);

  SUBCASE("selects n/2 talks per gender, whole talks move together") {
    const DevSplit split = sample_balanced_dev(manifest, speakers, 8, 42);
    std::set<std::string> dev_talks;
    for (const auto& r : split.dev) dev_talks.insert(r.talk_id);
    long f_talks = 0, m_talks = 0;
    for (const auto& t : dev_talks) {
      CHECK(t[0] != 'x');
      (t[0] == 'f' ? f_talks : m_talks) += 1;
    }
    CHECK(f_talks == 4);
    CHECK(m_talks == 4);
    // Every segment of a dev talk is in dev; none leak into remaining.
    for (const auto& r : split.remaining) CHECK(!dev_talks.count(r.talk_id));
    CHECK(split.dev.size() + split.remaining.size() == manifest.size());
  }
  SUBCASE("partition is exact as multisets") {
    const DevSplit split = sample_balanced_dev(manifest, speakers, 4, 7);
    std::vector<ManifestRow> merged = split.dev;
    merged.insert(merged.end(), split.remaining.begin(),
                  split.remaining.end());
    auto key = [](const ManifestRow& r) { return r.id; };
    std::sort(merged.begin(), merged.end(),
              [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::vector<ManifestRow> orig = manifest;
    std::sort(orig.begin(), orig.end(),
              [&](const auto& a, const auto& b) { return key(a) < key(b); });
    CHECK(merged == orig);
  }
  SUBCASE("deterministic per seed, varies across seeds") {
    const DevSplit a = sample_balanced_dev(manifest, speakers, 8, 42);
    const DevSplit b = sample_balanced_dev(manifest, speakers, 8, 42);
    CHECK(a.dev == b.dev);
    CHECK(a.remaining == b.remaining);
    bool any_diff = false;
    for (uint64_t s = 0; s < 8 && !any_diff; ++s)
      any_diff = sample_balanced_dev(manifest, speakers, 8, s).dev != a.dev;
    CHECK(any_diff);
  }
  SUBCASE("insufficient talks names the gender and count") {
    CHECK_THROWS_WITH_AS(sample_balanced_dev(manifest, speakers, 20, 1),
                         doctest::Contains("F"), ValidationError);
    std::vector<SpeakerRecord> no_f;
    for (const auto& s : speakers)
      if (s.pronoun != PronounLabel::She) no_f.push_back(s);
    CHECK_THROWS_WITH_AS(sample_balanced_dev(manifest, no_f, 2, 1),
                         doctest::Contains("0"), ValidationError);
  }
  SUBCASE("odd n_talks rejected") {
    CHECK_THROWS_AS(sample_balanced_dev(manifest, speakers, 3, 1),
                    ValidationError);
  }
}

TEST_CASE("split_specialized keeps order and filters exactly") {
  const auto rows = make_rows(5, 3);
  const auto f = split_specialized(rows, GenderTag::F);
  REQUIRE(f.size() == 5);
  for (size_t i = 0; i < f.size(); ++i) CHECK(f[i] == rows[i]);
  CHECK(split_specialized(rows, GenderTag::M).size() == 3);
  CHECK(split_specialized(split_specialized(rows, GenderTag::F), GenderTag::M)
            .empty());
}

TEST_CASE("subsample_balanced") {
  SUBCASE("100 M + 40 F -> 40 + 40") {
    const auto rows = make_rows(40, 100);
    const auto out = subsample_balanced(rows, 5);
    const auto counts = gender_counts(out);
    CHECK(counts.at(GenderTag::F) == 40);
    CHECK(counts.at(GenderTag::M) == 40);
    // All minority rows present; output preserves manifest order.
    std::set<std::string> ids;
    for (const auto& r : out) ids.insert(r.id);
    for (const auto& r : rows)
      if (*r.gender == GenderTag::F) CHECK(ids.count(r.id));
    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < rows.size(); ++i) pos[rows[i].id] = i;
    for (size_t i = 1; i < out.size(); ++i)
      CHECK(pos.at(out[i - 1].id) < pos.at(out[i].id));
  }
  SUBCASE("already balanced input returns the input") {
    const auto rows = make_rows(6, 6);
    CHECK(subsample_balanced(rows, 9) == rows);
  }
  SUBCASE("works when M is the minority") {
    const auto rows = make_rows(30, 10);
    const auto counts = gender_counts(subsample_balanced(rows, 1));
    CHECK(counts.at(GenderTag::F) == 10);
    CHECK(counts.at(GenderTag::M) == 10);
  }
  SUBCASE("deterministic per seed") {
    const auto rows = make_rows(40, 100);
    CHECK(subsample_balanced(rows, 5) == subsample_balanced(rows, 5));
    CHECK(subsample_balanced(rows, 5) != subsample_balanced(rows, 6));
  }
}

TEST_CASE("schedule_balanced_batches") {
  auto count_by_gender_in_batch = [](const std::vector<ManifestRow>& rows,
                                     const std::vector<std::string>& batch) {
    std::map<std::string, GenderTag> gender_of_id;
    for (const auto& r : rows) gender_of_id[r.id] = *r.gender;
    std::map<GenderTag, long> counts;
    for (const auto& id : batch) ++counts[gender_of_id.at(id)];
    return counts;
  };

  SUBCASE("6 M + 2 F, batch 4: 3 batches, each F id used 3 times") {
    const auto rows = make_rows(2, 6);
    const BatchPlan plan = schedule_balanced_batches(rows, 4, 3);
    REQUIRE(plan.batches.size() == 3);
    std::map<std::string, long> uses;
    for (const auto& batch : plan.batches) {
      REQUIRE(batch.size() == 4);
      const auto counts = count_by_gender_in_batch(rows, batch);
      CHECK(counts.at(GenderTag::F) == 2);
      CHECK(counts.at(GenderTag::M) == 2);
      for (const auto& id : batch) ++uses[id];
    }
    CHECK(uses.at("f0") == 3);
    CHECK(uses.at("f1") == 3);
    for (int k = 0; k < 6; ++k) CHECK(uses.at("m" + std::to_string(k)) == 1);
  }
  SUBCASE("4 M + 4 F, batch 4: every id exactly once") {
    const auto rows = make_rows(4, 4);
    const BatchPlan plan = schedule_balanced_batches(rows, 4, 1);
    REQUIRE(plan.batches.size() == 2);
    std::map<std::string, long> uses;
    for (const auto& batch : plan.batches)
      for (const auto& id : batch) ++uses[id];
    CHECK(uses.size() == 8);
    for (const auto& [id, n] : uses) CHECK(n == 1);
  }
  SUBCASE("5 M + 5 F, batch 4: partial batch dropped") {
    const auto rows = make_rows(5, 5);
    const BatchPlan plan = schedule_balanced_batches(rows, 4, 1);
    REQUIRE(plan.batches.size() == 2);
    std::set<std::string> used;
    for (const auto& batch : plan.batches) {
      REQUIRE(batch.size() == 4);
      for (const auto& id : batch) CHECK(used.insert(id).second);
    }
    CHECK(used.size() == 8);  // one leftover id per gender dropped
  }
  SUBCASE("minority repetition counts differ by at most one") {
    const auto rows = make_rows(3, 20);
    const BatchPlan plan = schedule_balanced_batches(rows, 6, 11);
    std::map<std::string, long> uses = {{"f0", 0}, {"f1", 0}, {"f2", 0}};
    for (const auto& batch : plan.batches)
      for (const auto& id : batch)
        if (id[0] == 'f') ++uses.at(id);
    long lo = 1 << 20, hi = 0;
    for (const auto& [id, n] : uses) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(schedule_balanced_batches(make_rows(4, 0), 4, 1),
                    ValidationError);
    CHECK_THROWS_AS(schedule_balanced_batches(make_rows(4, 4), 3, 1),
                    ValidationError);
  }
  SUBCASE("deterministic per seed") {
    const auto rows = make_rows(7, 23);
    const BatchPlan a = schedule_balanced_batches(rows, 4, 12);
    const BatchPlan b = schedule_balanced_batches(rows, 4, 12);
    CHECK(a.batches == b.batches);
  }
}

TEST_CASE("batch plan JSON round trip") {
  const auto rows = make_rows(3, 9);
  const BatchPlan plan = schedule_balanced_batches(rows, 4, 77);
  const std::string text = batch_plan_to_json(plan);
  const BatchPlan loaded = batch_plan_from_json(text);
  CHECK(loaded.seed == plan.seed);
  CHECK(loaded.batches == plan.batches);
  CHECK_THROWS_AS(batch_plan_from_json("{not json"), ParseError);
  CHECK_THROWS_AS(batch_plan_from_json("{\"seed\": 1}"), ParseError);
}

TEST_CASE("prepend_tags") {
  auto rows = make_rows(2, 2);
  const auto tagged = prepend_tags(rows);
  REQUIRE(tagged.size() == 4);
  CHECK(tagged[0].src.rfind("<TO-F> ", 0) == 0);
  CHECK(tagged[2].src.rfind("<TO-M> ", 0) == 0);
  CHECK(tagged[0].src == "<TO-F> " + rows[0].src);
  // Tag distribution mirrors gender distribution.
  long f_tags = 0;
  for (const auto& r : tagged)
    if (r.src.rfind("<TO-F>", 0) == 0) ++f_tags;
  CHECK(f_tags == 2);
  CHECK_THROWS_AS(prepend_tags(tagged), ValidationError);
  // Rows without gender are rejected too.
  rows[1].gender.reset();
  CHECK_THROWS_AS(prepend_tags(rows), ValidationError);
}

TEST_CASE("randomized sampler invariants") {
  Xoshiro256 rng(2024);
  for (int iter = 0; iter < 100; ++iter) {
    const int n_f = 2 + static_cast<int>(rng.below(30));
    const int n_m = 2 + static_cast<int>(rng.below(30));
    const auto rows = make_rows(n_f, n_m);
    const uint64_t seed = rng.next();

    const auto balanced = subsample_balanced(rows, seed);
    auto counts = gender_counts(balanced);
    CHECK(counts[GenderTag::F] == counts[GenderTag::M]);
    CHECK(counts[GenderTag::F] == std::min(n_f, n_m));

    const BatchPlan plan = schedule_balanced_batches(rows, 4, seed);
    std::set<std::string> majority_seen;
    const char maj = n_m >= n_f ? 'm' : 'f';
    for (const auto& batch : plan.batches) {
      REQUIRE(batch.size() == 4);
      long maj_in_batch = 0;
      for (const auto& id : batch) {
        if (id[0] == maj) {
          ++maj_in_batch;
          CHECK(majority_seen.insert(id).second);  // majority ids never repeat
        }
      }
      CHECK(maj_in_batch == 2);
    }
  }
}
