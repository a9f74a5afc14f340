#include "genst/data_prep.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "genst/errors.hpp"
#include "genst/rng.hpp"

namespace genst {

std::string batch_plan_to_json(const BatchPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["batches"] = plan.batches;
  return j.dump(2) + "\n";
}

BatchPlan batch_plan_from_json(const std::string& text) {
  BatchPlan plan;
  try {
    const auto j = nlohmann::json::parse(text);
    plan.seed = j.at("seed").get<uint64_t>();
    plan.batches = j.at("batches").get<std::vector<std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad batch plan JSON: ") + e.what());
  }
  return plan;
}

DevSplit sample_balanced_dev(const std::vector<ManifestRow>& manifest,
                             const std::vector<SpeakerRecord>& speakers,
                             int n_talks, uint64_t seed) {
  if (n_talks <= 0 || n_talks % 2 != 0)
    throw ValidationError("sample_balanced_dev: n_talks must be even and > 0");

  std::unordered_map<std::string, GenderTag> talk_gender;
  for (const auto& s : speakers)
    if (const auto g = gender_of(s.pronoun)) talk_gender[s.talk_id] = *g;

  // Candidate talks per gender, in first-appearance order for determinism.
  std::vector<std::string> talks_f, talks_m;
  std::unordered_set<std::string> seen;
  for (const auto& row : manifest) {
    if (!seen.insert(row.talk_id).second) continue;
    const auto it = talk_gender.find(row.talk_id);
    if (it == talk_gender.end()) continue;
    (it->second == GenderTag::F ? talks_f : talks_m).push_back(row.talk_id);
  }

  const size_t per_gender = static_cast<size_t>(n_talks) / 2;
  if (talks_f.size() < per_gender)
    throw ValidationError("sample_balanced_dev: need " +
                          std::to_string(per_gender) + " F talks, have " +
                          std::to_string(talks_f.size()));
  if (talks_m.size() < per_gender)
    throw ValidationError("sample_balanced_dev: need " +
                          std::to_string(per_gender) + " M talks, have " +
                          std::to_string(talks_m.size()));

  Xoshiro256 rng(seed);
  rng.shuffle(talks_f);
  rng.shuffle(talks_m);
  std::unordered_set<std::string> dev_talks;
  for (size_t i = 0; i < per_gender; ++i) {
    dev_talks.insert(talks_f[i]);
    dev_talks.insert(talks_m[i]);
  }

  DevSplit split;
  for (const auto& row : manifest)
    (dev_talks.count(row.talk_id) ? split.dev : split.remaining).push_back(row);
  return split;
}

std::vector<ManifestRow> split_specialized(
    const std::vector<ManifestRow>& manifest, GenderTag gender) {
  std::vector<ManifestRow> out;
  for (const auto& row : manifest)
    if (row.gender && *row.gender == gender) out.push_back(row);
  return out;
}

namespace {

void require_gendered(const std::vector<ManifestRow>& manifest,
                      const char* op) {
  for (const auto& row : manifest)
    if (!row.gender)
      throw ValidationError(std::string(op) + ": row `" + row.id +
                            "` has no gender");
}

}  // namespace

std::vector<ManifestRow> subsample_balanced(
    const std::vector<ManifestRow>& manifest, uint64_t seed) {
  require_gendered(manifest, "subsample_balanced");
  std::vector<size_t> idx_f, idx_m;
  for (size_t i = 0; i < manifest.size(); ++i)
    (*manifest[i].gender == GenderTag::F ? idx_f : idx_m).push_back(i);

  auto& minority = idx_f.size() <= idx_m.size() ? idx_f : idx_m;
  auto& majority = idx_f.size() <= idx_m.size() ? idx_m : idx_f;

  Xoshiro256 rng(seed);
  std::vector<size_t> pool = majority;
  rng.shuffle(pool);
  pool.resize(minority.size());

  std::vector<bool> keep(manifest.size(), false);
  for (const size_t i : minority) keep[i] = true;
  for (const size_t i : pool) keep[i] = true;

  std::vector<ManifestRow> out;
  for (size_t i = 0; i < manifest.size(); ++i)
    if (keep[i]) out.push_back(manifest[i]);
  return out;
}

BatchPlan schedule_balanced_batches(const std::vector<ManifestRow>& manifest,
                                    int batch_size, uint64_t seed) {
  if (batch_size <= 0 || batch_size % 2 != 0)
    throw ValidationError(
        "schedule_balanced_batches: batch_size must be even and > 0");
  require_gendered(manifest, "schedule_balanced_batches");

  std::vector<std::string> ids_f, ids_m;
  for (const auto& row : manifest)
    (*row.gender == GenderTag::F ? ids_f : ids_m).push_back(row.id);
  if (ids_f.empty())
    throw ValidationError("schedule_balanced_batches: no F rows");
  if (ids_m.empty())
    throw ValidationError("schedule_balanced_batches: no M rows");

  auto& minority = ids_f.size() <= ids_m.size() ? ids_f : ids_m;
  auto& majority = ids_f.size() <= ids_m.size() ? ids_m : ids_f;

  Xoshiro256 rng(seed);
  rng.shuffle(majority);
  std::vector<std::string> cycle = minority;
  rng.shuffle(cycle);
  size_t cursor = 0;
  auto next_minority = [&]() -> std::string {
    if (cursor == cycle.size()) {
      rng.shuffle(cycle);
      cursor = 0;
    }
    return cycle[cursor++];
  };

  const size_t half = static_cast<size_t>(batch_size) / 2;
  const size_t n_batches = majority.size() / half;

  BatchPlan plan;
  plan.seed = seed;
  for (size_t b = 0; b < n_batches; ++b) {
    std::vector<std::string> batch;
    batch.reserve(static_cast<size_t>(batch_size));
    for (size_t k = 0; k < half; ++k) batch.push_back(majority[b * half + k]);
    for (size_t k = 0; k < half; ++k) batch.push_back(next_minority());
    plan.batches.push_back(std::move(batch));
  }
  return plan;
}

std::vector<ManifestRow> prepend_tags(const std::vector<ManifestRow>& manifest) {
  require_gendered(manifest, "prepend_tags");
  std::vector<ManifestRow> out;
  out.reserve(manifest.size());
  for (const auto& row : manifest) {
    if (row.src.rfind("<TO-F>", 0) == 0 || row.src.rfind("<TO-M>", 0) == 0)
      throw ValidationError("prepend_tags: row `" + row.id +
                            "` is already tagged");
    ManifestRow tagged = row;
    tagged.src = (*row.gender == GenderTag::F ? "<TO-F> " : "<TO-M> ") +
                 row.src;
    out.push_back(std::move(tagged));
  }
  return out;
}

}  // namespace genst
