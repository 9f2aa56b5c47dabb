#include <doctest.h>

#include <map>
#include <set>

#include "logsd/config.hpp"
#include "logsd/synthbench.hpp"
#include "test_util.hpp"

using namespace logsd;
using namespace logsd::synthbench;

namespace {

std::map<int, std::size_t> train_counts(const SynthCorpus& c) {
  std::map<int, std::size_t> counts;
  for (const auto& s : c.dataset.train)
    for (int id : s.event_ids) ++counts[id];
  return counts;
}

}  // namespace

TEST_CASE("default corpus shape") {
  const SynthConfig cfg;
  const auto c = generate(cfg);
  CHECK(c.dataset.train.size() == 2000);
  CHECK(c.dataset.test.size() == 500);
  for (const auto& s : c.dataset.train) {
    CHECK(s.label == Label::kNormal);
    CHECK(s.event_ids.size() == cfg.seq_len);
  }
  std::size_t anomalies = 0;
  for (const auto& s : c.dataset.test) anomalies += s.label == Label::kAnomalous;
  CHECK(anomalies == 100);
  CHECK(static_cast<double>(anomalies) / static_cast<double>(c.dataset.test.size()) == 0.2);
  CHECK(c.catalog.size() == cfg.dominant_events + cfg.vocab_rare + cfg.unseen_events);
}

TEST_CASE("unseen events never reach training and mark every anomaly") {
  for (std::uint64_t seed : {1, 7, 99}) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto c = generate(cfg);
    const auto counts = train_counts(c);
    for (auto [id, n] : counts) CHECK(id < cfg.first_unseen_id());
    for (const auto& s : c.dataset.test) {
      std::size_t unseen = 0;
      for (int id : s.event_ids) unseen += counts.count(id) == 0;
      CHECK((unseen >= 1) == (s.label == Label::kAnomalous));
      CHECK(is_anomaly(s) == (s.label == Label::kAnomalous));
    }
  }
}

TEST_CASE("the dominant event outnumbers every rare event tenfold for every seed") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthConfig cfg;
    cfg.seed = seed;
    const auto c = generate(cfg);
    const auto counts = train_counts(c);
    std::size_t positions = 0;
    for (auto [id, n] : counts) positions += n;
    const std::size_t dominant = counts.at(1);
    CHECK(2 * dominant >= positions);
    for (auto [id, n] : counts)
      if (id >= cfg.first_rare_id()) CHECK(dominant >= 10 * n);
  }
}

TEST_CASE("training holds both sequence kinds; test normals include held-out diverse ones") {
  const SynthConfig cfg;
  const auto c = generate(cfg);
  std::size_t diverse = 0, dom = 0;
  for (const auto& s : c.dataset.train) {
    const std::set<int> u(s.event_ids.begin(), s.event_ids.end());
    if (s.seq_id.starts_with("train-div-")) {
      ++diverse;
      CHECK(u.size() == cfg.seq_len);
      CHECK(u.count(1) == 0);
    } else {
      ++dom;
      CHECK(s.seq_id.starts_with("train-dom-"));
    }
  }
  CHECK(diverse == 400);
  CHECK(dom == 1600);

  std::set<std::vector<int>> train_div;
  for (const auto& s : c.dataset.train)
    if (s.seq_id.starts_with("train-div-")) train_div.insert(s.event_ids);
  const auto sub = diverse_subset(c.dataset.test);
  std::size_t normals = 0;
  for (const auto& s : sub) {
    if (!is_diverse_normal(s)) continue;
    ++normals;
    CHECK(train_div.count(s.event_ids) == 0);  // held out
  }
  CHECK(normals == 200);
  CHECK(sub.size() == 300);
}

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  const auto a = generate(cfg), b = generate(cfg);
  REQUIRE(a.dataset.test.size() == b.dataset.test.size());
  for (std::size_t i = 0; i < a.dataset.train.size(); ++i)
    CHECK(a.dataset.train[i].event_ids == b.dataset.train[i].event_ids);
  for (std::size_t i = 0; i < a.dataset.test.size(); ++i)
    CHECK(a.dataset.test[i].seq_id == b.dataset.test[i].seq_id);
  cfg.seed = 8;
  const auto c = generate(cfg);
  bool differs = false;
  for (std::size_t i = 0; i < a.dataset.train.size(); ++i)
    differs = differs || a.dataset.train[i].event_ids != c.dataset.train[i].event_ids;
  CHECK(differs);
}

TEST_CASE("invalid configurations") {
  SynthConfig cfg;
  cfg.vocab_rare = 5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.dominant_fill_prob = 1.5;
  CHECK_THROWS_AS(generate(cfg), ConfigError);
  cfg = SynthConfig{};
  cfg.n_train = 0;
  CHECK_THROWS_AS(generate(cfg), ConfigError);

  RunConfig rc;
  rc.set("synth_vocab_rare", "12");
  rc.set("synth_seed", "3");
  const auto from = SynthConfig::from_config(rc);
  CHECK(from.vocab_rare == 12);
  CHECK(from.seed == 3);
}

TEST_CASE("ablation rejects unknown codes before training and reports one row per variant") {
  SynthConfig sc;
  sc.n_train = 120;
  sc.n_test_normal = 30;
  sc.n_test_anom = 10;
  const auto c = generate(sc);
  const auto table = embedder::EmbeddingTable::from_catalog(c.catalog, 32, 1234);
  Experiment exp;
  exp.model.hidden = 4;
  exp.train.max_epochs = 2;
  const std::vector<std::string> bad{"dff", "qqq"};
  CHECK_THROWS_AS(run_ablation(c.dataset, table, exp, bad), ConfigError);

  const std::vector<std::string> codes{"sng", "dff", "drl"};
  const auto rows = run_ablation(c.dataset, table, exp, codes);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].variant == codes[i]);
    CHECK(rows[i].epochs == 2);
    CHECK(rows[i].auroc >= 0.0);
    CHECK(rows[i].auroc <= 1.0);
  }
  const auto again = run_ablation(c.dataset, table, exp, codes);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again[i].auroc == rows[i].auroc);
    CHECK(again[i].f1 == rows[i].f1);
  }

  testing::TempDir dir;
  write_ablation_report(dir / "a.csv", rows, "cafe", 7);
  const auto text = testing::read_file(dir / "a.csv");
  CHECK(text.find("config_hash=cafe") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
}
