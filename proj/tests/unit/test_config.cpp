#include <doctest.h>

#include "logsd/common.hpp"
#include "logsd/config.hpp"
#include "test_util.hpp"

using namespace logsd;

TEST_CASE("defaults follow the paper's hyperparameters") {
  RunConfig c;
  CHECK(c.get_int("embedding_dim") == 32);
  CHECK(c.get_int("hidden") == 128);
  CHECK(c.get_int_list("kernels") == std::vector<int>{3, 4, 5});
  CHECK(c.get_double("alpha") == 50.0);
  CHECK(c.get_double("lr_start") == 1e-2);
  CHECK(c.get_double("lr_end") == 1e-4);
  CHECK(c.get_double("weight_decay") == 1e-4);
  CHECK(c.get_int("batch_size") == 64);
  CHECK(c.get_int("max_epochs") == 100);
  CHECK(c.get_int("patience") == 20);
  CHECK(c.get_double_list("kappa_set") == std::vector<double>{0.05, 0.1, 0.15, 0.2, 0.3});
  CHECK(c.get("variant") == "dff");
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(RunConfig::from_text("no_such_key = 1\n"), ConfigError);
  RunConfig c;
  CHECK_THROWS_AS(c.set("bogus", "1"), ConfigError);
  CHECK_THROWS_AS(c.set_assignment("missing_equals"), ConfigError);
}

TEST_CASE("text parsing ignores comments and whitespace") {
  const auto c = RunConfig::from_text("# header\n  seed = 9   # trailing\n\nwindow_size=20\n");
  CHECK(c.get_int("seed") == 9);
  CHECK(c.get_int("window_size") == 20);
  CHECK(c.is_set("seed"));
  CHECK_FALSE(c.is_set("alpha"));
}

TEST_CASE("typed getters validate their input") {
  RunConfig c;
  c.set("seed", "abc");
  CHECK_THROWS_AS(c.get_int("seed"), ConfigError);
  c.set("dedup", "maybe");
  CHECK_THROWS_AS(c.get_bool("dedup"), ConfigError);
  c.set("kappa_set", "0.1,x");
  CHECK_THROWS_AS(c.get_double_list("kappa_set"), ConfigError);
}

TEST_CASE("profiles preset only keys the user left alone") {
  auto hdfs = RunConfig::from_text("profile = hdfs\n");
  CHECK(hdfs.get("grouping") == "session");
  CHECK(hdfs.get_bool("dedup") == false);
  CHECK(hdfs.get("split_strategy") == "random");

  auto mixed = RunConfig::from_text("dedup = true\nprofile = hdfs\n");
  CHECK(mixed.get_bool("dedup") == true);
  CHECK(mixed.get("grouping") == "session");

  auto bgl = RunConfig::from_text("profile = bgl\n");
  CHECK(bgl.get("grouping") == "entry");
  CHECK(bgl.get_bool("dedup") == true);
  CHECK(bgl.get("split_strategy") == "chronological");

  CHECK_THROWS_AS(RunConfig::from_text("profile = spirit\n"), ConfigError);
}

TEST_CASE("path keys resolve under out_dir and do not affect the hash") {
  RunConfig a;
  a.set("out_dir", "/tmp/x");
  CHECK(a.path("checkpoint") == std::filesystem::path("/tmp/x/model.ckpt"));
  a.set("checkpoint", "elsewhere.bin");
  CHECK(a.path("checkpoint") == std::filesystem::path("elsewhere.bin"));
  CHECK_THROWS_AS(a.path("seed"), ConfigError);

  RunConfig b;
  CHECK(a.hash() == b.hash());
  b.set("seed", "43");
  CHECK(a.hash() != b.hash());
  CHECK(a.hash_hex().size() == 16);
}

TEST_CASE("canonical text lists every key, optionally without paths") {
  RunConfig c;
  const auto full = c.canonical_text();
  const auto no_paths = c.canonical_text(false);
  CHECK(full.find("out_dir = ") != std::string::npos);
  CHECK(no_paths.find("out_dir = ") == std::string::npos);
  CHECK(no_paths.find("seed = 42") != std::string::npos);
}

TEST_CASE("missing config file is a config error") {
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/logsd.cfg"), ConfigError);
  testing::TempDir dir;
  testing::write_file(dir / "a.cfg", "seed = 5\n");
  CHECK(RunConfig::from_file(dir / "a.cfg").get_int("seed") == 5);
}
