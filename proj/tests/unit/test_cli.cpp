#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "logsd/cli.hpp"
#include "test_util.hpp"

using namespace logsd;
using logsd::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "logsd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

const char* kBgl =
    "- 1 2005.06.03 R02 2005-06-03-15.42.50.1 R02 RAS KERNEL INFO generating core.{n}\n"
    "- 2 2005.06.03 R02 2005-06-03-15.42.50.2 R02 RAS KERNEL INFO instruction cache parity error corrected\n"
    "- 3 2005.06.03 R02 2005-06-03-15.42.50.3 R02 RAS KERNEL INFO instruction cache parity error corrected\n"
    "KERNDTLB 4 2005.06.03 R03 2005-06-03-15.42.50.4 R03 RAS KERNEL FATAL data TLB error interrupt\n";

std::string bgl_log(int blocks) {
  std::string out;
  for (int i = 0; i < blocks; ++i) {
    std::string b = kBgl;
    for (std::size_t p; (p = b.find("{n}")) != std::string::npos;) b.replace(p, 3, std::to_string(i));
    // Only the last block carries the anomalous line.
    if (i + 1 < blocks) b = b.substr(0, b.find("KERNDTLB"));
    out += b;
  }
  return out;
}

std::vector<std::string> small_model(const std::string& dir) {
  return {"--out-dir", dir, "--set", "hidden=4", "--set", "max_epochs=2", "--set",
          "synth_n_train=150", "--set", "synth_n_test_normal=30", "--set", "synth_n_test_anom=10"};
}

std::vector<std::string> cmd(const std::string& name, std::vector<std::string> args) {
  args.insert(args.begin(), name);
  return args;
}

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<std::string> more) {
  base.insert(base.end(), more);
  return base;
}

}  // namespace

TEST_CASE("usage errors and exit codes") {
  TempDir dir;
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"frobnicate"}).code == 2);

  const auto missing = run({"parse", "--input", (dir / "nope.log").string(), "--out-dir", dir.str()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.log") != std::string::npos);

  testing::write_file(dir / "bgl.log", bgl_log(2));
  CHECK(run({"parse", "--input", (dir / "bgl.log").string(), "--set", "bogus_key=1"}).code == 2);
  testing::write_file(dir / "bad.conf", "window_sise = 100\n");
  CHECK(run({"parse", "--config", (dir / "bad.conf").string(), "--input", (dir / "bgl.log").string()}).code == 2);
  CHECK(run({"prepare", "--out-dir", dir.str()}).code == 1);
}

TEST_CASE("parse and prepare report dataset statistics") {
  TempDir dir;
  testing::write_file(dir / "bgl.log", bgl_log(10));
  const auto p = run({"parse", "--input", (dir / "bgl.log").string(), "--out-dir", dir.str()});
  REQUIRE(p.code == 0);
  CHECK(std::filesystem::exists(dir / "parsed.tsv"));
  CHECK(std::filesystem::exists(dir / "catalog.txt"));
  CHECK(p.out.find("config_hash ") != std::string::npos);

  const auto prep = run({"prepare", "--out-dir", dir.str(), "--set", "window_size=4"});
  INFO(prep.err);
  REQUIRE(prep.code == 0);
  CHECK(prep.out.find("dataset statistics") != std::string::npos);
  CHECK(prep.out.find("window=4") != std::string::npos);
  CHECK(prep.out.find("dedup         enabled") != std::string::npos);
  CHECK(prep.out.find("boundary line_no=") != std::string::npos);
  CHECK(testing::read_file(dir / "train.tsv").find("config_hash") != std::string::npos);
}

TEST_CASE("session profile prepares without dedup") {
  TempDir dir;
  std::string log;
  std::string labels = "BlockId,Label\n";
  for (int b = 1; b <= 10; ++b) {
    labels += "blk_" + std::to_string(b) + (b == 3 ? ",Anomaly\n" : ",Normal\n");
    for (int k = 0; k < 3; ++k)
      log += "081109 2036" + std::to_string(10 + k) + " 148 INFO dfs.DataNode: Receiving block blk_" +
             std::to_string(b) + " src: /10.0.0." + std::to_string(k) + ":50010\n";
  }
  testing::write_file(dir / "hdfs.log", log);
  testing::write_file(dir / "labels.csv", labels);
  const std::vector<std::string> common{"--out-dir", dir.str(), "--set", "profile=hdfs", "--set",
                                        "session_labels=" + (dir / "labels.csv").string()};
  REQUIRE(run(cmd("parse", with(common, {"--input", (dir / "hdfs.log").string()}))).code == 0);
  auto args = common;
  args.insert(args.begin(), "prepare");
  const auto prep = run(args);
  REQUIRE(prep.code == 0);
  CHECK(prep.out.find("dedup         disabled") != std::string::npos);
  CHECK(prep.out.find("grouping      session") != std::string::npos);
}

TEST_CASE("synthetic pipeline is deterministic end to end") {
  TempDir a, b;
  for (auto* dir : {&a, &b}) {
    const auto base = small_model(dir->str());
    REQUIRE(run(cmd("synth", base)).code == 0);
    const auto tr = run(cmd("train", base));
    REQUIRE(tr.code == 0);
    CHECK(tr.out.find("trained dff for 2 epochs") != std::string::npos);
    REQUIRE(run(cmd("score", base)).code == 0);
    const auto ev = run(cmd("evaluate", base));
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("AUROC") != std::string::npos);
    CHECK(ev.out.find("random detector") != std::string::npos);
  }
  CHECK(testing::read_file(a / "report.csv") == testing::read_file(b / "report.csv"));
  CHECK(testing::read_file(a / "scores.csv") == testing::read_file(b / "scores.csv"));
  CHECK(testing::read_file(a / "metrics.txt") == testing::read_file(b / "metrics.txt"));
  const auto report = testing::read_file(a / "report.csv");
  CHECK(report.find("config_hash=") != std::string::npos);
  CHECK(report.find("# config: variant = dff") != std::string::npos);
  CHECK(testing::read_file(a / "loss_log.csv").starts_with("# config_hash="));
}

TEST_CASE("synth prints corpus statistics") {
  TempDir dir;
  const auto r = run({"synth", "--out-dir", dir.str()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("synthetic corpus") != std::string::npos);
  CHECK(r.out.find("sequences     2500 (train 2000, test 500)") != std::string::npos);
  CHECK(r.out.find("dominant share of training positions") != std::string::npos);
}

TEST_CASE("train refuses anomalies; divergence exits 3; ablate writes rows") {
  TempDir dir;
  const auto base = small_model(dir.str());
  REQUIRE(run(cmd("synth", base)).code == 0);

  const auto diverge = run(with(cmd("train", base),
                                {"--set", "lr_start=1e300", "--set", "lr_end=1e300"}));
  CHECK(diverge.code == 3);

  const auto on_test = run(with(cmd("train", base),
                                {"--set", "train_set=" + (dir / "test.tsv").string()}));
  CHECK(on_test.code == 1);
  CHECK(on_test.err.find("anomalous") != std::string::npos);

  const auto abl = run(with(cmd("ablate", base),
                            {"--set", "ablation_variants=sng,dff"}));
  REQUIRE(abl.code == 0);
  const auto text = testing::read_file(dir / "ablation.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.find("\nsng,") != std::string::npos);
  CHECK(text.find("\ndff,") != std::string::npos);

  CHECK(run(with(cmd("ablate", base), {"--set", "ablation_variants=dff,zzz"})).code == 2);
}

TEST_CASE("the installed binary maps errors to exit codes") {
  TempDir dir;
  const std::string bin = LOGSD_BIN;
  const auto status = [&](const std::string& args) {
    const int rc = std::system((bin + " " + args + " > " + (dir / "o.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(status("--help") == 0);
  CHECK(status("parse --input " + (dir / "none.log").string()) == 1);
  CHECK(status("synth --set nonsense=1") == 2);
}
