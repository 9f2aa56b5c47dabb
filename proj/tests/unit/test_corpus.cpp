#include <doctest.h>

#include <set>

#include "logsd/corpus.hpp"
#include "test_util.hpp"

using namespace logsd;
using namespace logsd::corpus;
using logsd::testing::TempDir;
using logsd::testing::write_file;

namespace {

const char* kBglNormal =
    "- 1117838570 2005.06.03 R02-M1-N0-C:J12-U11 2005-06-03-15.42.50.363779 "
    "R02-M1-N0-C:J12-U11 RAS KERNEL INFO instruction cache parity error corrected";
const char* kBglAnomalous =
    "KERNDTLB 1117838573 2005.06.03 R23-M0-NE-C:J05-U01 2005-06-03-15.42.53.276129 "
    "R23-M0-NE-C:J05-U01 RAS KERNEL FATAL data TLB error interrupt";

}  // namespace

TEST_CASE("BGL label rule: leading '-' is normal, anything else anomalous") {
  TempDir dir;
  write_file(dir / "bgl.log", std::string(kBglNormal) + "\n" + kBglAnomalous + "\n");
  LoadReport report;
  const auto lines = load_raw_lines(dir / "bgl.log", FormatProfile::bgl(), &report);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].label == Label::kNormal);
  CHECK(lines[0].content == "instruction cache parity error corrected");
  CHECK(lines[1].label == Label::kAnomalous);
  CHECK(lines[1].content == "data TLB error interrupt");
  CHECK(lines[0].line_no == 0);
  CHECK(lines[1].line_no == 1);
  CHECK(report.malformed == 0);
}

TEST_CASE("empty file gives an empty stream") {
  TempDir dir;
  write_file(dir / "empty.log", "");
  LoadReport report;
  CHECK(load_raw_lines(dir / "empty.log", FormatProfile::bgl(), &report).empty());
  CHECK(report.malformed == 0);
  CHECK(report.lines == 0);
}

TEST_CASE("malformed lines are kept as normal with raw content") {
  TempDir dir;
  write_file(dir / "m.log", "FATAL too short\n" + std::string(kBglNormal) + "\n");
  LoadReport report;
  const auto lines = load_raw_lines(dir / "m.log", FormatProfile::bgl(), &report);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].malformed);
  CHECK(lines[0].label == Label::kNormal);
  CHECK(lines[0].content == "FATAL too short");
  CHECK(report.malformed == 1);
}

TEST_CASE("unreadable log and missing session labels are data errors") {
  CHECK_THROWS_AS(load_raw_lines("/nonexistent/x.log", FormatProfile::bgl()), DataError);
  TempDir dir;
  write_file(dir / "h.log", "081109 203615 148 INFO dfs.DataNode: Receiving block blk_1\n");
  CHECK_THROWS_AS(load_raw_lines(dir / "h.log", FormatProfile::hdfs(dir / "missing.csv")),
                  DataError);
}

TEST_CASE("HDFS session keys and labels come from the block id") {
  TempDir dir;
  write_file(dir / "labels.csv", "BlockId,Label\nblk_1,Normal\nblk_-2,Anomaly\n");
  write_file(dir / "h.log",
             "081109 203615 148 INFO dfs.DataNode$PacketResponder: Received block blk_1 of size 5\n"
             "081109 203616 149 INFO dfs.FSNamesystem: allocateBlock: /user/x blk_-2\n");
  const auto lines = load_raw_lines(dir / "h.log", FormatProfile::hdfs(dir / "labels.csv"));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].session_key == "blk_1");
  CHECK(lines[0].label == Label::kNormal);
  CHECK(lines[1].session_key == "blk_-2");
  CHECK(lines[1].label == Label::kAnomalous);
  CHECK(lines[0].content == "Received block blk_1 of size 5");
}

TEST_CASE("pre-masking recognises the variable token classes") {
  for (const char* v : {"123", "-4.5", "0x1f", "deadbeef12", "10.251.42.84", "/10.251.42.84:33145",
                        "blk_38865049064139660", "blk_-17", "/user/root/file", "<*>"}) {
    CAPTURE(v);
    CHECK(is_variable_token(v));
  }
  for (const char* v : {"Receiving", "src:", "block", "abc", "deadbeef", "1.2.3", "//", "/"}) {
    CAPTURE(v);
    CHECK_FALSE(is_variable_token(v));
  }
}

TEST_CASE("HDFS receiving-block line yields the expected template and params") {
  TemplateCatalog cat;
  const auto r = cat.parse("Receiving block blk_38865049064139660 src: /10.251.42.84:33145");
  CHECK(r.event_id == 1);
  CHECK(r.template_text == "Receiving block <*> src: <*>");
  CHECK(r.params == std::vector<std::string>{"blk_38865049064139660", "/10.251.42.84:33145"});
}

TEST_CASE("parsing is deterministic and merges lines differing only in variables") {
  TemplateCatalog cat;
  const auto a = cat.parse("Receiving block blk_1 src: /10.0.0.1:50010");
  const auto b = cat.parse("Receiving block blk_1 src: /10.0.0.1:50010");
  const auto c = cat.parse("Receiving block blk_-99 src: /10.9.8.7:1");
  CHECK(a.event_id == b.event_id);
  CHECK(a.event_id == c.event_id);
  CHECK(cat.size() == 1);
  const auto d = cat.parse("Deleting block blk_1 file /data/x");
  CHECK(d.event_id == 2);
}

TEST_CASE("similar lines generalise into a wildcard template") {
  TemplateCatalog cat;
  const auto a = cat.parse("node alpha started job now");
  const auto b = cat.parse("node alpha stopped job now");
  CHECK(a.event_id == b.event_id);
  CHECK(b.template_text == "node alpha <*> job now");
  CHECK(b.params == std::vector<std::string>{"stopped"});
  // Below threshold: only 1 of 5 tokens agree.
  const auto c = cat.parse("node beta gamma delta epsilon");
  CHECK(c.event_id != a.event_id);
}

TEST_CASE("match is read-only and agrees with parse") {
  TemplateCatalog cat;
  cat.parse("disk error on sda 12");
  const auto m = cat.match("disk error on sda 99");
  REQUIRE(m.has_value());
  CHECK(m->event_id == 1);
  CHECK_FALSE(cat.match("completely different text here").has_value());
  CHECK(cat.size() == 1);
}

TEST_CASE("similarity is symmetric, bounded and 1 on identity") {
  const std::vector<std::string> a{"x", "<*>", "z"}, b{"x", "y", "z"}, c{"q", "y", "w"};
  CHECK(token_similarity(a, b) == token_similarity(b, a));
  CHECK(token_similarity(b, c) == token_similarity(c, b));
  CHECK(token_similarity(a, a) == 1.0);
  CHECK(token_similarity(a, b) == doctest::Approx(2.0 / 3.0));
  const std::vector<std::string> shorter{"x"};
  CHECK(token_similarity(a, shorter) == 0.0);
}

TEST_CASE("event ids are dense and the catalog round-trips") {
  TempDir dir;
  TemplateCatalog cat;
  cat.parse("alpha one");
  cat.parse("beta two three");
  cat.parse("gamma four five six");
  CHECK(cat.size() == 3);
  for (int id = 1; id <= 3; ++id) CHECK_FALSE(cat.template_text(id).empty());

  cat.save(dir / "c1.txt");
  const auto text = testing::read_file(dir / "c1.txt");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);

  const auto loaded = TemplateCatalog::load(dir / "c1.txt");
  CHECK(loaded.size() == 3);
  loaded.save(dir / "c2.txt");
  CHECK(testing::read_file(dir / "c2.txt") == text);

  // Reloaded catalogs resolve lines to the same ids.
  auto reloaded = TemplateCatalog::load(dir / "c1.txt");
  CHECK(reloaded.parse("beta two three").event_id == 2);
}

TEST_CASE("empty catalog saves a header only") {
  TempDir dir;
  TemplateCatalog cat;
  cat.save(dir / "e.txt");
  const auto text = testing::read_file(dir / "e.txt");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(TemplateCatalog::load(dir / "e.txt").size() == 0);
}

TEST_CASE("parse_file and the parsed TSV round-trip") {
  TempDir dir;
  write_file(dir / "bgl.log", std::string(kBglNormal) + "\n" + kBglAnomalous + "\n" + kBglNormal +
                                  "\n");
  TemplateCatalog cat;
  const auto recs = parse_file(dir / "bgl.log", FormatProfile::bgl(), cat);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].event_id == recs[2].event_id);
  CHECK(recs[1].label == Label::kAnomalous);
  for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i].line_no > recs[i - 1].line_no);

  write_parsed_tsv(dir / "p.tsv", recs, "abc");
  const auto back = read_parsed_tsv(dir / "p.tsv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].line_no == recs[i].line_no);
    CHECK(back[i].label == recs[i].label);
    CHECK(back[i].event_id == recs[i].event_id);
  }

  // Two independent parses give identical records.
  TemplateCatalog cat2;
  const auto again = parse_file(dir / "bgl.log", FormatProfile::bgl(), cat2);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again[i].event_id == recs[i].event_id);
}

TEST_CASE("no two templates in one leaf reach the similarity threshold") {
  TemplateCatalog cat;
  Rng rng(4);
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 300; ++i) {
    std::string line;
    for (int t = 0; t < 5; ++t) line += words[rng.uniform_index(words.size())] + " ";
    cat.parse(line);
  }
  // Re-parsing any template text must return that template's own id.
  for (int id = 1; id <= static_cast<int>(cat.size()); ++id) {
    const auto m = cat.match(cat.template_text(id));
    REQUIRE(m.has_value());
    CHECK(m->event_id == id);
  }
}
