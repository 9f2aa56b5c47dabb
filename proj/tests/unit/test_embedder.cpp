#include <doctest.h>

#include <cmath>

#include "logsd/embedder.hpp"
#include "test_util.hpp"

using namespace logsd;
using namespace logsd::embedder;
using sequencer::EventSequence;

namespace {

EventSequence seq_of(std::vector<int> ids, std::string id = "s") {
  EventSequence s;
  s.seq_id = std::move(id);
  s.event_ids = std::move(ids);
  return s;
}

EmbeddingTable small_table(std::size_t dim = 4) {
  EmbeddingTable t(dim, 1);
  for (int id = 1; id <= 3; ++id) {
    std::vector<double> v(dim, static_cast<double>(id));
    t.set(id, v);
  }
  return t;
}

}  // namespace

TEST_CASE("template tokenization") {
  using V = std::vector<std::string>;
  CHECK(tokenize_template("Receiving block <*> src: <*>") == V{"receiving", "block", "src"});
  CHECK(tokenize_template("PacketResponder") == V{"packet", "responder"});
  CHECK(tokenize_template("<*> <*>") == V{"empty"});
  CHECK(tokenize_template("") == V{"empty"});
  CHECK(tokenize_template("got 42 TLBError x2") == V{"got", "tlb", "error", "x2"});
}

TEST_CASE("hashed token vectors are deterministic and unit variance") {
  const auto a = hashed_token_vector("block", 5, 32);
  CHECK(a == hashed_token_vector("block", 5, 32));
  CHECK(a != hashed_token_vector("block", 6, 32));
  CHECK(a != hashed_token_vector("blocks", 5, 32));

  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (int i = 0; i < 2000; ++i) {
    for (double x : hashed_token_vector("tok" + std::to_string(i), 3, 32)) {
      CHECK(std::abs(x) <= std::sqrt(3.0));
      sum += x;
      sq += x * x;
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  CHECK(std::abs(mean) < 0.02);
  CHECK(sq / static_cast<double>(n) - mean * mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("event vector is the mean of its token vectors") {
  const auto single = EmbeddingTable::embed_event("block", 32, 9);
  CHECK(single == hashed_token_vector("block", 9, 32));

  const auto u = hashed_token_vector("receiving", 9, 32);
  const auto v = hashed_token_vector("block", 9, 32);
  const auto e = EmbeddingTable::embed_event("Receiving block <*>", 32, 9);
  for (std::size_t j = 0; j < 32; ++j) CHECK(e[j] == doctest::Approx((u[j] + v[j]) / 2));
}

TEST_CASE("external vectors override hashed ones; missing words fall back") {
  testing::TempDir dir;
  testing::write_file(dir / "wv.txt", "block 1 2 3\nsrc 3 2 1\n");
  const auto wv = load_word_vectors(dir / "wv.txt", 3);
  CHECK(wv.at("block") == std::vector<double>{1, 2, 3});
  const auto e = EmbeddingTable::embed_event("block src", 3, 1, &wv);
  CHECK(e == std::vector<double>{2, 2, 2});
  const auto mixed = EmbeddingTable::embed_event("block other", 3, 1, &wv);
  const auto h = hashed_token_vector("other", 1, 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(mixed[j] == doctest::Approx((wv.at("block")[j] + h[j]) / 2));

  testing::write_file(dir / "bad.txt", "block 1 2\n");
  CHECK_THROWS_AS(load_word_vectors(dir / "bad.txt", 3), DataError);
  testing::write_file(dir / "nan.txt", "block 1 x 2\n");
  CHECK_THROWS_AS(load_word_vectors(dir / "nan.txt", 3), DataError);
}

TEST_CASE("table lookup: padding is zero, unknown ids are errors") {
  corpus::TemplateCatalog cat;
  cat.parse("alpha beta");
  cat.parse("gamma delta epsilon");
  const auto t = EmbeddingTable::from_catalog(cat, 32, 2);
  CHECK(t.max_id() == 2);
  for (double x : t.vector(0)) CHECK(x == 0.0);
  const auto v1 = t.vector(1);
  const auto ref = EmbeddingTable::embed_event("alpha beta", 32, 2);
  CHECK(std::vector<double>(v1.begin(), v1.end()) == ref);
  CHECK_THROWS_AS(t.vector(3), DataError);
  for (int id = 1; id <= 2; ++id)
    for (double x : t.vector(id)) CHECK(std::isfinite(x));
}

TEST_CASE("batch padding") {
  const auto table = small_table();
  std::vector<EventSequence> one{seq_of({1, 2, 3})};
  const auto b1 = build_batch(one, table, 5);
  CHECK(b1.length() == 3);  // padded to the batch maximum, not to l_max

  std::vector<EventSequence> two{seq_of({1, 2}, "a"), seq_of({3, 1, 2, 3}, "b")};
  const auto b = build_batch(two, table, 5);
  CHECK(b.size() == 2);
  CHECK(b.length() == 4);
  CHECK(b.dim() == 4);
  CHECK(b.pad_mask == nn::Mask{1, 1, 0, 0, 1, 1, 1, 1});
  CHECK(b.events == std::vector<int>{1, 2, 0, 0, 3, 1, 2, 3});
  CHECK(b.lengths == std::vector<std::size_t>{2, 4});
  CHECK(b.seq_ids == std::vector<std::string>{"a", "b"});
  CHECK(b.truncated == 0);
  // Zero rows coincide with padding.
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t t = 0; t < 4; ++t) {
      bool zero = true;
      for (std::size_t j = 0; j < 4; ++j) zero = zero && b.x.at(n, t, j) == 0.0;
      CHECK(zero == (b.pad_mask[n * 4 + t] == 0));
      if (!zero) CHECK(b.x.at(n, t, 0) == static_cast<double>(b.events[n * 4 + t]));
    }
}

TEST_CASE("one sequence of three events under l_max five pads to [1,1,1,0,0] with a longer peer") {
  const auto table = small_table();
  std::vector<EventSequence> seqs{seq_of({1, 2, 3}), seq_of({1, 2, 3, 1, 2})};
  const auto b = build_batch(seqs, table, 5);
  CHECK(nn::Mask(b.pad_mask.begin(), b.pad_mask.begin() + 5) == nn::Mask{1, 1, 1, 0, 0});
}

TEST_CASE("truncation to l_max") {
  const auto table = small_table();
  std::vector<int> ids(300);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = 1 + static_cast<int>(i % 3);
  std::vector<EventSequence> seqs{seq_of(ids), seq_of({2, 3})};
  const auto b = build_batch(seqs, table, 256);
  CHECK(b.length() == 256);
  CHECK(b.truncated == 1);
  CHECK(b.lengths[0] == 256);
  CHECK(b.events[255] == ids[255]);
}

TEST_CASE("pointer and value overloads agree") {
  const auto table = small_table();
  std::vector<EventSequence> seqs{seq_of({1, 2}), seq_of({3, 3, 3})};
  std::vector<const EventSequence*> ptrs{&seqs[1], &seqs[0]};
  const auto a = build_batch(ptrs, table, 8);
  std::vector<EventSequence> swapped{seqs[1], seqs[0]};
  const auto b = build_batch(swapped, table, 8);
  CHECK(a.x == b.x);
  CHECK(a.pad_mask == b.pad_mask);
}
