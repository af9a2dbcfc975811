#include <doctest.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "rnnpool/data.hpp"
#include "rnnpool/rng.hpp"

using namespace rnnpool;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rnnpool_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

}  // namespace

TEST_CASE("load_tsv parses labels and lowercases tokens") {
  TempDir dir;
  const std::string path = dir.file("corpus.tsv", "1\tHello World\n0\tx y z\n");
  const RawCorpus corpus = load_tsv(path);
  REQUIRE(corpus.examples.size() == 2);
  CHECK(corpus.examples[0].label == 1);
  CHECK(corpus.examples[0].tokens == std::vector<std::string>{"hello", "world"});
  CHECK(corpus.num_classes() == 2);
}

TEST_CASE("load_tsv reports malformed lines with numbers") {
  TempDir dir;
  const std::string no_tab = dir.file("no_tab.tsv", "1\tok fine\nbroken line\n");
  try {
    load_tsv(no_tab);
    FAIL("expected an exception");
  } catch (const std::runtime_error& ex) {
    CHECK(std::string(ex.what()).find("line 2") != std::string::npos);
  }

  const std::string bad_label = dir.file("bad_label.tsv", "x\thello\n");
  CHECK_THROWS(load_tsv(bad_label));
  const std::string empty = dir.file("empty.tsv", "");
  CHECK_THROWS(load_tsv(empty));
  CHECK_THROWS(load_tsv((dir.path / "missing.tsv").string()));
}

TEST_CASE("vocabulary ranking, cap, and round trip") {
  TempDir dir;
  const std::string path = dir.file("freq.tsv", "0\tb b b a a c\n1\ta c c\n");
  const RawCorpus corpus = load_tsv(path);
  // frequencies: a=3, b=3, c=3 -> lexicographic tie-break a, b, c
  Vocabulary vocab = Vocabulary::build(corpus, 25000);
  CHECK(vocab.size() == 5);
  CHECK(vocab.id("a") == 2);
  CHECK(vocab.id("b") == 3);
  CHECK(vocab.id("c") == 4);
  CHECK(vocab.id("zzz") == Vocabulary::kUnk);

  Vocabulary capped = Vocabulary::build(corpus, 4);
  CHECK(capped.size() == 4);
  CHECK(capped.id("a") == 2);
  CHECK(capped.id("b") == 3);
  CHECK(capped.id("c") == Vocabulary::kUnk);

  Vocabulary again = Vocabulary::build(corpus, 25000);
  CHECK(vocab.tokens() == again.tokens());

  // encode then decode is the identity on in-vocab tokens
  const std::vector<std::string> tokens = {"a", "c", "b", "a"};
  CHECK(vocab.decode(vocab.encode(tokens)) == tokens);
}

TEST_CASE("frequency beats the alphabet in ranking") {
  TempDir dir;
  const std::string path = dir.file("rank.tsv", "0\tzebra zebra zebra apple\n");
  Vocabulary vocab = Vocabulary::build(load_tsv(path));
  CHECK(vocab.id("zebra") == 2);
  CHECK(vocab.id("apple") == 3);
}

TEST_CASE("filter_by_length boundaries") {
  RawCorpus corpus;
  corpus.examples.push_back({std::vector<std::string>(99, "w"), 0});
  corpus.examples.push_back({std::vector<std::string>(100, "w"), 1});

  const RawCorpus kept = filter_by_length(corpus, 100, std::nullopt);
  CHECK(kept.examples.size() == 1);
  CHECK(kept.examples[0].label == 1);

  const RawCorpus all = filter_by_length(corpus, std::nullopt, std::nullopt);
  CHECK(all.examples.size() == 2);

  CHECK_THROWS(filter_by_length(corpus, 1000, std::nullopt));
}

TEST_CASE("pretrained embeddings fill hits and seed the misses") {
  TempDir dir;
  const std::string corpus_path = dir.file("c.tsv", "0\talpha beta\n");
  const Vocabulary vocab = Vocabulary::build(load_tsv(corpus_path));

  const std::string full = dir.file("full.vec",
                                    "<pad> 0 0 0\n<unk> 0.5 0.5 0.5\nalpha 1 2 3\nbeta -1 -2 -3\n");
  const EmbeddingInit hit = load_pretrained_embeddings(full, vocab, 3, 9);
  CHECK(hit.coverage() == 1.0);
  CHECK(hit.matrix(vocab.id("alpha"), 0) == 1.0);
  CHECK(hit.matrix(vocab.id("beta"), 2) == -3.0);

  const std::string empty = dir.file("empty.vec", "");
  const EmbeddingInit none = load_pretrained_embeddings(empty, vocab, 3, 9);
  CHECK(none.hits == 0);
  CHECK(none.coverage() == 0.0);
  CHECK(none.matrix.cwiseAbs().maxCoeff() <= 0.5 / 3.0);

  const std::string bad = dir.file("bad.vec", "alpha 1 2\n");
  CHECK_THROWS(load_pretrained_embeddings(bad, vocab, 3, 9));
}

TEST_CASE("pad_batch shapes, masks, and determinism") {
  Corpus corpus;
  corpus.num_classes = 2;
  corpus.examples.push_back({{2, 3, 4}, 0});
  corpus.examples.push_back({{5, 6, 7, 8, 9}, 1});

  const Batch batch = make_batch(corpus, {0, 1});
  CHECK(batch.ids.rows() == 2);
  CHECK(batch.ids.cols() == 5);
  CHECK(batch.mask.row(0).sum() == 3.0);
  CHECK(batch.mask.row(1).sum() == 5.0);
  CHECK(batch.ids(0, 3) == Vocabulary::kPad);
  CHECK(batch.lengths == std::vector<int>{3, 5});

  const Batch single = make_batch(corpus, {0});
  CHECK(single.ids.cols() == 3);
  CHECK(single.mask.sum() == 3.0);

  const std::vector<Batch> batches = pad_batches(corpus, {1, 0}, 1);
  CHECK(batches.size() == 2);
  CHECK(batches[0].labels[0] == 1);
}

TEST_CASE("synthetic corpus places the keyword and stays reproducible") {
  SyntheticSpec spec;
  spec.num_examples = 50;
  spec.length = 200;
  spec.keyword_relative_pos = 0.5;
  spec.vocab_size = 40;
  const RawCorpus a = synthetic_corpus(spec, 7);
  const RawCorpus b = synthetic_corpus(spec, 7);
  REQUIRE(a.examples.size() == 50);
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].tokens == b.examples[i].tokens);
    CHECK(a.examples[i].label == b.examples[i].label);
  }

  const int jitter = static_cast<int>(0.02 * spec.length);
  for (const RawExample& e : a.examples) {
    int keyword_at = -1;
    int count = 0;
    for (std::size_t t = 0; t < e.tokens.size(); ++t) {
      if (e.tokens[t].rfind("key", 0) == 0) {
        keyword_at = static_cast<int>(t);
        ++count;
      }
    }
    CHECK(count == 1);
    CHECK(e.tokens[static_cast<std::size_t>(keyword_at)] == "key" + std::to_string(e.label));
    CHECK(keyword_at >= 99 - jitter);
    CHECK(keyword_at <= 99 + jitter);
  }
}

TEST_CASE("synthetic keyword jitter covers its range uniformly enough") {
  SyntheticSpec spec;
  spec.num_examples = 10000;
  spec.length = 100;
  spec.keyword_relative_pos = 0.5;
  spec.vocab_size = 30;
  const int base = static_cast<int>(0.5 * (spec.length - 1));
  const int jitter = static_cast<int>(0.02 * spec.length);  // +-2 positions
  std::map<int, long> histogram;
  for (const RawExample& e : synthetic_corpus(spec, 11).examples)
    for (std::size_t t = 0; t < e.tokens.size(); ++t)
      if (e.tokens[t].rfind("key", 0) == 0) ++histogram[static_cast<int>(t)];

  long total = 0;
  for (const auto& [pos, count] : histogram) {
    CHECK(pos >= base - jitter);
    CHECK(pos <= base + jitter);
    total += count;
  }
  CHECK(total == spec.num_examples);
  const double expected = static_cast<double>(spec.num_examples) / (2 * jitter + 1);
  for (int pos = base - jitter; pos <= base + jitter; ++pos)
    CHECK(std::abs(histogram[pos] - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("synthetic keyword at position zero lands at the start") {
  SyntheticSpec spec;
  spec.num_examples = 20;
  spec.length = 50;
  spec.keyword_relative_pos = 0.0;
  spec.vocab_size = 30;
  for (const RawExample& e : synthetic_corpus(spec, 13).examples) {
    int keyword_at = -1;
    for (std::size_t t = 0; t < e.tokens.size(); ++t)
      if (e.tokens[t].rfind("key", 0) == 0) keyword_at = static_cast<int>(t);
    CHECK(keyword_at <= static_cast<int>(0.02 * spec.length));
  }
}

TEST_CASE("synthetic generator rejects a vocab smaller than the keyword set") {
  SyntheticSpec spec;
  spec.num_classes = 10;
  spec.vocab_size = 10;
  CHECK_THROWS(synthetic_corpus(spec, 3));
}

TEST_CASE("tsv round trip preserves the corpus") {
  TempDir dir;
  SyntheticSpec spec;
  spec.num_examples = 10;
  spec.length = 12;
  spec.vocab_size = 20;
  const RawCorpus corpus = synthetic_corpus(spec, 17);
  const std::string path = (dir.path / "synth.tsv").string();
  save_tsv(path, corpus);
  const RawCorpus loaded = load_tsv(path);
  REQUIRE(loaded.examples.size() == corpus.examples.size());
  for (std::size_t i = 0; i < corpus.examples.size(); ++i) {
    CHECK(loaded.examples[i].tokens == corpus.examples[i].tokens);
    CHECK(loaded.examples[i].label == corpus.examples[i].label);
  }
}

TEST_CASE("distractor pool io") {
  TempDir dir;
  SyntheticSpec spec;
  const DistractorPool pool = synthetic_distractors(spec, 25, 19);
  CHECK(pool.sentences.size() == 25);
  const std::string path = (dir.path / "pool.txt").string();
  save_distractor_pool(path, pool);
  const DistractorPool loaded = DistractorPool::load(path);
  REQUIRE(loaded.sentences.size() == 25);
  CHECK(loaded.sentences[3] == pool.sentences[3]);
}
