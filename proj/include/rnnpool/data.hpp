#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rnnpool/autodiff.hpp"

namespace rnnpool {

struct RawExample {
  std::vector<std::string> tokens;
  int label = 0;
};

struct RawCorpus {
  std::vector<RawExample> examples;
  int num_classes() const;
};

// Reads `label<TAB>text`, one example per line; text is lowercased and split
// on whitespace. Malformed lines abort the load with their line numbers.
RawCorpus load_tsv(const std::string& path);
void save_tsv(const std::string& path, const RawCorpus& corpus);

RawCorpus filter_by_length(const RawCorpus& corpus, std::optional<int> min_len,
                           std::optional<int> max_len);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  // Tokens ranked by frequency (lexicographic tie-break); the top
  // max_size - 2 survive after PAD/UNK.
  static Vocabulary build(const RawCorpus& corpus, std::size_t max_size = 25000);
  static Vocabulary from_tokens(std::vector<std::string> tokens);  // checkpoint restore

  int id(const std::string& token) const;  // kUnk when missing
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Example {
  std::vector<int> ids;
  int label = 0;
};

struct Corpus {
  std::vector<Example> examples;
  int num_classes = 0;
  std::size_t size() const { return examples.size(); }
};

Corpus encode_corpus(const RawCorpus& raw, const Vocabulary& vocab, int num_classes = 0);

struct EmbeddingInit {
  Matrix matrix;  // vocab x embed
  long hits = 0;
  long misses = 0;
  double coverage() const { return hits + misses == 0 ? 0.0 : static_cast<double>(hits) / (hits + misses); }
};

// Text format: `token v1 ... v_d` per line. Vocab tokens found in the file get
// the file vector (dimension must equal embed_dim); the rest are drawn uniform
// in [-0.5/d, 0.5/d].
EmbeddingInit load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                         Eigen::Index embed_dim, std::uint64_t seed);
EmbeddingInit random_embeddings(std::size_t vocab_size, Eigen::Index embed_dim, std::uint64_t seed);

struct Batch {
  Eigen::MatrixXi ids;   // B x n, right-padded with kPad
  Matrix mask;           // B x n
  std::vector<int> lengths;
  std::vector<int> labels;
};

Batch make_batch(const Corpus& corpus, const std::vector<int>& indices);
// Consecutive batches over `order`; the last one may be smaller.
std::vector<Batch> pad_batches(const Corpus& corpus, const std::vector<int>& order, int batch_size);

// One sentence per line, whitespace tokens. Used as the distractor source.
struct DistractorPool {
  std::vector<std::vector<std::string>> sentences;
  static DistractorPool load(const std::string& path);
};
void save_distractor_pool(const std::string& path, const DistractorPool& pool);

// Planted-keyword task: filler tokens are class-neutral; one keyword token per
// example decides the label. Separable by construction when the keyword is
// observed.
struct SyntheticSpec {
  int num_examples = 1000;
  int length = 200;
  double keyword_relative_pos = 0.5;
  int num_classes = 2;
  int vocab_size = 200;           // fillers + one keyword per class
  double jitter_fraction = 0.02;  // keyword position jitter, fraction of length
};

RawCorpus synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed);
// Sentences built from the same filler tokens (label-neutral by construction).
DistractorPool synthetic_distractors(const SyntheticSpec& spec, int num_sentences, std::uint64_t seed);

}  // namespace rnnpool
