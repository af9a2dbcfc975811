#include "rnnpool/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rnnpool/rng.hpp"

namespace rnnpool {

namespace {

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

int RawCorpus::num_classes() const {
  int max_label = -1;
  for (const RawExample& e : examples) max_label = std::max(max_label, e.label);
  return max_label + 1;
}

RawCorpus load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_tsv: cannot open " + path);
  RawCorpus corpus;
  std::string line;
  std::vector<std::string> problems;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      problems.push_back("line " + std::to_string(line_no) + ": missing TAB separator");
      continue;
    }
    RawExample e;
    try {
      std::size_t used = 0;
      e.label = std::stoi(line.substr(0, tab), &used);
      if (used != tab || e.label < 0) throw std::invalid_argument("bad");
    } catch (const std::exception&) {
      problems.push_back("line " + std::to_string(line_no) + ": unparseable label '" + line.substr(0, tab) + "'");
      continue;
    }
    e.tokens = tokenize_lower(line.substr(tab + 1));
    corpus.examples.push_back(std::move(e));
  }
  if (!problems.empty()) {
    std::string msg = "load_tsv: " + path + " has " + std::to_string(problems.size()) + " malformed line(s):";
    for (std::size_t i = 0; i < problems.size() && i < 10; ++i) msg += "\n  " + problems[i];
    throw std::runtime_error(msg);
  }
  if (corpus.examples.empty()) throw std::runtime_error("load_tsv: " + path + " holds no examples");
  return corpus;
}

void save_tsv(const std::string& path, const RawCorpus& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_tsv: cannot open " + path + " for writing");
  for (const RawExample& e : corpus.examples) {
    out << e.label << '\t';
    for (std::size_t i = 0; i < e.tokens.size(); ++i) {
      if (i) out << ' ';
      out << e.tokens[i];
    }
    out << '\n';
  }
}

RawCorpus filter_by_length(const RawCorpus& corpus, std::optional<int> min_len,
                           std::optional<int> max_len) {
  RawCorpus kept;
  for (const RawExample& e : corpus.examples) {
    const auto len = static_cast<int>(e.tokens.size());
    if (min_len && len < *min_len) continue;
    if (max_len && len > *max_len) continue;
    kept.examples.push_back(e);
  }
  if (kept.examples.empty())
    throw std::runtime_error("filter_by_length: no examples left (had " +
                             std::to_string(corpus.examples.size()) + ", kept 0)");
  return kept;
}

Vocabulary Vocabulary::build(const RawCorpus& corpus, std::size_t max_size) {
  if (corpus.examples.empty()) throw std::invalid_argument("Vocabulary::build: empty corpus");
  std::unordered_map<std::string, long> freq;
  for (const RawExample& e : corpus.examples)
    for (const std::string& t : e.tokens) ++freq[t];

  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  const std::size_t cap = max_size > 2 ? max_size - 2 : 0;
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) tokens.push_back(ranked[i].first);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) v.index_[v.tokens_[i]] = static_cast<int>(i);
  return v;
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int i : ids) tokens.push_back(token(i));
  return tokens;
}

Corpus encode_corpus(const RawCorpus& raw, const Vocabulary& vocab, int num_classes) {
  Corpus corpus;
  corpus.num_classes = num_classes > 0 ? num_classes : raw.num_classes();
  for (const RawExample& e : raw.examples) {
    if (e.label >= corpus.num_classes)
      throw std::invalid_argument("encode_corpus: label " + std::to_string(e.label) +
                                  " >= num_classes " + std::to_string(corpus.num_classes));
    corpus.examples.push_back({vocab.encode(e.tokens), e.label});
  }
  return corpus;
}

EmbeddingInit random_embeddings(std::size_t vocab_size, Eigen::Index embed_dim, std::uint64_t seed) {
  EmbeddingInit init;
  init.misses = static_cast<long>(vocab_size);
  init.matrix.resize(static_cast<Eigen::Index>(vocab_size), embed_dim);
  Rng rng(seed);
  const double bound = 0.5 / static_cast<double>(embed_dim);
  for (Eigen::Index i = 0; i < init.matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < embed_dim; ++j) init.matrix(i, j) = rng.uniform(-bound, bound);
  return init;
}

EmbeddingInit load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                         Eigen::Index embed_dim, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_pretrained_embeddings: cannot open " + path);

  EmbeddingInit init = random_embeddings(vocab.size(), embed_dim, seed);
  init.hits = 0;
  init.misses = 0;
  std::vector<bool> filled(vocab.size(), false);

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    const int id = vocab.id(token);
    const bool wanted = id != Vocabulary::kUnk || token == vocab.token(Vocabulary::kUnk);
    std::vector<double> values;
    double x = 0.0;
    while (fields >> x) values.push_back(x);
    if (static_cast<Eigen::Index>(values.size()) != embed_dim)
      throw std::runtime_error("load_pretrained_embeddings: line " + std::to_string(line_no) + " has " +
                               std::to_string(values.size()) + " dims, expected " + std::to_string(embed_dim));
    if (!wanted || filled[static_cast<std::size_t>(id)]) continue;
    for (Eigen::Index j = 0; j < embed_dim; ++j) init.matrix(id, j) = values[static_cast<std::size_t>(j)];
    filled[static_cast<std::size_t>(id)] = true;
  }

  for (std::size_t i = 0; i < vocab.size(); ++i) (filled[i] ? init.hits : init.misses) += 1;
  return init;
}

Batch make_batch(const Corpus& corpus, const std::vector<int>& indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty index list");
  Eigen::Index max_len = 0;
  for (int idx : indices)
    max_len = std::max(max_len, static_cast<Eigen::Index>(corpus.examples[static_cast<std::size_t>(idx)].ids.size()));

  Batch batch;
  const auto b = static_cast<Eigen::Index>(indices.size());
  batch.ids = Eigen::MatrixXi::Constant(b, max_len, Vocabulary::kPad);
  batch.mask = Matrix::Zero(b, max_len);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Example& e = corpus.examples[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
    batch.lengths.push_back(static_cast<int>(e.ids.size()));
    batch.labels.push_back(e.label);
    for (std::size_t t = 0; t < e.ids.size(); ++t) {
      batch.ids(i, static_cast<Eigen::Index>(t)) = e.ids[t];
      batch.mask(i, static_cast<Eigen::Index>(t)) = 1.0;
    }
  }
  return batch;
}

std::vector<Batch> pad_batches(const Corpus& corpus, const std::vector<int>& order, int batch_size) {
  if (order.empty()) throw std::invalid_argument("pad_batches: empty order");
  std::vector<Batch> batches;
  for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), at + static_cast<std::size_t>(batch_size));
    batches.push_back(make_batch(corpus, std::vector<int>(order.begin() + static_cast<long>(at),
                                                          order.begin() + static_cast<long>(end))));
  }
  return batches;
}

DistractorPool DistractorPool::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("DistractorPool::load: cannot open " + path);
  DistractorPool pool;
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = tokenize_lower(line);
    if (!tokens.empty()) pool.sentences.push_back(std::move(tokens));
  }
  if (pool.sentences.empty()) throw std::runtime_error("DistractorPool::load: " + path + " holds no sentences");
  return pool;
}

void save_distractor_pool(const std::string& path, const DistractorPool& pool) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_distractor_pool: cannot open " + path + " for writing");
  for (const auto& sentence : pool.sentences) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i) out << ' ';
      out << sentence[i];
    }
    out << '\n';
  }
}

namespace {

std::string filler_token(int i) { return "w" + std::to_string(i); }
std::string keyword_token(int c) { return "key" + std::to_string(c); }

int filler_count(const SyntheticSpec& spec) {
  const int fillers = spec.vocab_size - spec.num_classes;
  if (fillers < 1)
    throw std::invalid_argument("synthetic_corpus: vocab_size " + std::to_string(spec.vocab_size) +
                                " too small for " + std::to_string(spec.num_classes) + " keywords");
  return fillers;
}

}  // namespace

RawCorpus synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.keyword_relative_pos < 0.0 || spec.keyword_relative_pos > 1.0)
    throw std::invalid_argument("synthetic_corpus: keyword_relative_pos must be in [0, 1]");
  if (spec.length < 1 || spec.num_examples < 1) throw std::invalid_argument("synthetic_corpus: bad sizes");
  const int fillers = filler_count(spec);

  Rng rng(seed);
  RawCorpus corpus;
  const int base = static_cast<int>(std::floor(spec.keyword_relative_pos * (spec.length - 1)));
  const int jitter = static_cast<int>(std::floor(spec.jitter_fraction * spec.length));
  for (int n = 0; n < spec.num_examples; ++n) {
    RawExample e;
    e.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
    e.tokens.reserve(static_cast<std::size_t>(spec.length));
    for (int t = 0; t < spec.length; ++t)
      e.tokens.push_back(filler_token(static_cast<int>(rng.below(static_cast<std::uint64_t>(fillers)))));
    int pos = base;
    if (jitter > 0) pos += rng.uniform_int(-jitter, jitter);
    pos = std::clamp(pos, 0, spec.length - 1);
    e.tokens[static_cast<std::size_t>(pos)] = keyword_token(e.label);
    corpus.examples.push_back(std::move(e));
  }
  return corpus;
}

DistractorPool synthetic_distractors(const SyntheticSpec& spec, int num_sentences, std::uint64_t seed) {
  const int fillers = filler_count(spec);
  Rng rng(seed);
  DistractorPool pool;
  for (int s = 0; s < num_sentences; ++s) {
    const int len = rng.uniform_int(6, 14);
    std::vector<std::string> sentence;
    sentence.reserve(static_cast<std::size_t>(len));
    for (int t = 0; t < len; ++t)
      sentence.push_back(filler_token(static_cast<int>(rng.below(static_cast<std::uint64_t>(fillers)))));
    pool.sentences.push_back(std::move(sentence));
  }
  return pool;
}

}  // namespace rnnpool
