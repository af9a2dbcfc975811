#include "rnnpool/model.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rnnpool/rng.hpp"

namespace rnnpool {

std::vector<Parameter*> ClassifierModel::parameters() {
  std::vector<Parameter*> params = {&embedding};
  for (Parameter* p : fwd.parameters()) params.push_back(p);
  for (Parameter* p : bwd.parameters()) params.push_back(p);
  if (config.pooling == PoolingKind::Attention) params.push_back(&query);
  params.push_back(&w_out);
  params.push_back(&b_out);
  return params;
}

ClassifierModel ClassifierModel::init(const ModelConfig& config, std::uint64_t seed) {
  return init(config, seed, random_embeddings(static_cast<std::size_t>(config.vocab_size),
                                              config.embed_dim, seed ^ 0x9e3779b97f4a7c15ULL)
                               .matrix);
}

ClassifierModel ClassifierModel::init(const ModelConfig& config, std::uint64_t seed,
                                      const Matrix& embedding_init) {
  if (config.vocab_size < 2) throw std::invalid_argument("ClassifierModel: vocab_size must cover PAD/UNK");
  if (embedding_init.rows() != config.vocab_size || embedding_init.cols() != config.embed_dim)
    throw std::invalid_argument("ClassifierModel: embedding matrix shape does not match config");

  ClassifierModel m;
  m.config = config;
  m.embedding = Parameter("embedding", config.vocab_size, config.embed_dim);
  m.embedding.value = embedding_init;
  m.fwd = init_lstm_params(config.embed_dim, config.hidden_dim, config.forget_bias, seed * 2 + 1, "fwd");
  m.bwd = init_lstm_params(config.embed_dim, config.hidden_dim, config.forget_bias, seed * 2 + 2, "bwd");

  Rng rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  const Eigen::Index twoh = 2 * config.hidden_dim;
  if (config.pooling == PoolingKind::Attention) {
    m.query = Parameter("attn.q", twoh, 1);
    const double qb = std::sqrt(6.0 / static_cast<double>(twoh + 1));
    for (Eigen::Index i = 0; i < twoh; ++i) m.query.value(i, 0) = rng.uniform(-qb, qb);
  }
  m.w_out = Parameter("out.w", twoh, config.num_classes);
  m.b_out = Parameter("out.b", config.num_classes, 1);
  const double ob = std::sqrt(6.0 / static_cast<double>(twoh + config.num_classes));
  for (Eigen::Index i = 0; i < twoh; ++i)
    for (Eigen::Index j = 0; j < config.num_classes; ++j) m.w_out.value(i, j) = rng.uniform(-ob, ob);
  return m;
}

ForwardResult model_forward(Tape& tape, ClassifierModel& model, const Batch& batch) {
  const Eigen::Index n = batch.ids.cols();
  std::vector<Tensor> embedded;
  embedded.reserve(static_cast<std::size_t>(n));
  std::vector<int> ids(static_cast<std::size_t>(batch.ids.rows()));
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index i = 0; i < batch.ids.rows(); ++i) ids[static_cast<std::size_t>(i)] = batch.ids(i, t);
    embedded.push_back(tape.embed_rows(model.embedding, ids));
  }

  ForwardResult result;
  result.encoder = bilstm_forward(tape, model.fwd, model.bwd, embedded, batch.mask);
  Tensor query;
  if (model.config.pooling == PoolingKind::Attention) query = tape.leaf(model.query);
  result.pooled = pool(result.encoder, model.config.pooling, query);
  result.logits = add_row_broadcast(matmul(result.pooled.s_emb, tape.leaf(model.w_out)), tape.leaf(model.b_out));
  return result;
}

LossResult forward_loss(Tape& tape, ClassifierModel& model, const Batch& batch) {
  for (int label : batch.labels)
    if (label < 0 || label >= model.config.num_classes)
      throw std::invalid_argument("forward_loss: label " + std::to_string(label) + " out of range");

  LossResult result;
  result.forward = model_forward(tape, model, batch);
  result.logits = result.forward.logits;
  Tensor picked = pick_cols(log_softmax_rows(result.logits), batch.labels);
  result.loss = scale(sum(picked), -1.0 / static_cast<double>(batch.labels.size()));
  return result;
}

Eigen::VectorXd label_log_probs(ClassifierModel& model, const Batch& batch) {
  Tape tape;
  ForwardResult fwd = model_forward(tape, model, batch);
  Tensor picked = pick_cols(log_softmax_rows(fwd.logits), batch.labels);
  return picked.value().col(0);
}

std::vector<int> predict(const Matrix& logits) {
  std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

double evaluate_accuracy(ClassifierModel& model, const Corpus& corpus, int batch_size) {
  if (corpus.examples.empty()) throw std::invalid_argument("evaluate_accuracy: empty corpus");
  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  long correct = 0;
  for (const Batch& batch : pad_batches(corpus, order, batch_size)) {
    Tape tape;
    ForwardResult fwd = model_forward(tape, model, batch);
    const std::vector<int> guesses = predict(fwd.logits.value());
    for (std::size_t i = 0; i < guesses.size(); ++i)
      if (guesses[i] == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.size());
}

// --- checkpoint io ----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'R', 'N', 'P', 'O', 'O', 'L', '0', '1'};

std::vector<std::pair<std::string, Parameter*>> named_tensors(ClassifierModel& model) {
  std::vector<std::pair<std::string, Parameter*>> out;
  for (Parameter* p : model.parameters()) out.emplace_back(p->name, p);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, ClassifierModel& model, const Vocabulary& vocab) {
  nlohmann::json header;
  header["meta"] = {
      {"pooling", to_string(model.config.pooling)},
      {"forget_bias", model.config.forget_bias == ForgetBias::High ? "high" : "low"},
      {"vocab_size", model.config.vocab_size},
      {"embed_dim", model.config.embed_dim},
      {"hidden_dim", model.config.hidden_dim},
      {"num_classes", model.config.num_classes},
      {"vocab", vocab.tokens()},
  };
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  auto named = named_tensors(model);
  for (auto& [name, p] : named) {
    tensors.push_back({{"name", name},
                       {"rows", p->rows()},
                       {"cols", p->cols()},
                       {"offset", offset}});
    offset += static_cast<std::uint64_t>(p->value.size()) * sizeof(double);
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (auto& [name, p] : named) {
    // column-major, matching Eigen storage
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write to " + path + " failed");
}

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint");
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  const nlohmann::json header = nlohmann::json::parse(header_text);

  const auto& meta = header.at("meta");
  ModelConfig config;
  config.pooling = pooling_from_string(meta.at("pooling").get<std::string>());
  config.forget_bias = meta.at("forget_bias").get<std::string>() == "high" ? ForgetBias::High : ForgetBias::Low;
  config.vocab_size = meta.at("vocab_size").get<Eigen::Index>();
  config.embed_dim = meta.at("embed_dim").get<Eigen::Index>();
  config.hidden_dim = meta.at("hidden_dim").get<Eigen::Index>();
  config.num_classes = meta.at("num_classes").get<int>();

  LoadedModel loaded{ClassifierModel::init(config, 0),
                     Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>())};

  auto named = named_tensors(loaded.model);
  const std::streampos payload = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    Parameter* target = nullptr;
    for (auto& [n, p] : named)
      if (n == name) target = p;
    if (!target) throw std::runtime_error("load_checkpoint: unexpected tensor '" + name + "'");
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    if (rows != target->rows() || cols != target->cols())
      throw std::runtime_error("load_checkpoint: tensor '" + name + "' has unexpected shape");
    in.seekg(payload + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(target->value.data()),
            static_cast<std::streamsize>(target->value.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated payload for '" + name + "'");
  }
  return loaded;
}

}  // namespace rnnpool
