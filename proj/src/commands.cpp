#include "rnnpool/commands.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "rnnpool/artifacts.hpp"
#include "rnnpool/train.hpp"

namespace fs = std::filesystem;

namespace rnnpool {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void apply_overrides(ExperimentConfig& config, const CommandOptions& options) {
  if (!options.out_dir_override.empty()) config.out_dir = options.out_dir_override;
  if (options.seed_override) config.seeds = {*options.seed_override};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

RawCorpus load_corpus_file(const ExperimentConfig& config, const std::string& path) {
  RawCorpus raw = load_tsv(path);
  if (config.min_len || config.max_len) raw = filter_by_length(raw, config.min_len, config.max_len);
  return raw;
}

ArtifactEntry hash_artifact(const fs::path& run_dir, const std::string& name) {
  const fs::path path = run_dir / name;
  return {name, static_cast<std::uint64_t>(fs::file_size(path)), hex64(fnv1a64_file(path.string()))};
}

void atomic_save_tsv(const std::string& path, const RawCorpus& corpus) {
  save_tsv(path + ".tmp", corpus);
  fs::rename(path + ".tmp", path);
}

std::string render_train_report(const std::map<std::string, std::string>& echo,
                                const TrainReport& report, double test_acc, bool have_test) {
  std::ostringstream out;
  out << "## config\n";
  for (const auto& [key, value] : echo) out << key << " = " << value << '\n';

  out << "\n## epochs\nepoch,train_loss,train_acc,valid_acc\n";
  for (std::size_t e = 0; e < report.epochs.size(); ++e)
    out << e + 1 << ',' << fmt(report.epochs[e].train_loss) << ',' << fmt(report.epochs[e].train_acc)
        << ',' << fmt(report.epochs[e].valid_acc) << '\n';

  out << "\n## ratio_series\nbatch_index,examples_seen,ratio,train_acc,valid_acc\n";
  for (const RatioEntry& r : report.ratio_series)
    out << r.batch_index << ',' << r.examples_seen << ',' << (r.degenerate ? "nan" : fmt(r.ratio))
        << ',' << fmt(r.train_acc) << ',' << fmt(r.valid_acc) << '\n';

  out << "\n## threshold\n";
  out << "# running-window training accuracy, window = one epoch of batches\n";
  out << "threshold_batch = " << report.threshold_batch << '\n';
  out << "threshold_examples = " << report.threshold_examples << '\n';
  out << "threshold_ratio = " << (report.threshold_degenerate ? "nan" : fmt(report.threshold_ratio)) << '\n';

  out << "\n## result\n";
  out << "best_epoch = " << report.best_epoch + 1 << '\n';
  out << "best_valid_acc = " << fmt(report.best_valid_acc) << '\n';
  if (have_test) out << "test_acc = " << fmt(test_acc) << '\n';
  out << "total_batches = " << report.total_batches << '\n';
  return out.str();
}

struct TrainRunSpec {
  PoolingKind pooling;
  std::uint64_t seed;
};

struct PreparedData {
  Vocabulary vocab;
  Corpus train;
  Corpus valid;
  Corpus test;  // may be empty
  bool have_test = false;
  int num_classes = 0;
};

PreparedData prepare_data(const ExperimentConfig& config) {
  require(!config.train_path.empty(), "train requires train_path");
  RawCorpus raw_train = load_corpus_file(config, config.train_path);

  PreparedData data;
  data.vocab = Vocabulary::build(raw_train, static_cast<std::size_t>(config.vocab_cap));
  data.num_classes = raw_train.num_classes();

  if (!config.valid_path.empty()) {
    RawCorpus raw_valid = load_corpus_file(config, config.valid_path);
    data.num_classes = std::max(data.num_classes, raw_valid.num_classes());
    data.train = encode_corpus(raw_train, data.vocab, data.num_classes);
    data.valid = encode_corpus(raw_valid, data.vocab, data.num_classes);
  } else {
    // no validation file: hold out 10% of train under the first seed
    Corpus full = encode_corpus(raw_train, data.vocab, data.num_classes);
    auto [train, valid] = split_validation(full, 0.1, config.seeds.front());
    data.train = std::move(train);
    data.valid = std::move(valid);
  }

  if (!config.test_path.empty()) {
    RawCorpus raw_test = load_corpus_file(config, config.test_path);
    data.num_classes = std::max(data.num_classes, raw_test.num_classes());
    data.test = encode_corpus(raw_test, data.vocab, data.num_classes);
    data.train.num_classes = data.valid.num_classes = data.num_classes;
    data.have_test = true;
  }
  return data;
}

std::string run_dir_name(PoolingKind kind, std::uint64_t seed) {
  return to_string(kind) + "_s" + std::to_string(seed);
}

void execute_train_run(const ExperimentConfig& config, const PreparedData& data,
                       const TrainRunSpec& run, const fs::path& run_dir) {
  fs::create_directories(run_dir);

  ModelConfig model_config;
  model_config.vocab_size = static_cast<Eigen::Index>(data.vocab.size());
  model_config.embed_dim = config.embed_dim;
  model_config.hidden_dim = config.hidden_dim;
  model_config.num_classes = data.num_classes;
  model_config.pooling = run.pooling;
  model_config.forget_bias = config.forget_bias;

  ClassifierModel model = config.embeddings_path.empty()
      ? ClassifierModel::init(model_config, run.seed)
      : ClassifierModel::init(model_config, run.seed,
                              load_pretrained_embeddings(config.embeddings_path, data.vocab,
                                                         config.embed_dim, run.seed)
                                  .matrix);

  TrainConfig train_config;
  train_config.embed_dim = config.embed_dim;
  train_config.hidden_dim = config.hidden_dim;
  train_config.lr = config.lr;
  train_config.batch_size = config.batch_size;
  train_config.epochs = config.epochs;
  train_config.seed = run.seed;
  train_config.forget_bias = config.forget_bias;
  train_config.weight_decay = config.weight_decay;
  train_config.stop_after_threshold = config.stop_after_threshold;
  train_config.ratio_log_every_examples = config.ratio_log_every;
  train_config.profile_example_cap = config.profile_examples;

  const TrainReport report = train_classifier(model, train_config, data.train, data.valid);
  const double test_acc = data.have_test ? evaluate_accuracy(model, data.test, config.batch_size) : 0.0;

  std::map<std::string, std::string> echo = config.echo();
  echo["seeds"] = std::to_string(run.seed);
  echo["pooling"] = to_string(run.pooling);
  echo["setting"] = fs::path(config.train_path).stem().string();

  atomic_write_text((run_dir / "report.txt").string(), render_train_report(echo, report, test_acc, data.have_test));
  write_ratio_csv((run_dir / "ratio.csv.tmp").string(), report.ratio_series);
  fs::rename(run_dir / "ratio.csv.tmp", run_dir / "ratio.csv");
  write_profile_csv((run_dir / "profile.csv.tmp").string(), report.profile,
                    {{"model", to_string(run.pooling)}, {"seed", std::to_string(run.seed)}});
  fs::rename(run_dir / "profile.csv.tmp", run_dir / "profile.csv");
  save_checkpoint((run_dir / "checkpoint.bin.tmp").string(), model, data.vocab);
  fs::rename(run_dir / "checkpoint.bin.tmp", run_dir / "checkpoint.bin");

  Manifest manifest;
  manifest.command = "train";
  manifest.config = echo;
  manifest.metrics["best_valid_acc"] = fmt(report.best_valid_acc);
  manifest.metrics["best_epoch"] = std::to_string(report.best_epoch + 1);
  if (data.have_test) manifest.metrics["test_acc"] = fmt(test_acc);
  manifest.metrics["threshold_batch"] = std::to_string(report.threshold_batch);
  manifest.metrics["threshold_ratio"] = report.threshold_degenerate ? "nan" : fmt(report.threshold_ratio);
  manifest.metrics["total_batches"] = std::to_string(report.total_batches);
  for (const char* name : {"report.txt", "ratio.csv", "profile.csv", "checkpoint.bin"})
    manifest.artifacts.push_back(hash_artifact(run_dir, name));
  write_manifest(run_dir.string(), manifest);
}

}  // namespace

void cmd_train(ExperimentConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  const PreparedData data = prepare_data(config);
  fs::create_directories(config.out_dir);

  std::vector<TrainRunSpec> runs;
  for (PoolingKind kind : config.pooling)
    for (std::uint64_t seed : config.seeds) runs.push_back({kind, seed});

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::vector<std::string> failures;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      const TrainRunSpec& run = runs[i];
      const fs::path run_dir = fs::path(config.out_dir) / run_dir_name(run.pooling, run.seed);
      try {
        execute_train_run(config, data, run, run_dir);
      } catch (const std::exception& ex) {
        write_failure_marker(run_dir.string(), ex.what());
        const std::lock_guard<std::mutex> lock(failure_mutex);
        failures.push_back(run_dir.filename().string() + ": " + ex.what());
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs && j < static_cast<int>(runs.size()); ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (!failures.empty()) {
    std::string message = "train: " + std::to_string(failures.size()) + " run(s) failed:";
    for (const std::string& f : failures) message += "\n  " + f;
    throw std::runtime_error(message);
  }
}

void cmd_synth(ExperimentConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  fs::create_directories(config.out_dir);

  SyntheticSpec spec;
  spec.length = config.synth_length;
  spec.keyword_relative_pos = config.synth_keyword_pos;
  spec.num_classes = config.synth_classes;
  spec.vocab_size = config.synth_vocab;

  const fs::path out = config.out_dir;
  struct Split {
    const char* name;
    int count;
    std::uint64_t seed_offset;
  };
  const Split splits[] = {{"train.tsv", config.synth_train, 0},
                          {"valid.tsv", config.synth_valid, 1},
                          {"test.tsv", config.synth_test, 2}};
  Manifest manifest;
  manifest.command = "synth";
  manifest.config = config.echo();
  for (const Split& split : splits) {
    if (split.count <= 0) continue;
    SyntheticSpec s = spec;
    s.num_examples = split.count;
    atomic_save_tsv((out / split.name).string(), synthetic_corpus(s, config.synth_seed + split.seed_offset));
    manifest.artifacts.push_back(hash_artifact(out, split.name));
  }
  const DistractorPool pool =
      synthetic_distractors(spec, config.synth_distractor_sentences, config.synth_seed + 3);
  save_distractor_pool((out / "distractors.txt.tmp").string(), pool);
  fs::rename(out / "distractors.txt.tmp", out / "distractors.txt");
  manifest.artifacts.push_back(hash_artifact(out, "distractors.txt"));
  write_manifest(out.string(), manifest);
}

void cmd_perturb(ExperimentConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  require(!config.distractor_path.empty(), "perturb requires distractor_path");
  const bool any = !config.train_path.empty() || !config.valid_path.empty() || !config.test_path.empty();
  require(any, "perturb requires at least one of train_path/valid_path/test_path");
  fs::create_directories(config.out_dir);

  const DistractorPool pool = DistractorPool::load(config.distractor_path);
  PerturbSpec spec{config.perturb_position, config.perturb_fraction};

  Manifest manifest;
  manifest.command = "perturb";
  manifest.config = config.echo();

  const std::string inputs[] = {config.train_path, config.valid_path, config.test_path};
  std::uint64_t offset = 0;
  for (const std::string& input : inputs) {
    ++offset;
    if (input.empty()) continue;
    const RawCorpus source = load_corpus_file(config, input);
    const std::uint64_t seed = config.perturb_seed + offset;
    const RawCorpus perturbed = build_perturbed_dataset(source, spec, pool, seed);

    const std::string stem = fs::path(input).stem().string();
    const std::string name = stem + "_perturbed.tsv";
    atomic_save_tsv((fs::path(config.out_dir) / name).string(), perturbed);

    nlohmann::json provenance = {{"source", input},
                                 {"distractor_path", config.distractor_path},
                                 {"position", to_string(spec.position)},
                                 {"fraction", spec.wiki_fraction},
                                 {"seed", seed}};
    const std::string prov_name = stem + "_perturbed.provenance.json";
    atomic_write_text((fs::path(config.out_dir) / prov_name).string(), provenance.dump(2) + "\n");
    manifest.artifacts.push_back(hash_artifact(config.out_dir, name));
    manifest.artifacts.push_back(hash_artifact(config.out_dir, prov_name));
  }
  write_manifest(config.out_dir, manifest);
}

namespace {

std::vector<fs::path> checkpoint_run_dirs(const std::string& checkpoint_dir) {
  require(fs::is_directory(checkpoint_dir), "checkpoint_dir " + checkpoint_dir + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(checkpoint_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "checkpoint.bin") &&
        !has_failure_marker(entry.path().string()))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  require(!dirs.empty(), "checkpoint_dir " + checkpoint_dir + " holds no finished runs");
  return dirs;
}

}  // namespace

void cmd_sweep(ExperimentConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  require(!config.checkpoint_dir.empty(), "sweep requires checkpoint_dir");
  require(!config.test_path.empty(), "sweep requires test_path");
  require(!config.distractor_path.empty(), "sweep requires distractor_path");
  fs::create_directories(config.out_dir);

  const RawCorpus raw_test = load_corpus_file(config, config.test_path);
  const DistractorPool pool = DistractorPool::load(config.distractor_path);

  // one perturbed copy per (position, fraction), shared by every model
  struct Variant {
    KeepPosition position;
    double fraction;
    RawCorpus corpus;
  };
  std::vector<Variant> variants;
  std::uint64_t offset = 0;
  for (KeepPosition position : config.sweep_positions) {
    for (double fraction : config.sweep_fractions) {
      ++offset;
      Variant v{position, fraction, {}};
      v.corpus = fraction > 0.0
          ? build_perturbed_dataset(raw_test, PerturbSpec{position, fraction}, pool,
                                    config.perturb_seed + offset)
          : raw_test;
      variants.push_back(std::move(v));
    }
  }

  std::ostringstream csv;
  csv << "pooling,seed,position,fraction,accuracy\n";
  for (const fs::path& run_dir : checkpoint_run_dirs(config.checkpoint_dir)) {
    LoadedModel loaded = load_checkpoint((run_dir / "checkpoint.bin").string());
    const Manifest manifest = read_manifest(run_dir.string());
    const std::string pooling = to_string(loaded.model.config.pooling);
    const std::string seed = manifest.config.count("seeds") ? manifest.config.at("seeds") : "?";
    for (const Variant& v : variants) {
      const Corpus encoded = encode_corpus(v.corpus, loaded.vocab, loaded.model.config.num_classes);
      const double acc = evaluate_accuracy(loaded.model, encoded, config.batch_size);
      csv << pooling << ',' << seed << ',' << to_string(v.position) << ',' << fmt(v.fraction) << ','
          << fmt(acc) << '\n';
    }
  }

  atomic_write_text((fs::path(config.out_dir) / "sweep.csv").string(), csv.str());
  Manifest manifest;
  manifest.command = "sweep";
  manifest.config = config.echo();
  manifest.artifacts.push_back(hash_artifact(config.out_dir, "sweep.csv"));
  write_manifest(config.out_dir, manifest);
}

void cmd_nwi(ExperimentConfig config, const CommandOptions& options) {
  apply_overrides(config, options);
  require(!config.checkpoint_dir.empty(), "nwi requires checkpoint_dir");
  require(!config.test_path.empty(), "nwi requires test_path");
  fs::create_directories(config.out_dir);

  const RawCorpus raw_test = load_corpus_file(config, config.test_path);

  NwiConfig nwi_config;
  nwi_config.k = config.nwi_k;
  if (config.nwi_min_len) nwi_config.min_len = *config.nwi_min_len;
  if (config.nwi_max_len) nwi_config.max_len = *config.nwi_max_len;
  nwi_config.max_examples = config.nwi_max_examples;

  Manifest manifest;
  manifest.command = "nwi";
  manifest.config = config.echo();

  for (const fs::path& run_dir : checkpoint_run_dirs(config.checkpoint_dir)) {
    LoadedModel loaded = load_checkpoint((run_dir / "checkpoint.bin").string());
    const Corpus test = encode_corpus(raw_test, loaded.vocab, loaded.model.config.num_classes);
    const NwiProfile profile = nwi_evaluate(loaded.model, test, nwi_config);

    const Manifest run_manifest = read_manifest(run_dir.string());
    const std::string seed = run_manifest.config.count("seeds") ? run_manifest.config.at("seeds") : "0";
    const std::string name = "nwi_" + to_string(loaded.model.config.pooling) + "_s" + seed + ".csv";

    std::ostringstream out;
    out << "#model=" << to_string(loaded.model.config.pooling) << '\n';
    out << "#k=" << nwi_config.k << '\n';
    out << "#bucket=" << nwi_config.min_len << '-' << nwi_config.max_len << '\n';
    out << "#examples_used=" << profile.examples_used << '\n';
    for (std::size_t j = 0; j < profile.curve.size(); ++j) {
      if (j) out << ',';
      out << fmt(profile.curve[j]);
    }
    out << '\n';
    atomic_write_text((fs::path(config.out_dir) / name).string(), out.str());
    manifest.artifacts.push_back(hash_artifact(config.out_dir, name));
  }
  write_manifest(config.out_dir, manifest);
}

void cmd_report(const std::string& artifact_dir, const std::string& metric, std::string* rendered) {
  const std::vector<ReportCell> cells = aggregate_runs(artifact_dir, metric);
  const std::string table = render_report_table(cells, metric);
  if (rendered) *rendered = table;
  std::cout << table;
  atomic_write_text((fs::path(artifact_dir) / "summary.txt").string(), table);
}

}  // namespace rnnpool
