#include "rnnpool/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rnnpool {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> items;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) items.push_back(cur);
  }
  return items;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected unsigned integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> kv;
  kv["train_path"] = train_path;
  kv["valid_path"] = valid_path;
  kv["test_path"] = test_path;
  kv["distractor_path"] = distractor_path;
  kv["embeddings_path"] = embeddings_path;
  kv["min_len"] = min_len ? std::to_string(*min_len) : "";
  kv["max_len"] = max_len ? std::to_string(*max_len) : "";
  kv["vocab_cap"] = std::to_string(vocab_cap);

  std::string kinds;
  for (PoolingKind k : pooling) kinds += (kinds.empty() ? "" : ",") + to_string(k);
  kv["pooling"] = kinds;
  std::string seed_list;
  for (std::uint64_t s : seeds) seed_list += (seed_list.empty() ? "" : ",") + std::to_string(s);
  kv["seeds"] = seed_list;

  kv["embed_dim"] = std::to_string(embed_dim);
  kv["hidden_dim"] = std::to_string(hidden_dim);
  kv["lr"] = fmt(lr);
  kv["batch_size"] = std::to_string(batch_size);
  kv["epochs"] = std::to_string(epochs);
  kv["weight_decay"] = fmt(weight_decay);
  kv["forget_bias"] = forget_bias == ForgetBias::High ? "high" : "low";
  kv["stop_after_threshold"] = stop_after_threshold ? "true" : "false";
  kv["ratio_log_every"] = std::to_string(ratio_log_every);
  kv["profile_examples"] = std::to_string(profile_examples);
  kv["out_dir"] = out_dir;

  kv["perturb_position"] = to_string(perturb_position);
  kv["perturb_fraction"] = fmt(perturb_fraction);
  kv["perturb_seed"] = std::to_string(perturb_seed);

  kv["checkpoint_dir"] = checkpoint_dir;
  kv["nwi_k"] = std::to_string(nwi_k);
  kv["nwi_min_len"] = nwi_min_len ? std::to_string(*nwi_min_len) : "";
  kv["nwi_max_len"] = nwi_max_len ? std::to_string(*nwi_max_len) : "";
  kv["nwi_max_examples"] = std::to_string(nwi_max_examples);

  std::string fractions;
  for (double f : sweep_fractions) fractions += (fractions.empty() ? "" : ",") + fmt(f);
  kv["sweep_fractions"] = fractions;
  std::string positions;
  for (KeepPosition p : sweep_positions) positions += (positions.empty() ? "" : ",") + to_string(p);
  kv["sweep_positions"] = positions;

  kv["synth_train"] = std::to_string(synth_train);
  kv["synth_valid"] = std::to_string(synth_valid);
  kv["synth_test"] = std::to_string(synth_test);
  kv["synth_length"] = std::to_string(synth_length);
  kv["synth_keyword_pos"] = fmt(synth_keyword_pos);
  kv["synth_classes"] = std::to_string(synth_classes);
  kv["synth_vocab"] = std::to_string(synth_vocab);
  kv["synth_distractor_sentences"] = std::to_string(synth_distractor_sentences);
  kv["synth_seed"] = std::to_string(synth_seed);
  return kv;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    try {
      if (key == "train_path") config.train_path = value;
      else if (key == "valid_path") config.valid_path = value;
      else if (key == "test_path") config.test_path = value;
      else if (key == "distractor_path") config.distractor_path = value;
      else if (key == "embeddings_path") config.embeddings_path = value;
      else if (key == "min_len") config.min_len = parse_int(key, value);
      else if (key == "max_len") config.max_len = parse_int(key, value);
      else if (key == "vocab_cap") config.vocab_cap = parse_int(key, value);
      else if (key == "pooling") {
        config.pooling.clear();
        for (const std::string& item : split_list(value)) config.pooling.push_back(pooling_from_string(item));
        if (config.pooling.empty()) throw ConfigError("config key 'pooling': empty list");
      } else if (key == "seeds") {
        config.seeds.clear();
        for (const std::string& item : split_list(value)) config.seeds.push_back(parse_u64(key, item));
        if (config.seeds.empty()) throw ConfigError("config key 'seeds': empty list");
      } else if (key == "embed_dim") config.embed_dim = parse_int(key, value);
      else if (key == "hidden_dim") config.hidden_dim = parse_int(key, value);
      else if (key == "lr") config.lr = parse_double(key, value);
      else if (key == "batch_size") config.batch_size = parse_int(key, value);
      else if (key == "epochs") config.epochs = parse_int(key, value);
      else if (key == "weight_decay") config.weight_decay = parse_double(key, value);
      else if (key == "forget_bias") {
        if (value == "high") config.forget_bias = ForgetBias::High;
        else if (value == "low") config.forget_bias = ForgetBias::Low;
        else throw ConfigError("config key 'forget_bias': expected high|low, got '" + value + "'");
      } else if (key == "stop_after_threshold") config.stop_after_threshold = parse_bool(key, value);
      else if (key == "ratio_log_every") config.ratio_log_every = parse_int(key, value);
      else if (key == "profile_examples") config.profile_examples = parse_int(key, value);
      else if (key == "out_dir") config.out_dir = value;
      else if (key == "perturb_position") config.perturb_position = keep_position_from_string(value);
      else if (key == "perturb_fraction") config.perturb_fraction = parse_double(key, value);
      else if (key == "perturb_seed") config.perturb_seed = parse_u64(key, value);
      else if (key == "checkpoint_dir") config.checkpoint_dir = value;
      else if (key == "nwi_k") config.nwi_k = parse_int(key, value);
      else if (key == "nwi_min_len") config.nwi_min_len = parse_int(key, value);
      else if (key == "nwi_max_len") config.nwi_max_len = parse_int(key, value);
      else if (key == "nwi_max_examples") config.nwi_max_examples = parse_int(key, value);
      else if (key == "sweep_fractions") {
        config.sweep_fractions.clear();
        for (const std::string& item : split_list(value)) config.sweep_fractions.push_back(parse_double(key, item));
      } else if (key == "sweep_positions") {
        config.sweep_positions.clear();
        for (const std::string& item : split_list(value))
          config.sweep_positions.push_back(keep_position_from_string(item));
      } else if (key == "synth_train") config.synth_train = parse_int(key, value);
      else if (key == "synth_valid") config.synth_valid = parse_int(key, value);
      else if (key == "synth_test") config.synth_test = parse_int(key, value);
      else if (key == "synth_length") config.synth_length = parse_int(key, value);
      else if (key == "synth_keyword_pos") config.synth_keyword_pos = parse_double(key, value);
      else if (key == "synth_classes") config.synth_classes = parse_int(key, value);
      else if (key == "synth_vocab") config.synth_vocab = parse_int(key, value);
      else if (key == "synth_distractor_sentences") config.synth_distractor_sentences = parse_int(key, value);
      else if (key == "synth_seed") config.synth_seed = parse_u64(key, value);
      else throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }

  if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.embed_dim < 1 || config.hidden_dim < 1) throw ConfigError("model dims must be >= 1");
  if (config.lr <= 0.0) throw ConfigError("lr must be > 0");
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

}  // namespace rnnpool
