#include "rnnpool/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "rnnpool/diagnostics.hpp"

namespace rnnpool {

KeepPosition keep_position_from_string(const std::string& s) {
  if (s == "left") return KeepPosition::Left;
  if (s == "mid") return KeepPosition::Mid;
  if (s == "right") return KeepPosition::Right;
  throw std::invalid_argument("unknown position '" + s + "' (expected left|mid|right)");
}

std::string to_string(KeepPosition p) {
  switch (p) {
    case KeepPosition::Left: return "left";
    case KeepPosition::Mid: return "mid";
    case KeepPosition::Right: return "right";
  }
  return "?";
}

std::vector<std::string> append_distractor(const std::vector<std::string>& tokens,
                                           const PerturbSpec& spec, const DistractorPool& pool,
                                           Rng& rng) {
  if (tokens.empty()) throw std::invalid_argument("append_distractor: empty original");
  if (spec.wiki_fraction < 0.0 || spec.wiki_fraction >= 1.0)
    throw std::invalid_argument("append_distractor: fraction must lie in [0, 1)");
  if (pool.sentences.empty()) throw std::invalid_argument("append_distractor: empty distractor pool");

  const auto n = static_cast<long>(tokens.size());
  const long total = std::lround(static_cast<double>(n) / (1.0 - spec.wiki_fraction));
  const long needed = total - n;
  if (needed <= 0) return tokens;

  std::vector<std::string> filler;
  filler.reserve(static_cast<std::size_t>(needed));
  while (static_cast<long>(filler.size()) < needed) {
    const auto& sentence = pool.sentences[rng.below(pool.sentences.size())];
    for (const std::string& t : sentence) {
      filler.push_back(t);
      if (static_cast<long>(filler.size()) == needed) break;
    }
  }

  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(total));
  switch (spec.position) {
    case KeepPosition::Left:
      out.insert(out.end(), tokens.begin(), tokens.end());
      out.insert(out.end(), filler.begin(), filler.end());
      break;
    case KeepPosition::Right:
      out.insert(out.end(), filler.begin(), filler.end());
      out.insert(out.end(), tokens.begin(), tokens.end());
      break;
    case KeepPosition::Mid: {
      const long left = (needed + 1) / 2;
      out.insert(out.end(), filler.begin(), filler.begin() + left);
      out.insert(out.end(), tokens.begin(), tokens.end());
      out.insert(out.end(), filler.begin() + left, filler.end());
      break;
    }
  }
  return out;
}

RawCorpus build_perturbed_dataset(const RawCorpus& corpus, const PerturbSpec& spec,
                                  const DistractorPool& pool, std::uint64_t seed) {
  if (corpus.examples.empty()) throw std::invalid_argument("build_perturbed_dataset: empty corpus");
  Rng rng(seed);
  RawCorpus out;
  out.examples.reserve(corpus.examples.size());
  for (const RawExample& e : corpus.examples)
    out.examples.push_back({append_distractor(e.tokens, spec, pool, rng), e.label});
  return out;
}

std::vector<double> occlusion_deltas(ClassifierModel& model, const std::vector<int>& ids, int label,
                                     int k, int unk_id, int batch_size) {
  if (k < 1) throw std::invalid_argument("occlusion_deltas: k must be >= 1");
  const auto n = static_cast<int>(ids.size());
  const int windows = n / k;

  Corpus variants;
  variants.num_classes = model.config.num_classes;
  variants.examples.push_back({ids, label});  // the clean run rides in the same batches
  for (int t = 0; t < windows; ++t) {
    Example occluded{ids, label};
    for (int j = t * k; j < t * k + k; ++j) occluded.ids[static_cast<std::size_t>(j)] = unk_id;
    variants.examples.push_back(std::move(occluded));
  }

  std::vector<double> log_probs;
  log_probs.reserve(variants.size());
  std::vector<int> order(variants.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (const Batch& batch : pad_batches(variants, order, batch_size)) {
    const Eigen::VectorXd lp = label_log_probs(model, batch);
    for (Eigen::Index i = 0; i < lp.size(); ++i) log_probs.push_back(lp(i));
  }

  std::vector<double> deltas(static_cast<std::size_t>(windows));
  for (int t = 0; t < windows; ++t)
    deltas[static_cast<std::size_t>(t)] = std::abs(log_probs[static_cast<std::size_t>(t) + 1] - log_probs[0]);
  return deltas;
}

NwiProfile nwi_evaluate(ClassifierModel& model, const Corpus& test, const NwiConfig& config) {
  if (config.k < 1) throw std::invalid_argument("nwi_evaluate: k must be >= 1");

  NwiProfile profile;
  profile.curve.assign(kProfileLength, 0.0);
  for (const Example& e : test.examples) {
    const auto len = static_cast<int>(e.ids.size());
    if (len < config.min_len || len > config.max_len || len < config.k) continue;
    if (config.max_examples > 0 && profile.examples_used >= config.max_examples) break;

    std::vector<double> deltas = occlusion_deltas(model, e.ids, e.label, config.k, config.unk_id);
    const double peak = *std::max_element(deltas.begin(), deltas.end());
    if (peak > 0.0) {
      for (double& d : deltas) d /= peak;
      const double low = *std::min_element(deltas.begin(), deltas.end());
      for (double& d : deltas) d -= low;
    }  // all-zero deltas contribute a zero curve

    const std::vector<double> interp = lin_interp(deltas, kProfileLength);
    for (int j = 0; j < kProfileLength; ++j) profile.curve[static_cast<std::size_t>(j)] += interp[static_cast<std::size_t>(j)];
    ++profile.examples_used;
  }

  if (profile.examples_used == 0)
    throw std::runtime_error("nwi_evaluate: length bucket [" + std::to_string(config.min_len) + ", " +
                             std::to_string(config.max_len) + "] selects no examples");
  for (double& v : profile.curve) v /= static_cast<double>(profile.examples_used);
  return profile;
}

}  // namespace rnnpool
