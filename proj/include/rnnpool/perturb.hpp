#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rnnpool/model.hpp"
#include "rnnpool/rng.hpp"

namespace rnnpool {

// Where the ORIGINAL text sits in the perturbed example.
enum class KeepPosition { Left, Mid, Right };

KeepPosition keep_position_from_string(const std::string& s);
std::string to_string(KeepPosition p);

struct PerturbSpec {
  KeepPosition position = KeepPosition::Mid;
  double wiki_fraction = 2.0 / 3.0;  // fraction of final tokens that are distractors
};

// Grows `tokens` to round(n / (1 - fraction)) tokens by appending contiguous
// sentence chunks from the pool; the original token run is preserved intact at
// the configured position. Mid splits the distractor mass ceil/floor.
std::vector<std::string> append_distractor(const std::vector<std::string>& tokens,
                                           const PerturbSpec& spec, const DistractorPool& pool,
                                           Rng& rng);

RawCorpus build_perturbed_dataset(const RawCorpus& corpus, const PerturbSpec& spec,
                                  const DistractorPool& pool, std::uint64_t seed);

struct NwiConfig {
  int k = 5;
  int min_len = 0;
  int max_len = std::numeric_limits<int>::max();
  int max_examples = 0;  // 0 = every example in the bucket
  int unk_id = Vocabulary::kUnk;
};

struct NwiProfile {
  std::vector<double> curve;  // length 100
  long examples_used = 0;
};

// |log P(y|s with window t occluded) - log P(y|s)| for t = 0..floor(n/k)-1.
// Forward-only; windows are batched.
std::vector<double> occlusion_deltas(ClassifierModel& model, const std::vector<int>& ids, int label,
                                     int k, int unk_id = Vocabulary::kUnk, int batch_size = 32);

// Per example: normalize deltas by their max, subtract the min of the
// normalized series, interpolate to 100 points; the profile averages the
// per-example curves. Examples whose deltas are all zero contribute a zero
// curve.
NwiProfile nwi_evaluate(ClassifierModel& model, const Corpus& test, const NwiConfig& config);

}  // namespace rnnpool
