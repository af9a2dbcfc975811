#pragma once

#include <map>
#include <string>
#include <vector>

#include "rnnpool/lstm.hpp"

namespace rnnpool {

inline constexpr int kProfileLength = 100;

// ||dL/dh_t|| over the concatenated (2*hidden) state, per example, valid
// positions only. Requires backward() to have run on the output's tape.
std::vector<std::vector<double>> capture_grad_norms(const BiLstmOutput& out);

// Samples source coordinate j*(n-1)/(target_len-1) for j = 0..target_len-1
// with linear interpolation; a single value broadcasts.
std::vector<double> lin_interp(const std::vector<double>& values, int target_len = kProfileLength);

struct RatioResult {
  double ratio = 0.0;
  bool degenerate = false;  // left-end norm was zero
};

// ||dL/dh_mid|| / ||dL/dh_end|| on raw (pre-interpolation) positions; the
// middle is floor((n-1)/2) and the end is the left end, position 0.
RatioResult vanishing_ratio(const std::vector<double>& norms);

struct GradientProfile {
  std::vector<double> norms;  // length kProfileLength
  long example_count = 0;
};

class ProfileAccumulator {
 public:
  void add(const std::vector<double>& raw_norms);  // interpolates, then accumulates
  void merge(const ProfileAccumulator& other);
  GradientProfile mean() const;  // average, then log-scale at plot time
  long count() const { return count_; }

 private:
  std::vector<double> sums_ = std::vector<double>(kProfileLength, 0.0);
  long count_ = 0;
};

struct RatioEntry {
  long batch_index = 0;
  long examples_seen = 0;
  double ratio = 0.0;
  bool degenerate = false;
  double train_acc = 0.0;  // running-window training accuracy
  double valid_acc = 0.0;  // last completed validation pass (-1 before the first)
};

// `batch_index,examples_seen,ratio,train_acc,valid_acc`, one row per entry.
void write_ratio_csv(const std::string& path, const std::vector<RatioEntry>& series);
// 100 mean-norm columns plus `#key=value` metadata lines.
void write_profile_csv(const std::string& path, const GradientProfile& profile,
                       const std::map<std::string, std::string>& metadata);

}  // namespace rnnpool
