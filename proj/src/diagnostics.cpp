#include "rnnpool/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rnnpool {

std::vector<std::vector<double>> capture_grad_norms(const BiLstmOutput& out) {
  Tape* tape = out.h_fwd.front().tape;
  if (!tape->backward_run())
    throw std::logic_error("capture_grad_norms: backward has not run on this tape");

  const Eigen::Index batch = out.batch();
  std::vector<std::vector<double>> norms(static_cast<std::size_t>(batch));
  for (Eigen::Index i = 0; i < batch; ++i)
    norms[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(out.lengths[static_cast<std::size_t>(i)]));

  for (Eigen::Index t = 0; t < out.positions(); ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Matrix& gf = out.h_fwd[ti].grad();
    const Matrix& gb = out.h_bwd[ti].grad();
    for (Eigen::Index i = 0; i < batch; ++i) {
      if (out.mask(i, t) <= 0.0) continue;
      norms[static_cast<std::size_t>(i)].push_back(
          std::sqrt(gf.row(i).squaredNorm() + gb.row(i).squaredNorm()));
    }
  }
  return norms;
}

std::vector<double> lin_interp(const std::vector<double>& values, int target_len) {
  if (values.empty()) throw std::invalid_argument("lin_interp: empty input");
  if (target_len < 1) throw std::invalid_argument("lin_interp: target length must be >= 1");
  const std::size_t n = values.size();
  std::vector<double> out(static_cast<std::size_t>(target_len));
  if (n == 1) {
    std::fill(out.begin(), out.end(), values[0]);
    return out;
  }
  for (int j = 0; j < target_len; ++j) {
    const double pos = static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    out[static_cast<std::size_t>(j)] = values[lo] + frac * (values[hi] - values[lo]);
  }
  return out;
}

RatioResult vanishing_ratio(const std::vector<double>& norms) {
  if (norms.size() < 2) throw std::invalid_argument("vanishing_ratio: need at least 2 positions");
  const std::size_t mid = (norms.size() - 1) / 2;
  RatioResult r;
  if (norms[0] == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.ratio = norms[mid] / norms[0];
  return r;
}

void ProfileAccumulator::add(const std::vector<double>& raw_norms) {
  const std::vector<double> interp = lin_interp(raw_norms, kProfileLength);
  for (int j = 0; j < kProfileLength; ++j) sums_[static_cast<std::size_t>(j)] += interp[static_cast<std::size_t>(j)];
  ++count_;
}

void ProfileAccumulator::merge(const ProfileAccumulator& other) {
  for (int j = 0; j < kProfileLength; ++j) sums_[static_cast<std::size_t>(j)] += other.sums_[static_cast<std::size_t>(j)];
  count_ += other.count_;
}

GradientProfile ProfileAccumulator::mean() const {
  GradientProfile profile;
  profile.example_count = count_;
  profile.norms.resize(kProfileLength, 0.0);
  if (count_ == 0) return profile;
  for (int j = 0; j < kProfileLength; ++j)
    profile.norms[static_cast<std::size_t>(j)] = sums_[static_cast<std::size_t>(j)] / static_cast<double>(count_);
  return profile;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_ratio_csv(const std::string& path, const std::vector<RatioEntry>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_ratio_csv: cannot open " + path + " for writing");
  out << "batch_index,examples_seen,ratio,train_acc,valid_acc\n";
  for (const RatioEntry& e : series) {
    out << e.batch_index << ',' << e.examples_seen << ','
        << (e.degenerate ? "nan" : format_double(e.ratio)) << ',' << format_double(e.train_acc) << ','
        << format_double(e.valid_acc) << '\n';
  }
}

void write_profile_csv(const std::string& path, const GradientProfile& profile,
                       const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_profile_csv: cannot open " + path + " for writing");
  for (const auto& [key, value] : metadata) out << '#' << key << '=' << value << '\n';
  out << "#examples=" << profile.example_count << '\n';
  for (std::size_t j = 0; j < profile.norms.size(); ++j) {
    if (j) out << ',';
    out << format_double(profile.norms[j]);
  }
  out << '\n';
}

}  // namespace rnnpool
