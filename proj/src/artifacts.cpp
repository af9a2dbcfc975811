#include "rnnpool/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace rnnpool {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    const auto got = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void atomic_write_text(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("atomic_write_text: cannot open " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("atomic_write_text: write to " + tmp + " failed");
  }
  fs::rename(tmp, path);
}

double ReportCell::mean() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

double ReportCell::stddev() const {
  if (values.size() < 2) return 0.0;
  const double m = mean();
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kFailureName = "FAILED";

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["metrics"] = m.metrics;
  nlohmann::json arts = nlohmann::json::array();
  for (const ArtifactEntry& a : m.artifacts)
    arts.push_back({{"name", a.name}, {"bytes", a.bytes}, {"fnv64", a.fnv64}});
  j["artifacts"] = arts;
  return j;
}

}  // namespace

void write_manifest(const std::string& run_dir, const Manifest& manifest) {
  atomic_write_text((fs::path(run_dir) / kManifestName).string(), to_json(manifest).dump(2) + "\n");
}

Manifest read_manifest(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / kManifestName;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  Manifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.metrics = j.at("metrics").get<std::map<std::string, std::string>>();
  for (const auto& a : j.at("artifacts"))
    m.artifacts.push_back({a.at("name").get<std::string>(), a.at("bytes").get<std::uint64_t>(),
                           a.at("fnv64").get<std::string>()});
  return m;
}

void verify_manifest(const std::string& run_dir, const Manifest& manifest) {
  for (const ArtifactEntry& a : manifest.artifacts) {
    const fs::path path = fs::path(run_dir) / a.name;
    if (!fs::exists(path))
      throw std::runtime_error("verify_manifest: " + run_dir + " is missing artifact " + a.name);
    const std::string hash = hex64(fnv1a64_file(path.string()));
    if (hash != a.fnv64)
      throw std::runtime_error("verify_manifest: artifact " + a.name + " in " + run_dir +
                               " hash mismatch (" + hash + " vs manifest " + a.fnv64 + ")");
  }
}

void write_failure_marker(const std::string& run_dir, const std::string& reason) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  atomic_write_text((fs::path(run_dir) / kFailureName).string(), reason + "\n");
}

bool has_failure_marker(const std::string& run_dir) {
  return fs::exists(fs::path(run_dir) / kFailureName);
}

std::vector<ReportCell> aggregate_runs(const std::string& artifact_dir, const std::string& metric) {
  if (!fs::is_directory(artifact_dir))
    throw std::runtime_error("aggregate_runs: " + artifact_dir + " is not a directory");

  struct Group {
    std::map<std::string, std::string> fingerprint;
    ReportCell cell;
    std::string first_run;
  };
  std::map<std::string, Group> groups;
  long manifests = 0;

  std::vector<fs::path> run_dirs;
  for (const auto& entry : fs::directory_iterator(artifact_dir))
    if (entry.is_directory() && fs::exists(entry.path() / kManifestName)) run_dirs.push_back(entry.path());
  std::sort(run_dirs.begin(), run_dirs.end());

  for (const fs::path& dir : run_dirs) {
    if (has_failure_marker(dir.string())) continue;
    const Manifest m = read_manifest(dir.string());
    verify_manifest(dir.string(), m);
    ++manifests;
    const auto it = m.metrics.find(metric);
    if (it == m.metrics.end()) continue;

    std::map<std::string, std::string> fingerprint = m.config;
    fingerprint.erase("seeds");
    fingerprint.erase("out_dir");
    const std::string pooling = fingerprint.count("pooling") ? fingerprint["pooling"] : "?";
    fingerprint.erase("pooling");
    std::string setting = fingerprint.count("setting") ? fingerprint["setting"] : "default";

    const std::string key = pooling + "|" + setting;
    auto& group = groups[key];
    if (group.cell.values.empty()) {
      group.fingerprint = fingerprint;
      group.cell.pooling = pooling;
      group.cell.setting = setting;
      group.first_run = dir.filename().string();
    } else if (group.fingerprint != fingerprint) {
      std::string conflicts;
      for (const auto& [k, v] : fingerprint) {
        const auto prev = group.fingerprint.find(k);
        if (prev == group.fingerprint.end() || prev->second != v)
          conflicts += (conflicts.empty() ? "" : ", ") + k;
      }
      for (const auto& [k, v] : group.fingerprint)
        if (!fingerprint.count(k)) conflicts += (conflicts.empty() ? "" : ", ") + k;
      throw std::runtime_error("aggregate_runs: run " + dir.filename().string() + " conflicts with " +
                               group.first_run + " on: " + conflicts);
    }
    group.cell.values.push_back(std::stod(it->second));
  }

  if (manifests == 0) throw std::runtime_error("aggregate_runs: no manifests under " + artifact_dir);

  std::vector<ReportCell> cells;
  for (auto& [key, group] : groups)
    if (!group.cell.values.empty()) cells.push_back(std::move(group.cell));
  return cells;
}

std::string render_report_table(const std::vector<ReportCell>& cells, const std::string& metric) {
  std::ostringstream out;
  out << "pooling          setting                     runs  " << metric << " (mean +- std)\n";
  for (const ReportCell& cell : cells) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %-27s %4zu  %.4f +- %.4f\n", cell.pooling.c_str(),
                  cell.setting.c_str(), cell.values.size(), cell.mean(), cell.stddev());
    out << line;
  }
  return out.str();
}

}  // namespace rnnpool
