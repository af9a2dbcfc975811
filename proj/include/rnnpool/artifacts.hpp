#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rnnpool {

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t value);

// Writes content to `path + ".tmp"` and renames into place so readers never
// see partial files.
void atomic_write_text(const std::string& path, const std::string& content);

struct ArtifactEntry {
  std::string name;  // relative to the run directory
  std::uint64_t bytes = 0;
  std::string fnv64;
};

// One manifest per run directory: command, resolved config echo, headline
// metrics, and a content hash per artifact.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> config;   // resolved config echo
  std::map<std::string, std::string> metrics;  // headline numbers as strings
  std::vector<ArtifactEntry> artifacts;
};

void write_manifest(const std::string& run_dir, const Manifest& manifest);
Manifest read_manifest(const std::string& run_dir);
// Throws when a listed artifact is missing or its hash disagrees.
void verify_manifest(const std::string& run_dir, const Manifest& manifest);

// Marks a run directory as failed; `report` skips it.
void write_failure_marker(const std::string& run_dir, const std::string& reason);
bool has_failure_marker(const std::string& run_dir);

struct ReportCell {
  std::string pooling;
  std::string setting;  // config fingerprint label
  std::vector<double> values;
  double mean() const;
  double stddev() const;  // population std over seeds
};

// Groups finished runs under artifact_dir by (pooling, config-minus-seed) and
// aggregates `metric` across seeds. Runs in one cell must agree on everything
// but the seed; conflicts abort with the offending keys.
std::vector<ReportCell> aggregate_runs(const std::string& artifact_dir, const std::string& metric);

std::string render_report_table(const std::vector<ReportCell>& cells, const std::string& metric);

}  // namespace rnnpool
