#pragma once

// Deterministic persistence: CSV tables with shortest round-trip decimal
// serialization, a JSON run manifest with per-file checksums, and a flat
// key/value config-file reader.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "igr/egr.hpp"
#include "igr/flow.hpp"
#include "igr/harness.hpp"

namespace igr {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shortest decimal string that round-trips the 64-bit value.
std::string format_double(double v);

const char* termination_name(Termination t);

// Atomic write: the file appears complete or not at all.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Columns: iteration, physical_time, E, R_IG, lambda, E_modified, slope,
// param_norm, plus train/test accuracy when any row defines them.
std::string trajectory_csv(const Trajectory& trajectory, double lambda);

// Columns: h, width, m, lambda, stop_iteration, E, R_IG, slope, train_acc,
// test_acc, excluded, exclusion_reason.
std::string sweep_csv(const SweepResult& result);

std::string robustness_csv(const std::vector<RobustnessPoint>& points);

struct ManifestEntry {
    std::string path;  // relative to the manifest
    std::uint64_t checksum = 0;
};

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::vector<std::string> termination_reasons;
    std::vector<ManifestEntry> outputs;
};

// Writes the named CSV outputs and manifest.json into out_dir. Timestamps
// are recorded in the manifest but everything else is a pure function of
// the config.
void persist_run(const std::filesystem::path& out_dir,
                 const std::vector<std::pair<std::string, std::string>>& files,
                 RunManifest manifest);

// Flat `key = value` config text; '#' starts a comment. Requires a
// schema_version key.
std::map<std::string, std::string> parse_config(const std::string& text);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

std::vector<double> parse_double_list(const std::string& csv);
std::vector<std::size_t> parse_size_list(const std::string& csv);

}  // namespace igr
