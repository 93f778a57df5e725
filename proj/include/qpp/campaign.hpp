#pragma once

// Configuration-driven experiment runner: validates a JSON config, runs one
// campaign, and produces a report plus plot-ready artifacts.

#include "qpp/hardware.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpp {

inline constexpr const char* kToolVersion = "qpp 1.0.0";
inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "QPP_OUTPUT_DIR";

enum class CampaignKind { fidelity_haar, fidelity_perm, calibration, hom_map, delay_sweep, loss_report, platform };

std::string to_string(CampaignKind kind);
CampaignKind campaign_kind_from_string(const std::string& name);

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    CampaignKind campaign = CampaignKind::fidelity_haar;
    int n = 20;
    std::uint64_t seed = 0;
    int count = 0;                      // 0: campaign default (1000 Haar, 190 permutations)
    std::string profile = "default";    // ideal | default | calibrated | path to profile JSON
    std::uint64_t profile_seed = 0;     // heater parameters of built-in profiles
    std::string output_dir;             // empty: $QPP_OUTPUT_DIR or "out"
    int workers = 0;                    // 0: hardware concurrency
    double overlap = 1.0 / 1.1;         // x0 for HOM campaigns
    double splitter_error_sigma = 0.0;  // extra seeded per-coupler error for HOM campaigns
    double detector_sigma = 0.0;        // calibration sweeps
    double count_noise = 0.0;           // HOM scans
    std::vector<double> drive_levels;   // delay sweep, radians; empty: 0..3 pi in 7 steps
    std::string platform_csv;           // empty: bundled dataset
    bool svg = false;

    int effective_count() const;
    int effective_workers() const;
    std::filesystem::path effective_output_dir() const;
};

// Schema check with defaults filled. Unknown keys, wrong types and out-of-range
// values throw ValidationError naming the field.
ExperimentConfig validate_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Normalized form. Worker count and output directory are omitted because
// they do not affect results.
nlohmann::json to_json(const ExperimentConfig& config);

// "ideal", "default", "calibrated" or a JSON file path.
HardwareProfile resolve_profile(const std::string& reference, int n, std::uint64_t profile_seed);

struct Artifact {
    std::string name;  // relative file name
    std::string content;
};

struct ExperimentReport {
    nlohmann::json config;
    nlohmann::json results;
    nlohmann::json summary;
    std::vector<std::string> failures;  // per-item campaign errors
    double wall_clock_seconds = 0.0;
    std::vector<Artifact> artifacts;

    bool ok() const { return failures.empty(); }

    // Full report document, including tool version and wall clock.
    nlohmann::json to_json() const;
    // Same without the wall-clock field; identical across runs and worker
    // counts for identical configs.
    nlohmann::json payload() const;
};

ExperimentReport run_campaign(const ExperimentConfig& config);

// Writes report.json and every artifact into `dir`, each via a temporary
// file and rename.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Static SVG renderings.
std::string histogram_svg(const nlohmann::json& histogram, const std::string& title);
std::string curve_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                      const std::string& x_label, const std::string& y_label);

}  // namespace qpp
