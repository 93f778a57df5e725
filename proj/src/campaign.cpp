#include "qpp/campaign.hpp"

#include "qpp/analysis.hpp"
#include "qpp/compiler.hpp"
#include "qpp/error.hpp"
#include "qpp/parallel.hpp"
#include "qpp/quantum.hpp"
#include "qpp/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#ifndef QPP_DATA_DIR
#define QPP_DATA_DIR "data"
#endif

namespace qpp {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string matrix_csv(const RealMatrix& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ',';
            out += fmt(m(r, c));
        }
        out += '\n';
    }
    return out;
}

template <class T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config field '") + key + "' has the wrong type");
    }
}

struct ItemOutcome {
    double fidelity = 0.0;
    double max_abs_error = 0.0;
    double mean_error = 0.0;
    std::string failure;
};

// Compile, calibrate-compensate, drive, measure.
std::vector<ItemOutcome> run_fidelity_items(const std::vector<Unitary>& targets, const HardwareProfile& profile,
                                            const CalibrationRecord& calibration, std::uint64_t seed, int workers,
                                            RealMatrix* first_error) {
    std::vector<ItemOutcome> out(targets.size());
    parallel_for(targets.size(), workers, [&](std::size_t i) {
        try {
            const auto compiled = clements_decompose(targets[i]).settings;
            const auto volts = solve_voltages(profile, calibration, compiled);
            const auto realized = realized_settings(profile, volts, compiled.output_phases());
            const auto measured = measure_amplitude_matrix(profile, realized, derive_seed(seed, 1, i));
            const RealMatrix err = error_matrix(targets[i], measured);
            out[i].fidelity = amplitude_fidelity(targets[i], measured);
            out[i].max_abs_error = err.cwiseAbs().maxCoeff();
            out[i].mean_error = err.mean();
            if (i == 0 && first_error) *first_error = err;
        } catch (const InfeasibleError& e) {
            out[i].failure = "item " + std::to_string(i) + ": " + e.what();
        }
    });
    return out;
}

void fidelity_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const int n = config.n;
    const HardwareProfile profile = resolve_profile(config.profile, n, config.profile_seed);
    EnsembleManifest manifest;
    manifest.kind = config.campaign == CampaignKind::fidelity_haar ? EnsembleManifest::Kind::haar
                                                                    : EnsembleManifest::Kind::permutation;
    manifest.n = n;
    manifest.seed = config.seed;
    manifest.count = config.effective_count();
    const auto targets = build_ensemble(manifest);

    CalibrationOptions cal;
    cal.seed = derive_seed(config.seed, 0xca1);
    cal.detector_sigma = config.detector_sigma;
    cal.workers = config.effective_workers();
    const CalibrationRecord calibration = calibrate_profile(profile, cal);

    RealMatrix first_error;
    const auto items = run_fidelity_items(targets, profile, calibration, config.seed, config.effective_workers(),
                                          &first_error);
    std::vector<double> fidelities;
    json per_item = json::array();
    std::string csv = "index,fidelity,max_abs_error\n";
    double error_mean_sum = 0.0;
    int over = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].failure.empty()) {
            report.failures.push_back(items[i].failure);
            per_item.push_back({{"index", i}, {"error", items[i].failure}});
            continue;
        }
        fidelities.push_back(items[i].fidelity);
        error_mean_sum += items[i].mean_error;
        if (items[i].max_abs_error >= 0.2) ++over;
        per_item.push_back(
            {{"index", i}, {"fidelity", items[i].fidelity}, {"max_abs_error", items[i].max_abs_error}});
        csv += std::to_string(i) + ',' + fmt(items[i].fidelity) + ',' + fmt(items[i].max_abs_error) + '\n';
    }
    report.results = {{"manifest", manifest}, {"items", std::move(per_item)}};
    if (!fidelities.empty()) {
        const auto stats = ensemble_statistics(fidelities);
        report.summary = {{"fidelity", stats},
                          {"calibration_accepted", calibration.accepted()},
                          {"mean_error_entry", error_mean_sum / static_cast<double>(fidelities.size())},
                          {"fraction_max_abs_error_ge_0_2",
                           static_cast<double>(over) / static_cast<double>(fidelities.size())},
                          {"failed_items", report.failures.size()}};
        if (items.front().failure.empty()) {
            report.summary["example_max_abs_error"] = items.front().max_abs_error;
            report.artifacts.push_back({"error_matrix_0.csv", matrix_csv(first_error)});
        }
        if (config.svg) {
            report.artifacts.push_back({"fidelity_histogram.svg",
                                        histogram_svg(json(stats.histogram), "amplitude fidelity")});
        }
    }
    report.artifacts.push_back({"fidelities.csv", csv});
}

void calibration_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const HardwareProfile profile = resolve_profile(config.profile, config.n, config.profile_seed);
    CalibrationOptions cal;
    cal.seed = config.seed;
    cal.detector_sigma = config.detector_sigma;
    cal.workers = config.effective_workers();
    const auto record = calibrate_profile(profile, cal);
    json items = json::array();
    double worst_alpha = 0.0;
    double worst_phi0 = 0.0;
    for (std::size_t i = 0; i < record.heaters.size(); ++i) {
        const auto& h = record.heaters[i];
        const double ra = std::abs(h.alpha / profile.heaters[i].alpha - 1.0);
        const double rp = std::abs(phase_distance(h.phi0, profile.heaters[i].phi0));
        worst_alpha = std::max(worst_alpha, ra);
        worst_phi0 = std::max(worst_phi0, rp);
        items.push_back({{"heater_id", h.heater_id},
                         {"phi0", h.phi0},
                         {"alpha", h.alpha},
                         {"residual", h.residual_rms}});
    }
    report.results = {{"heaters", std::move(items)}};
    report.summary = {{"heaters", record.heaters.size()},
                      {"accepted", record.accepted()},
                      {"max_relative_alpha_error", worst_alpha},
                      {"max_phi0_error_radians", worst_phi0}};
    std::ostringstream csv;
    write_calibration_csv(csv, record);
    report.artifacts.push_back({"calibration.csv", csv.str()});
}

PhotonPairSource source_for(const ExperimentConfig& config) {
    PhotonPairSource s;
    s.overlap_at_zero_delay = config.overlap;
    return s;
}

HardwareProfile hom_profile(const ExperimentConfig& config) {
    HardwareProfile profile = resolve_profile(config.profile, config.n, config.profile_seed);
    if (config.splitter_error_sigma > 0.0) {
        profile.splitter_errors = random_splitter_errors(config.n, config.splitter_error_sigma, config.seed);
    }
    return profile;
}

void hom_map_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const auto profile = hom_profile(config);
    VisibilityMapOptions options;
    options.scan.seed = config.seed;
    options.scan.count_noise = config.count_noise;
    options.workers = config.effective_workers();
    const auto map = hom_visibility_map(config.n, source_for(config), profile, options);
    report.results = map;
    report.summary = {{"visibility", map.stats}};
    if (map.entries.size() > 1) {
        try {
            const auto rows = one_way_anova(map.by_row());
            const auto cols = one_way_anova(map.by_column());
            report.summary["anova_rows"] = {{"f", rows.f_statistic}, {"p", rows.p_value}};
            report.summary["anova_columns"] = {{"f", cols.f_statistic}, {"p", cols.p_value}};
        } catch (const ValidationError&) {
        }
    }
    std::ostringstream grid;
    write_visibility_grid_csv(grid, map);
    report.artifacts.push_back({"visibility_grid.csv", grid.str()});
    if (config.svg) {
        report.artifacts.push_back({"visibility_histogram.svg", histogram_svg(json(map.stats.histogram), "HOM visibility")});
    }
}

void delay_sweep_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const auto profile = hom_profile(config);
    std::vector<double> drives = config.drive_levels;
    if (drives.empty()) {
        for (int k = 0; k <= 6; ++k) drives.push_back(0.5 * std::numbers::pi * k);
    }
    const auto sweep = diagonal_delay_sweep(config.n, profile, source_for(config), drives, config.seed);
    report.results = sweep;
    std::vector<double> x;
    std::vector<double> y;
    std::string csv = "drive_radians,path_shift_um,fitted_center_um,visibility\n";
    for (const auto& p : sweep.points) {
        x.push_back(p.drive_radians);
        y.push_back(p.fitted_center_um);
        csv += fmt(p.drive_radians) + ',' + fmt(p.path_shift_um) + ',' + fmt(p.fitted_center_um) + ',' +
               fmt(p.visibility) + '\n';
    }
    const double per_heater = sweep.wavelength_um * (drives.empty() ? 0.0 : *std::max_element(drives.begin(), drives.end())) /
                              kTwoPi;
    report.summary = {{"driven_heater_count", sweep.heaters.size()},
                      {"max_fitted_shift_um", sweep.points.empty() ? 0.0 : sweep.points.back().fitted_center_um -
                                                                            sweep.points.front().fitted_center_um},
                      {"per_heater_shift_at_max_drive_um", per_heater}};
    report.artifacts.push_back({"delay_sweep.csv", csv});
    if (config.svg) {
        report.artifacts.push_back({"delay_sweep.svg", curve_svg(x, y, "HOM dip center vs drive", "drive (rad)",
                                                                 "dip center (um)")});
    }
}

void loss_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const auto profile = resolve_profile(config.profile, config.n, config.profile_seed);
    const auto il = insertion_loss_per_mode(profile);
    const double mean = std::accumulate(il.begin(), il.end(), 0.0) / static_cast<double>(il.size());
    double ss = 0.0;
    for (double v : il) ss += (v - mean) * (v - mean);
    report.results = {{"insertion_loss_db", il}};
    report.summary = {{"mean_insertion_loss_db", mean},
                      {"std_insertion_loss_db", il.size() > 1 ? std::sqrt(ss / (il.size() - 1)) : 0.0}};
    std::string csv = "mode,insertion_loss_db\n";
    for (std::size_t m = 0; m < il.size(); ++m) csv += std::to_string(m) + ',' + fmt(il[m]) + '\n';
    report.artifacts.push_back({"insertion_loss.csv", csv});
}

void platform_campaign(const ExperimentConfig& config, ExperimentReport& report) {
    const std::string path =
        config.platform_csv.empty() ? std::string(QPP_DATA_DIR) + "/platforms.csv" : config.platform_csv;
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open platform dataset '" + path + "'");
    const auto entries = read_platform_csv(in);
    const auto pr = platform_report(entries);
    report.results = pr;
    report.summary = {{"top_ranked", pr.ranking.empty() ? json(nullptr) : json(pr.ranking.front().entry.name)},
                      {"top_ranked_useful_size",
                       pr.ranking.empty() ? json(nullptr) : json(pr.ranking.front().useful_size)},
                      {"entries", pr.loss_table.size()}};
    std::string csv = "rank,name,platform,loss_per_unit_cell_db,useful_size\n";
    for (std::size_t k = 0; k < pr.ranking.size(); ++k) {
        const auto& r = pr.ranking[k];
        csv += std::to_string(k + 1) + ',' + r.entry.name + ',' + r.entry.platform + ',' +
               fmt(r.entry.loss_per_unit_cell_db) + ',' + std::to_string(r.useful_size) + '\n';
    }
    report.artifacts.push_back({"platform_ranking.csv", csv});
}

}  // namespace

std::string to_string(CampaignKind kind) {
    switch (kind) {
        case CampaignKind::fidelity_haar: return "fidelity-haar";
        case CampaignKind::fidelity_perm: return "fidelity-perm";
        case CampaignKind::calibration: return "calibration";
        case CampaignKind::hom_map: return "hom-map";
        case CampaignKind::delay_sweep: return "delay-sweep";
        case CampaignKind::loss_report: return "loss-report";
        case CampaignKind::platform: return "platform";
    }
    return "unknown";
}

CampaignKind campaign_kind_from_string(const std::string& name) {
    for (auto k : {CampaignKind::fidelity_haar, CampaignKind::fidelity_perm, CampaignKind::calibration,
                   CampaignKind::hom_map, CampaignKind::delay_sweep, CampaignKind::loss_report,
                   CampaignKind::platform}) {
        if (to_string(k) == name) return k;
    }
    throw ValidationError("config field 'campaign': unknown campaign '" + name + "'");
}

int ExperimentConfig::effective_count() const {
    if (count > 0) return count;
    if (campaign == CampaignKind::fidelity_perm) {
        // n! may be smaller than the paper's 190.
        int limit = 190;
        long f = 1;
        for (int k = 2; k <= n && f < limit; ++k) f *= k;
        return static_cast<int>(std::min<long>(limit, f));
    }
    return 1000;
}

int ExperimentConfig::effective_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::filesystem::path ExperimentConfig::effective_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "out";
}

ExperimentConfig validate_config(const json& j) {
    static const std::set<std::string> known{"schema_version", "campaign",      "n",
                                             "seed",           "count",         "profile",
                                             "profile_seed",   "output_dir",    "workers",
                                             "overlap",        "splitter_error_sigma", "detector_sigma",
                                             "count_noise",    "drive_levels",  "platform_csv",
                                             "svg"};
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ValidationError("config: unknown field '" + key + "'");
    }
    ExperimentConfig c;
    c.schema_version = field(j, "schema_version", kConfigSchemaVersion);
    if (c.schema_version != kConfigSchemaVersion) {
        throw ValidationError("config field 'schema_version' must be " + std::to_string(kConfigSchemaVersion));
    }
    if (!j.contains("campaign")) throw ValidationError("config field 'campaign' is required");
    c.campaign = campaign_kind_from_string(field<std::string>(j, "campaign", ""));
    c.n = field(j, "n", 20);
    if (c.n < 2) throw ValidationError("config field 'n' must be >= 2 (got " + std::to_string(c.n) + ")");
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0)) {
            throw ValidationError("config field 'seed' must be a non-negative integer");
        }
        c.seed = s.get<std::uint64_t>();
    }
    if (j.contains("count")) {
        const auto& s = j.at("count");
        if (!s.is_number_integer()) throw ValidationError("config field 'count' must be an integer");
        const long long v = s.get<long long>();
        if (v < 1) throw ValidationError("config field 'count' must be >= 1 (got " + std::to_string(v) + ")");
        if (v > 1000000) throw ValidationError("config field 'count' must be <= 1000000");
        c.count = static_cast<int>(v);
    }
    c.profile = field<std::string>(j, "profile", c.profile);
    if (c.profile.empty()) throw ValidationError("config field 'profile' must not be empty");
    c.profile_seed = field<std::uint64_t>(j, "profile_seed", 0);
    c.output_dir = field<std::string>(j, "output_dir", "");
    c.workers = field(j, "workers", 0);
    if (c.workers < 0) throw ValidationError("config field 'workers' must be >= 0");
    c.overlap = field(j, "overlap", c.overlap);
    if (!(c.overlap >= 0.0 && c.overlap <= 1.0)) throw ValidationError("config field 'overlap' must lie in [0, 1]");
    c.splitter_error_sigma = field(j, "splitter_error_sigma", 0.0);
    if (!(c.splitter_error_sigma >= 0.0 && c.splitter_error_sigma < 0.5)) {
        throw ValidationError("config field 'splitter_error_sigma' must lie in [0, 0.5)");
    }
    c.detector_sigma = field(j, "detector_sigma", 0.0);
    if (!(c.detector_sigma >= 0.0)) throw ValidationError("config field 'detector_sigma' must be >= 0");
    c.count_noise = field(j, "count_noise", 0.0);
    if (!(c.count_noise >= 0.0)) throw ValidationError("config field 'count_noise' must be >= 0");
    c.drive_levels = field(j, "drive_levels", std::vector<double>{});
    for (double d : c.drive_levels) {
        if (!(d >= 0.0)) throw ValidationError("config field 'drive_levels' entries must be >= 0 radians");
    }
    c.platform_csv = field<std::string>(j, "platform_csv", "");
    c.svg = field(j, "svg", false);
    if (c.campaign == CampaignKind::fidelity_perm) {
        long f = 1;
        for (int k = 2; k <= c.n && f <= c.count; ++k) f *= k;
        if (c.count > f) throw ValidationError("config field 'count' exceeds n! distinct permutations");
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return validate_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j{{"schema_version", c.schema_version},
           {"campaign", to_string(c.campaign)},
           {"n", c.n},
           {"seed", c.seed},
           {"count", c.effective_count()},
           {"profile", c.profile},
           {"profile_seed", c.profile_seed},
           {"overlap", c.overlap},
           {"splitter_error_sigma", c.splitter_error_sigma},
           {"detector_sigma", c.detector_sigma},
           {"count_noise", c.count_noise},
           {"svg", c.svg}};
    if (!c.drive_levels.empty()) j["drive_levels"] = c.drive_levels;
    if (!c.platform_csv.empty()) j["platform_csv"] = c.platform_csv;
    return j;
}

HardwareProfile resolve_profile(const std::string& reference, int n, std::uint64_t profile_seed) {
    if (reference == "ideal") return ideal_profile(n, profile_seed);
    if (reference == "default") return default_profile(n, profile_seed);
    if (reference == "calibrated") return calibrated_profile(n, profile_seed);
    std::ifstream in(reference);
    if (!in) throw ValidationError("profile '" + reference + "' is not a preset and cannot be opened");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("profile '" + reference + "' is not valid JSON: " + e.what());
    }
    auto p = hardware_profile_from_json(j);
    if (p.n != n) {
        throw ValidationError("profile '" + reference + "' has n = " + std::to_string(p.n) + ", config has n = " +
                              std::to_string(n));
    }
    return p;
}

json ExperimentReport::payload() const {
    return json{{"tool_version", kToolVersion},
                {"config", config},
                {"results", results},
                {"summary", summary},
                {"failures", failures}};
}

json ExperimentReport::to_json() const {
    json j = payload();
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
}

ExperimentReport run_campaign(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    report.config = qpp::to_json(config);
    switch (config.campaign) {
        case CampaignKind::fidelity_haar:
        case CampaignKind::fidelity_perm: fidelity_campaign(config, report); break;
        case CampaignKind::calibration: calibration_campaign(config, report); break;
        case CampaignKind::hom_map: hom_map_campaign(config, report); break;
        case CampaignKind::delay_sweep: delay_sweep_campaign(config, report); break;
        case CampaignKind::loss_report: loss_campaign(config, report); break;
        case CampaignKind::platform: platform_campaign(config, report); break;
    }
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& a : report.artifacts) write_file_atomic(dir / a.name, a.content);
    write_file_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
}

std::string histogram_svg(const json& h, const std::string& title) {
    const auto counts = h.at("counts").get<std::vector<int>>();
    const double lower = h.at("lower").get<double>();
    const double upper = h.at("upper").get<double>();
    const int peak = counts.empty() ? 1 : std::max(1, *std::max_element(counts.begin(), counts.end()));
    const double w = 640;
    const double ht = 360;
    const double left = 50;
    const double bottom = 320;
    const double plot_w = w - left - 20;
    const double plot_h = bottom - 40;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title
      << "</text>\n";
    const double bw = counts.empty() ? 0.0 : plot_w / static_cast<double>(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double bh = plot_h * counts[k] / peak;
        s << "<rect x=\"" << left + bw * k << "\" y=\"" << bottom - bh << "\" width=\"" << bw * 0.9
          << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
    }
    s << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << left + plot_w << "\" y2=\"" << bottom
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << left << "\" y=\"" << bottom + 18 << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << lower << "</text>\n";
    s << "<text x=\"" << left + plot_w << "\" y=\"" << bottom + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << upper << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

std::string curve_svg(const std::vector<double>& x, const std::vector<double>& y, const std::string& title,
                      const std::string& x_label, const std::string& y_label) {
    const double w = 640;
    const double ht = 360;
    const double left = 60;
    const double bottom = 310;
    const double plot_w = w - left - 20;
    const double plot_h = bottom - 40;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!x.empty()) {
        const auto [xa, xb] = std::minmax_element(x.begin(), x.end());
        const auto [ya, yb] = std::minmax_element(y.begin(), y.end());
        x0 = *xa;
        x1 = *xb > *xa ? *xb : *xa + 1.0;
        y0 = *ya;
        y1 = *yb > *ya ? *yb : *ya + 1.0;
    }
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title
      << "</text>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        s << left + plot_w * (x[i] - x0) / (x1 - x0) << ',' << bottom - plot_h * (y[i] - y0) / (y1 - y0) << ' ';
    }
    s << "\"/>\n";
    s << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << ht - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label << "</text>\n";
    s << "<text x=\"15\" y=\"" << bottom - plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 15 " << bottom - plot_h / 2 << ")\">"
      << y_label << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace qpp
