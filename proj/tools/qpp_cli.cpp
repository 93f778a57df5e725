#include "qpp/campaign.hpp"
#include "qpp/compiler.hpp"
#include "qpp/error.hpp"
#include "qpp/hardware.hpp"
#include "qpp/quantum.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitCampaign = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> n;
    std::optional<int> count;
    std::optional<int> workers;
    std::string out;
    std::string profile;
    std::string format = "json";
    bool svg = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "JSON config file");
    cmd->add_option("--seed", o.seed, "campaign seed");
    cmd->add_option("-n,--modes", o.n, "number of modes");
    cmd->add_option("--count", o.count, "ensemble size");
    cmd->add_option("--workers", o.workers, "worker threads (default: all cores)");
    cmd->add_option("--out", o.out, "output directory (default: $QPP_OUTPUT_DIR or ./out)");
    cmd->add_option("--profile", o.profile, "ideal | default | calibrated | profile JSON path");
    cmd->add_option("--format", o.format, "stdout format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--svg", o.svg, "also write SVG plots");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qpp::ValidationError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw qpp::ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// Config file (if any) with the subcommand's campaign and flag overrides.
qpp::ExperimentConfig build_config(const CommonOptions& o, const std::string& campaign, const json& extra = {}) {
    json j = o.config.empty() ? json::object() : read_json_file(o.config);
    if (!campaign.empty()) j["campaign"] = campaign;
    if (o.seed) j["seed"] = *o.seed;
    if (o.n) j["n"] = *o.n;
    if (o.count) j["count"] = *o.count;
    if (o.workers) j["workers"] = *o.workers;
    if (!o.out.empty()) j["output_dir"] = o.out;
    if (!o.profile.empty()) j["profile"] = o.profile;
    if (o.svg) j["svg"] = true;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return qpp::validate_config(j);
}

std::string primary_csv(const qpp::ExperimentReport& report) {
    for (const auto& a : report.artifacts) {
        if (a.name.size() > 4 && a.name.ends_with(".csv")) return a.content;
    }
    return "";
}

int run(const qpp::ExperimentConfig& config, const std::string& format) {
    const auto report = qpp::run_campaign(config);
    const auto dir = config.effective_output_dir();
    qpp::write_report(report, dir);
    if (format == "csv") {
        std::cout << primary_csv(report);
    } else {
        std::cout << json{{"summary", report.summary}, {"output_dir", dir.string()}}.dump(2) << '\n';
    }
    for (const auto& f : report.failures) std::cerr << "campaign error: " << f << '\n';
    return report.ok() ? kExitOk : kExitCampaign;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator and compiler for Clements-mesh photonic processors"};
    app.require_subcommand(1);
    app.set_version_flag("--version", qpp::kToolVersion);

    CommonOptions common;
    std::function<int()> action;

    auto* run_cmd = app.add_subcommand("run", "run the campaign described by --config");
    add_common(run_cmd, common);
    run_cmd->callback([&] {
        action = [&] {
            if (common.config.empty()) throw qpp::ValidationError("run needs --config");
            return run(build_config(common, ""), common.format);
        };
    });

    auto* validate_cmd = app.add_subcommand("validate", "check a config and print its normalized form");
    add_common(validate_cmd, common);
    validate_cmd->callback([&] {
        action = [&] {
            if (common.config.empty()) throw qpp::ValidationError("validate needs --config");
            const auto c = build_config(common, "");
            json j = qpp::to_json(c);
            j["output_dir"] = c.effective_output_dir().string();
            j["workers"] = c.effective_workers();
            std::cout << j.dump(2) << '\n';
            return kExitOk;
        };
    });

    std::string matrix_path;
    auto* compile_cmd = app.add_subcommand("compile", "decompose a unitary (CSV of re,im pairs) into mesh settings");
    compile_cmd->add_option("matrix", matrix_path, "matrix CSV")->required();
    add_common(compile_cmd, common);
    compile_cmd->callback([&] {
        action = [&] {
            std::ifstream in(matrix_path);
            if (!in) throw qpp::ValidationError("cannot read '" + matrix_path + "'");
            const auto report = qpp::clements_decompose(qpp::read_matrix_csv(in));
            json j{{"settings", report.settings}, {"residual", report.residual}};
            if (!common.out.empty()) {
                qpp::write_file_atomic(std::filesystem::path(common.out) / "settings.json", j.dump(2) + "\n");
            }
            std::cout << j.dump(2) << '\n';
            return kExitOk;
        };
    });

    auto ensemble_cmd = [&](const char* name, const char* help, qpp::EnsembleManifest::Kind kind) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, common);
        cmd->callback([&, kind] {
            action = [&, kind] {
                qpp::EnsembleManifest m;
                m.kind = kind;
                m.n = common.n.value_or(20);
                m.seed = common.seed.value_or(0);
                m.count = common.count.value_or(kind == qpp::EnsembleManifest::Kind::haar ? 1000 : 190);
                const auto targets = qpp::build_ensemble(m);
                qpp::ExperimentConfig where;
                where.output_dir = common.out;
                const std::filesystem::path dir =
                    common.out.empty() ? where.effective_output_dir() / "targets" : std::filesystem::path(common.out);
                qpp::write_file_atomic(dir / "manifest.json", json(m).dump(2) + "\n");
                for (std::size_t i = 0; i < targets.size(); ++i) {
                    std::ostringstream csv;
                    qpp::write_matrix_csv(csv, targets[i].matrix());
                    qpp::write_file_atomic(dir / ("target_" + std::to_string(i) + ".csv"), csv.str());
                }
                if (common.format == "csv") {
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                        if (i > 0) std::cout << '\n';
                        qpp::write_matrix_csv(std::cout, targets[i].matrix());
                    }
                } else {
                    std::cout << json{{"manifest", m}, {"output_dir", dir.string()}}.dump(2) << '\n';
                }
                return kExitOk;
            };
        });
    };
    ensemble_cmd("haar", "generate a seeded Haar-random target ensemble", qpp::EnsembleManifest::Kind::haar);
    ensemble_cmd("perm", "generate a seeded permutation target ensemble", qpp::EnsembleManifest::Kind::permutation);

    std::string kind = "haar";
    auto* fidelity_cmd = app.add_subcommand("fidelity", "amplitude-fidelity campaign");
    fidelity_cmd->add_option("--kind", kind, "target ensemble")->check(CLI::IsMember({"haar", "perm"}));
    add_common(fidelity_cmd, common);
    fidelity_cmd->callback([&] {
        action = [&] { return run(build_config(common, kind == "haar" ? "fidelity-haar" : "fidelity-perm"), common.format); };
    });

    double detector_sigma = 0.0;
    bool fit_noise = false;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "phase-voltage calibration of every heater");
    calibrate_cmd->add_option("--detector-sigma", detector_sigma, "additive detector noise");
    calibrate_cmd->add_flag("--fit-noise", fit_noise,
                            "fit phase-jitter levels to the Haar / permutation fidelity targets and write a profile");
    add_common(calibrate_cmd, common);
    calibrate_cmd->callback([&] {
        action = [&] {
            const auto config = build_config(common, "calibration", {{"detector_sigma", detector_sigma}});
            if (!fit_noise) return run(config, common.format);
            auto profile = qpp::resolve_profile(config.profile, config.n, config.profile_seed);
            qpp::NoiseFitTargets targets;
            targets.n = config.n;
            targets.seed = config.seed;
            targets.workers = config.effective_workers();
            const auto fit = qpp::fit_phase_noise(profile, targets);
            profile.phase_noise_sigma = fit.external_sigma;
            profile.internal_phase_noise_sigma = fit.internal_sigma;
            const auto dir = config.effective_output_dir();
            qpp::write_file_atomic(dir / "profile.json", json(profile).dump(2) + "\n");
            std::cout << json{{"external_sigma", fit.external_sigma},
                              {"internal_sigma", fit.internal_sigma},
                              {"haar_mean", fit.haar_mean},
                              {"permutation_mean", fit.permutation_mean},
                              {"converged", fit.converged},
                              {"profile", (dir / "profile.json").string()}}
                             .dump(2)
                      << '\n';
            return fit.converged ? kExitOk : kExitCampaign;
        };
    });

    double overlap = 1.0 / 1.1;
    double splitter_sigma = 0.0;
    auto hom_options = [&](CLI::App* cmd) {
        cmd->add_option("--overlap", overlap, "two-photon overlap at zero delay");
        cmd->add_option("--splitter-sigma", splitter_sigma, "seeded per-coupler splitting error");
    };
    auto hom_extra = [&] { return json{{"overlap", overlap}, {"splitter_error_sigma", splitter_sigma}}; };

    auto* map_cmd = app.add_subcommand("hom-map", "HOM visibility at every tunable beam splitter");
    hom_options(map_cmd);
    add_common(map_cmd, common);
    map_cmd->callback([&] { action = [&] { return run(build_config(common, "hom-map", hom_extra()), common.format); }; });

    int col = 0;
    int row = 0;
    auto* scan_cmd = app.add_subcommand("hom-scan", "HOM scan at one tunable beam splitter");
    scan_cmd->add_option("--col", col, "mesh column")->required();
    scan_cmd->add_option("--row", row, "upper mode of the cell")->required();
    hom_options(scan_cmd);
    add_common(scan_cmd, common);
    scan_cmd->callback([&] {
        action = [&] {
            const auto config = build_config(common, "hom-map", hom_extra());
            auto profile = qpp::resolve_profile(config.profile, config.n, config.profile_seed);
            if (config.splitter_error_sigma > 0.0) {
                profile.splitter_errors = qpp::random_splitter_errors(config.n, config.splitter_error_sigma, config.seed);
            }
            qpp::PhotonPairSource source;
            source.overlap_at_zero_delay = config.overlap;
            qpp::HomScanOptions options;
            options.seed = config.seed;
            const auto plan = qpp::route_to_tbs(config.n, {col, row});
            const auto scan = qpp::hom_scan(plan, source, profile, options);
            const auto dir = config.effective_output_dir();
            std::ostringstream csv;
            qpp::write_hom_scan_csv(csv, scan);
            json j{{"plan", plan}, {"scan", scan}};
            qpp::write_file_atomic(dir / "hom_scan.csv", csv.str());
            qpp::write_file_atomic(dir / "hom_scan.json", j.dump(2) + "\n");
            if (config.svg) {
                qpp::write_file_atomic(dir / "hom_scan.svg", qpp::curve_svg(scan.delays_um, scan.coincidences, "HOM dip",
                                                                            "delay (um)", "normalized coincidences"));
            }
            if (common.format == "csv") {
                std::cout << csv.str();
            } else {
                std::cout << json{{"plan", plan}, {"fit", scan.fit}}.dump(2) << '\n';
            }
            return kExitOk;
        };
    });

    std::vector<double> drives;
    auto* sweep_cmd = app.add_subcommand("delay-sweep", "drive the main-diagonal heaters and track the HOM dip");
    sweep_cmd->add_option("--drive", drives, "drive levels in radians per heater");
    hom_options(sweep_cmd);
    add_common(sweep_cmd, common);
    sweep_cmd->callback([&] {
        action = [&] {
            json extra = hom_extra();
            if (!drives.empty()) extra["drive_levels"] = drives;
            return run(build_config(common, "delay-sweep", extra), common.format);
        };
    });

    auto* loss_cmd = app.add_subcommand("loss", "per-mode insertion loss with every cell in bar");
    add_common(loss_cmd, common);
    loss_cmd->callback([&] { action = [&] { return run(build_config(common, "loss-report"), common.format); }; });

    std::string dataset;
    auto* platform_cmd = app.add_subcommand("platform", "useful processor size across platforms");
    platform_cmd->add_option("--dataset", dataset, "platform CSV (default: bundled)");
    add_common(platform_cmd, common);
    platform_cmd->callback([&] {
        action = [&] {
            json extra = json::object();
            if (!dataset.empty()) extra["platform_csv"] = dataset;
            return run(build_config(common, "platform", extra), common.format);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        return action ? action() : kExitUsage;
    } catch (const qpp::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const qpp::StructuralError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "campaign error: " << e.what() << '\n';
        return kExitCampaign;
    }
}
