#include "qpp/hardware.hpp"

#include "qpp/compiler.hpp"
#include "qpp/error.hpp"
#include "qpp/least_squares.hpp"
#include "qpp/parallel.hpp"
#include "qpp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace qpp {

namespace {

using std::numbers::pi;

constexpr double kNominalAlpha = 2.0 * pi;  // rad/W
constexpr double kNominalResistance = 100.0;
constexpr double kSpan = 3.0 * pi;

void check_heater(const HardwareProfile& profile, int heater_id) {
    if (heater_id < 0 || heater_id >= profile.heater_count()) {
        throw LookupError("unknown heater id " + std::to_string(heater_id) + " (profile has " +
                          std::to_string(profile.heater_count()) + " heaters)");
    }
}

void check_voltage(const HeaterModel& model, double volts) {
    if (!(volts >= 0.0) || volts > model.v_max * (1.0 + 1e-12)) {
        throw ValidationError("voltage " + std::to_string(volts) + " V outside [0, " + std::to_string(model.v_max) +
                              "] V");
    }
}

double mixing_angle_error(double e) { return e == 0.0 ? 0.0 : std::asin(std::sqrt(0.5 + e)) - pi / 4.0; }

CellSetting cell_from_heaters(std::span<const double> phases, std::size_t k) {
    return {phases[2 * k], phases[2 * k + 1]};
}

}  // namespace

CrosstalkMatrix::CrosstalkMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) throw ValidationError("crosstalk matrix must be square");
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
        const double d = entries_(i, i);
        if (!(d > 0.0)) throw ValidationError("crosstalk diagonal entry " + std::to_string(i) + " must be > 0");
        for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
            if (i != j && !(std::abs(entries_(i, j)) < d)) {
                throw ValidationError("crosstalk entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                      ") is not smaller than its row diagonal");
            }
        }
    }
}

CrosstalkMatrix CrosstalkMatrix::diagonal(std::span<const HeaterModel> heaters) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(heaters.size(), heaters.size());
    for (std::size_t i = 0; i < heaters.size(); ++i) m(i, i) = heaters[i].alpha;
    return CrosstalkMatrix(std::move(m));
}

void HardwareProfile::validate() const {
    if (n < 1) throw ValidationError("profile n must be >= 1");
    const auto expected = 2 * cell_count(n);
    if (heaters.size() != expected) {
        throw ValidationError("profile needs " + std::to_string(expected) + " heaters, has " +
                              std::to_string(heaters.size()));
    }
    for (std::size_t i = 0; i < heaters.size(); ++i) {
        const auto& h = heaters[i];
        if (!(h.alpha > 0.0) || !(h.resistance > 0.0) || !(h.v_max > 0.0)) {
            throw ValidationError("heater " + std::to_string(i) + ": alpha, resistance and v_max must be > 0");
        }
        if (!(h.phase_span() > 2.0 * pi)) {
            throw ValidationError("heater " + std::to_string(i) + ": phase span " + std::to_string(h.phase_span()) +
                                  " rad does not exceed 2 pi");
        }
    }
    if (static_cast<std::size_t>(crosstalk.size()) != heaters.size()) {
        throw ValidationError("crosstalk matrix size does not match heater count");
    }
    for (std::size_t i = 0; i < heaters.size(); ++i) {
        const double d = crosstalk(static_cast<int>(i), static_cast<int>(i));
        if (std::abs(d - heaters[i].alpha) > 1e-12 * heaters[i].alpha) {
            throw ValidationError("crosstalk diagonal " + std::to_string(i) + " differs from heater alpha");
        }
    }
    loss.validate(n);
    if (!splitter_errors.empty()) {
        if (splitter_errors.size() != heaters.size()) {
            throw ValidationError("profile needs one splitter error per coupler (" + std::to_string(heaters.size()) +
                                  ")");
        }
        for (double e : splitter_errors) {
            if (!(std::abs(e) < 0.5)) throw ValidationError("splitter error must satisfy |e| < 0.5");
        }
    }
    if (!(phase_noise_sigma >= 0.0) || !(internal_phase_noise_sigma >= 0.0) || !(detector_noise_sigma >= 0.0)) {
        throw ValidationError("noise levels must be >= 0");
    }
}

std::vector<CellError> HardwareProfile::static_cell_errors() const {
    std::vector<CellError> out(cell_count(n));
    if (splitter_errors.empty()) return out;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].splitter_in = mixing_angle_error(splitter_errors[2 * k]);
        out[k].splitter_out = mixing_angle_error(splitter_errors[2 * k + 1]);
    }
    return out;
}

HardwareProfile ideal_profile(int n, std::uint64_t seed, const CrosstalkOptions& options) {
    if (n < 1) throw ValidationError("n must be >= 1");
    HardwareProfile p;
    p.n = n;
    p.loss = LossBudget::lossless(n);
    const auto addresses = cell_addresses(n);
    const std::size_t heaters = 2 * addresses.size();
    Rng rng(derive_seed(seed, 0x4ea7e5));
    p.heaters.resize(heaters);
    for (auto& h : p.heaters) {
        h.phi0 = kTwoPi * rng.uniform();
        h.alpha = kNominalAlpha * (0.9 + 0.2 * rng.uniform());
        h.resistance = kNominalResistance * (0.95 + 0.1 * rng.uniform());
        h.v_max = std::sqrt(kSpan * h.resistance / h.alpha);
    }

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(heaters, heaters);
    for (std::size_t i = 0; i < heaters; ++i) c(i, i) = p.heaters[i].alpha;
    for (std::size_t a = 0; a < addresses.size(); ++a) {
        for (int s = 0; s < 2; ++s) c(2 * a + s, 2 * a + 1 - s) = options.same_cell * p.heaters[2 * a + s].alpha;
        for (std::size_t b = 0; b < addresses.size(); ++b) {
            const int dc = std::abs(addresses[a].column - addresses[b].column);
            const int dr = std::abs(addresses[a].row - addresses[b].row);
            const bool neighbor = (dc == 0 && dr == 2) || (dc == 1 && dr == 1);
            if (!neighbor) continue;
            for (int s = 0; s < 2; ++s) {
                for (int t = 0; t < 2; ++t) c(2 * a + s, 2 * b + t) = options.neighbor * p.heaters[2 * a + s].alpha;
            }
        }
    }
    p.crosstalk = CrosstalkMatrix(std::move(c));
    return p;
}

HardwareProfile default_profile(int n, std::uint64_t seed) {
    HardwareProfile p = ideal_profile(n, seed);
    p.loss.coupling_loss_db_per_facet = kDefaultCouplingLossDb;
    p.loss.propagation_loss_db_per_cm = kDefaultPropagationLossDbPerCm;
    p.loss.path_length_cm.assign(n, kDefaultPathLengthCm);
    return p;
}

HardwareProfile calibrated_profile(int n, std::uint64_t seed) {
    HardwareProfile p = default_profile(n, seed);
    p.phase_noise_sigma = kCalibratedExternalSigma;
    p.internal_phase_noise_sigma = kCalibratedInternalSigma;
    return p;
}

std::vector<double> random_splitter_errors(int n, double sigma, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x5b1e));
    std::vector<double> out(2 * cell_count(n));
    for (auto& e : out) e = std::clamp(sigma * rng.normal(), -0.49, 0.49);
    return out;
}

double phase_from_voltage(const HeaterModel& model, double volts, double ambient_phase) {
    check_voltage(model, volts);
    return model.phi0 + model.alpha * volts * volts / model.resistance + ambient_phase;
}

std::vector<double> heater_phases(const HardwareProfile& profile, std::span<const double> volts) {
    const int h = profile.heater_count();
    if (static_cast<int>(volts.size()) != h) {
        throw ValidationError("expected " + std::to_string(h) + " voltages, got " + std::to_string(volts.size()));
    }
    Eigen::VectorXd power(h);
    for (int i = 0; i < h; ++i) {
        check_voltage(profile.heaters[i], volts[i]);
        power(i) = volts[i] * volts[i] / profile.heaters[i].resistance;
    }
    const Eigen::VectorXd total = profile.crosstalk.entries() * power;
    std::vector<double> out(h);
    for (int i = 0; i < h; ++i) {
        const double own = profile.heaters[i].alpha * power(i);
        out[i] = phase_from_voltage(profile.heaters[i], volts[i], total(i) - own);
    }
    return out;
}

MeshSettings realized_settings(const HardwareProfile& profile, std::span<const double> volts,
                               std::span<const double> output_phases) {
    const auto phases = heater_phases(profile, volts);
    std::vector<CellSetting> cells(phases.size() / 2);
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = cell_from_heaters(phases, k);
    return MeshSettings(profile.n, std::move(cells), std::vector<double>(output_phases.begin(), output_phases.end()));
}

std::vector<double> default_voltage_grid(const HeaterModel& model, int points) {
    if (points < 2) throw ValidationError("voltage grid needs at least 2 points");
    std::vector<double> grid(points);
    const double p_max = model.max_power();
    for (int k = 0; k < points; ++k) {
        grid[k] = std::sqrt(p_max * k / (points - 1) * model.resistance);
    }
    grid.back() = model.v_max;
    return grid;
}

CalibrationSweep simulate_calibration_sweep(const HardwareProfile& profile, int heater_id,
                                            std::span<const double> voltage_grid, double detector_sigma,
                                            std::uint64_t seed) {
    check_heater(profile, heater_id);
    const HeaterModel& model = profile.heaters[heater_id];
    const auto addresses = cell_addresses(profile.n);
    const int mode = addresses[heater_id / 2].row;
    const double path = profile.loss.path_length_cm.empty() ? 0.0 : profile.loss.path_length_cm[mode];
    const double transmission =
        db_to_power(2.0 * profile.loss.coupling_loss_db_per_facet + profile.loss.propagation_loss_db_per_cm * path);

    CalibrationSweep sweep;
    sweep.heater_id = heater_id;
    sweep.resistance = model.resistance;
    // Internal heater: bar-port power (1 - cos theta) / 2. External heater:
    // interferes with a reference arm, (1 + cos phi) / 2.
    sweep.routing_offset = heater_id % 2 == 0 ? pi : 0.0;
    Rng rng(derive_seed(seed, 0xca1, static_cast<std::uint64_t>(heater_id)));
    for (double v : voltage_grid) {
        const double phase = phase_from_voltage(model, v);
        double power = 0.5 * transmission * (1.0 + std::cos(phase + sweep.routing_offset));
        if (detector_sigma > 0.0) power += detector_sigma * rng.normal();
        sweep.samples.push_back({v, power});
    }
    return sweep;
}

HeaterCalibration fit_phase_response(const CalibrationSweep& sweep) {
    const auto m = static_cast<Eigen::Index>(sweep.samples.size());
    if (m < 8) throw FitDegeneracyError("phase fit needs at least 8 samples, got " + std::to_string(m));
    if (!(sweep.resistance > 0.0)) throw ValidationError("sweep resistance must be > 0");

    Eigen::VectorXd x(m);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        x(i) = sweep.samples[i].volts * sweep.samples[i].volts / sweep.resistance;
        y(i) = sweep.samples[i].power;
    }
    const double y_range = y.maxCoeff() - y.minCoeff();
    if (!(y_range > 1e-12 * std::max(1e-300, y.cwiseAbs().maxCoeff()))) {
        throw FitDegeneracyError("heater " + std::to_string(sweep.heater_id) + ": constant response");
    }
    std::vector<double> xs(x.data(), x.data() + m);
    std::sort(xs.begin(), xs.end());
    const double x_span = xs.back() - xs.front();
    double max_gap = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) max_gap = std::max(max_gap, xs[i] - xs[i - 1]);
    if (!(x_span > 0.0)) throw FitDegeneracyError("sweep has no power span");

    const double delta = sweep.routing_offset;
    // For fixed alpha the model is linear in (A, B cos phi0, B sin phi0).
    auto project = [&](double alpha, Eigen::Vector3d& coef) {
        Eigen::MatrixXd d(m, 3);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double psi = alpha * x(i) + delta;
            d(i, 0) = 1.0;
            d(i, 1) = std::cos(psi);
            d(i, 2) = -std::sin(psi);
        }
        coef = (d.transpose() * d).ldlt().solve(d.transpose() * y);
        return (d * coef - y).squaredNorm();
    };

    const double alpha_lo = pi / x_span;
    const double alpha_hi = std::max(alpha_lo * 2.0, pi / max_gap);
    constexpr int kGrid = 4000;
    double best_alpha = alpha_lo;
    double best_rss = std::numeric_limits<double>::infinity();
    Eigen::Vector3d coef;
    for (int k = 0; k <= kGrid; ++k) {
        const double a = alpha_lo + (alpha_hi - alpha_lo) * k / kGrid;
        const double rss = project(a, coef);
        if (rss < best_rss) {
            best_rss = rss;
            best_alpha = a;
        }
    }
    project(best_alpha, coef);

    Eigen::Vector4d start(coef(0), std::hypot(coef(1), coef(2)), std::atan2(coef(2), coef(1)), best_alpha);
    auto residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i) r(i) = p(0) + p(1) * std::cos(p(2) + p(3) * x(i) + delta) - y(i);
        return r;
    };
    auto jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd j(m, 4);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double psi = p(2) + p(3) * x(i) + delta;
            j(i, 0) = 1.0;
            j(i, 1) = std::cos(psi);
            j(i, 2) = -p(1) * std::sin(psi);
            j(i, 3) = -p(1) * std::sin(psi) * x(i);
        }
        return j;
    };
    const auto fit = levenberg_marquardt(residuals, jacobian, start);

    HeaterCalibration out;
    out.heater_id = sweep.heater_id;
    out.offset = fit.params(0);
    out.amplitude = fit.params(1);
    double phi0 = fit.params(2);
    if (out.amplitude < 0.0) {
        out.amplitude = -out.amplitude;
        phi0 += pi;
    }
    out.phi0 = normalize_phase(phi0);
    out.alpha = fit.params(3);
    out.residual_rms = std::sqrt(fit.rss / static_cast<double>(m));
    Eigen::MatrixXd cov;
    parameter_covariance(fit, static_cast<int>(m), cov);
    out.covariance = cov;

    if (!(out.amplitude > 1e-9 * std::max(1.0, std::abs(out.offset)))) {
        throw FitDegeneracyError("heater " + std::to_string(sweep.heater_id) + ": no fringe visible");
    }
    if (!(out.alpha * x_span > 2.0 * pi)) {
        throw FitDegeneracyError("heater " + std::to_string(sweep.heater_id) + ": sweep spans " +
                                 std::to_string(out.alpha * x_span) + " rad, less than one fringe");
    }
    return out;
}

bool CalibrationRecord::accepted() const {
    return std::all_of(heaters.begin(), heaters.end(),
                       [&](const HeaterCalibration& h) { return h.residual_rms < residual_threshold; });
}

const HeaterCalibration& CalibrationRecord::at(int heater_id) const {
    if (heater_id < 0 || heater_id >= static_cast<int>(heaters.size())) {
        throw LookupError("calibration has no heater " + std::to_string(heater_id));
    }
    return heaters[heater_id];
}

CalibrationRecord calibrate_profile(const HardwareProfile& profile, const CalibrationOptions& options) {
    profile.validate();
    CalibrationRecord record;
    record.residual_threshold = options.residual_threshold;
    record.heaters.resize(profile.heaters.size());
    parallel_for(profile.heaters.size(), options.workers, [&](std::size_t i) {
        const int id = static_cast<int>(i);
        const auto grid = default_voltage_grid(profile.heaters[i], options.points);
        const auto sweep = simulate_calibration_sweep(profile, id, grid, options.detector_sigma, options.seed);
        record.heaters[i] = fit_phase_response(sweep);
    });
    return record;
}

CalibrationRecord exact_calibration(const HardwareProfile& profile) {
    CalibrationRecord record;
    record.heaters.resize(profile.heaters.size());
    for (std::size_t i = 0; i < profile.heaters.size(); ++i) {
        record.heaters[i].heater_id = static_cast<int>(i);
        record.heaters[i].phi0 = profile.heaters[i].phi0;
        record.heaters[i].alpha = profile.heaters[i].alpha;
    }
    return record;
}

std::vector<double> heater_targets(const MeshSettings& settings) {
    std::vector<double> out;
    out.reserve(2 * settings.cells().size());
    for (const auto& c : settings.cells()) {
        out.push_back(c.theta);
        out.push_back(c.phi);
    }
    return out;
}

std::vector<double> solve_voltages(const HardwareProfile& profile, const CalibrationRecord& calibration,
                                   const MeshSettings& target) {
    if (target.n() != profile.n) throw ValidationError("target and profile have different mode counts");
    const int h = profile.heater_count();
    if (static_cast<int>(calibration.heaters.size()) != h) {
        throw ValidationError("calibration covers " + std::to_string(calibration.heaters.size()) + " of " +
                              std::to_string(h) + " heaters");
    }
    const auto targets = heater_targets(target);

    Eigen::MatrixXd c = profile.crosstalk.entries();
    Eigen::VectorXd phi0(h);
    Eigen::VectorXd p_max(h);
    for (int i = 0; i < h; ++i) {
        c(i, i) = calibration.heaters[i].alpha;
        phi0(i) = calibration.heaters[i].phi0;
        p_max(i) = profile.heaters[i].max_power();
    }
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(c);

    // Branch k_i: phase target = targets_i + 2 pi k_i, starting at the
    // smallest non-negative own-heater power.
    std::vector<long> k(h);
    for (int i = 0; i < h; ++i) {
        k[i] = static_cast<long>(std::ceil((phi0(i) - targets[i]) / kTwoPi - 1e-12));
    }
    std::set<std::vector<long>> visited;
    Eigen::VectorXd power;
    std::vector<int> bad;
    for (int iter = 0; iter < 200; ++iter) {
        if (!visited.insert(k).second) break;
        Eigen::VectorXd rhs(h);
        for (int i = 0; i < h; ++i) rhs(i) = targets[i] + kTwoPi * static_cast<double>(k[i]) - phi0(i);
        power = lu.solve(rhs);
        bad.clear();
        for (int i = 0; i < h; ++i) {
            const double slack = 1e-12 * p_max(i);
            if (power(i) < -slack) {
                ++k[i];
                bad.push_back(i);
            } else if (power(i) > p_max(i) + slack) {
                --k[i];
                bad.push_back(i);
            }
        }
        if (bad.empty()) {
            std::vector<double> volts(h);
            for (int i = 0; i < h; ++i) {
                const double p = std::clamp(power(i), 0.0, p_max(i));
                volts[i] = std::min(std::sqrt(p * profile.heaters[i].resistance), profile.heaters[i].v_max);
            }
            return volts;
        }
    }
    std::ostringstream msg;
    msg << "no 2 pi branch keeps heater power in range for heater(s)";
    for (std::size_t j = 0; j < bad.size() && j < 16; ++j) msg << ' ' << bad[j];
    if (bad.size() > 16) msg << " ... (" << bad.size() << " total)";
    throw InfeasibleError(msg.str());
}

AmplitudeMatrix measure_amplitude_matrix(const HardwareProfile& profile, const MeshSettings& settings,
                                         std::uint64_t seed) {
    if (settings.n() != profile.n) throw ValidationError("settings and profile have different mode counts");
    auto errors = profile.static_cell_errors();
    Rng rng(seed);
    // Draws are consumed even at zero sigma so a given seed gives the same
    // unit jitter pattern at every noise level.
    for (auto& e : errors) {
        e.theta = profile.internal_phase_noise_sigma * rng.normal();
        e.phi = profile.phase_noise_sigma * rng.normal();
    }
    const TransferMatrix t = propagate(settings, profile.loss, errors);
    RealMatrix powers = t.matrix().cwiseAbs2();
    if (profile.detector_noise_sigma > 0.0) {
        for (Eigen::Index j = 0; j < powers.cols(); ++j) {
            for (Eigen::Index i = 0; i < powers.rows(); ++i) {
                powers(i, j) = std::max(0.0, powers(i, j) + profile.detector_noise_sigma * rng.normal());
            }
        }
    }
    return AmplitudeMatrix::from_powers(powers);
}

std::vector<double> insertion_loss_per_mode(const HardwareProfile& profile) {
    const TransferMatrix t = apply_loss(MeshSettings(profile.n), profile.loss);
    std::vector<double> out(profile.n);
    for (int m = 0; m < profile.n; ++m) out[m] = -10.0 * std::log10(std::norm(t(m, m)));
    return out;
}

TransferMatrix apply_loss(const MeshSettings& settings, const HardwareProfile& profile) {
    return propagate(settings, profile.loss, profile.static_cell_errors());
}

NoiseFitResult fit_phase_noise(const HardwareProfile& base, const NoiseFitTargets& targets) {
    if (base.n != targets.n) throw ValidationError("noise fit: profile n differs from target n");
    if (targets.haar_count < 1 || targets.permutation_count < 1) {
        throw ValidationError("noise fit needs at least one Haar and one permutation target");
    }

    struct Item {
        Unitary target;
        MeshSettings settings;
        std::uint64_t seed;
    };
    std::vector<Item> haar;
    std::vector<Item> perms;
    haar.reserve(targets.haar_count);
    for (int i = 0; i < targets.haar_count; ++i) {
        auto u = haar_random(targets.n, derive_seed(targets.seed, 0, i));
        auto s = clements_decompose(u).settings;
        haar.push_back({std::move(u), std::move(s), derive_seed(targets.seed, 2, i)});
    }
    const auto ensemble = permutation_ensemble(targets.n, targets.permutation_count, derive_seed(targets.seed, 1));
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        auto u = permutation_unitary(ensemble[i]);
        auto s = clements_decompose(u).settings;
        perms.push_back({std::move(u), std::move(s), derive_seed(targets.seed, 3, i)});
    }

    auto mean_fidelity = [&](const HardwareProfile& p, const std::vector<Item>& items) {
        std::vector<double> f(items.size());
        parallel_for(items.size(), targets.workers, [&](std::size_t i) {
            f[i] = amplitude_fidelity(items[i].target, measure_amplitude_matrix(p, items[i].settings, items[i].seed));
        });
        return std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(f.size());
    };
    // Unknowns are the variances; infidelity is close to linear in them.
    auto evaluate = [&](const Eigen::Vector2d& var) {
        HardwareProfile p = base;
        p.phase_noise_sigma = std::sqrt(std::max(var(0), 0.0));
        p.internal_phase_noise_sigma = std::sqrt(std::max(var(1), 0.0));
        return Eigen::Vector2d(mean_fidelity(p, haar), mean_fidelity(p, perms));
    };

    const Eigen::Vector2d goal(targets.haar_fidelity, targets.permutation_fidelity);
    Eigen::Vector2d var(0.01, 0.002);
    Eigen::Vector2d f = evaluate(var);
    NoiseFitResult result;
    for (int it = 0; it < targets.max_iterations; ++it) {
        result.iterations = it + 1;
        if ((f - goal).cwiseAbs().maxCoeff() < targets.tolerance) {
            result.converged = true;
            break;
        }
        Eigen::Matrix2d jac;
        for (int d = 0; d < 2; ++d) {
            Eigen::Vector2d probe = var;
            const double step = std::max(0.05 * var(d), 1e-5);
            probe(d) += step;
            jac.col(d) = (evaluate(probe) - f) / step;
        }
        Eigen::Vector2d next = var + jac.fullPivLu().solve(goal - f);
        next = next.cwiseMax(0.0);
        if (!next.allFinite()) break;
        var = next;
        f = evaluate(var);
    }
    if (!result.converged && (f - goal).cwiseAbs().maxCoeff() < targets.tolerance) result.converged = true;
    result.external_sigma = std::sqrt(var(0));
    result.internal_sigma = std::sqrt(var(1));
    result.haar_mean = f(0);
    result.permutation_mean = f(1);
    return result;
}

void to_json(nlohmann::json& j, const HardwareProfile& p) {
    nlohmann::json heaters = nlohmann::json::array();
    for (std::size_t i = 0; i < p.heaters.size(); ++i) {
        const auto& h = p.heaters[i];
        heaters.push_back({{"id", i},
                           {"phi0_radians", h.phi0},
                           {"alpha_radians_per_watt", h.alpha},
                           {"resistance_ohms", h.resistance},
                           {"v_max_volts", h.v_max}});
    }
    nlohmann::json crosstalk = nlohmann::json::array();
    const auto& c = p.crosstalk.entries();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index k = 0; k < c.cols(); ++k) {
            if (i != k && c(i, k) != 0.0) crosstalk.push_back({i, k, c(i, k)});
        }
    }
    j = nlohmann::json{{"n", p.n},
                       {"heaters", std::move(heaters)},
                       {"crosstalk_radians_per_watt", std::move(crosstalk)},
                       {"coupling_loss_db_per_facet", p.loss.coupling_loss_db_per_facet},
                       {"propagation_loss_db_per_cm", p.loss.propagation_loss_db_per_cm},
                       {"path_length_cm", p.loss.path_length_cm},
                       {"splitter_errors", p.splitter_errors},
                       {"phase_noise_sigma_radians", p.phase_noise_sigma},
                       {"internal_phase_noise_sigma_radians", p.internal_phase_noise_sigma},
                       {"detector_noise_sigma", p.detector_noise_sigma}};
}

HardwareProfile hardware_profile_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{"n",
                                             "heaters",
                                             "crosstalk_radians_per_watt",
                                             "coupling_loss_db_per_facet",
                                             "propagation_loss_db_per_cm",
                                             "path_length_cm",
                                             "splitter_errors",
                                             "phase_noise_sigma_radians",
                                             "internal_phase_noise_sigma_radians",
                                             "detector_noise_sigma"};
    if (!j.is_object()) throw ValidationError("hardware profile must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.contains(key)) throw ValidationError("hardware profile: unknown field '" + key + "'");
    }
    try {
        HardwareProfile p;
        p.n = j.at("n").get<int>();
        for (const auto& h : j.at("heaters")) {
            HeaterModel m;
            m.phi0 = h.at("phi0_radians").get<double>();
            m.alpha = h.at("alpha_radians_per_watt").get<double>();
            m.resistance = h.at("resistance_ohms").get<double>();
            m.v_max = h.at("v_max_volts").get<double>();
            if (h.at("id").get<std::size_t>() != p.heaters.size()) {
                throw ValidationError("hardware profile: heaters must be listed in id order");
            }
            p.heaters.push_back(m);
        }
        Eigen::MatrixXd c = CrosstalkMatrix::diagonal(p.heaters).entries();
        if (j.contains("crosstalk_radians_per_watt")) {
            for (const auto& e : j.at("crosstalk_radians_per_watt")) {
                const auto i = e.at(0).get<Eigen::Index>();
                const auto k = e.at(1).get<Eigen::Index>();
                if (i < 0 || k < 0 || i >= c.rows() || k >= c.cols() || i == k) {
                    throw ValidationError("hardware profile: bad crosstalk index");
                }
                c(i, k) = e.at(2).get<double>();
            }
        }
        p.crosstalk = CrosstalkMatrix(std::move(c));
        p.loss.coupling_loss_db_per_facet = j.value("coupling_loss_db_per_facet", 0.0);
        p.loss.propagation_loss_db_per_cm = j.value("propagation_loss_db_per_cm", 0.0);
        p.loss.path_length_cm = j.value("path_length_cm", std::vector<double>(p.n, 0.0));
        p.splitter_errors = j.value("splitter_errors", std::vector<double>{});
        p.phase_noise_sigma = j.value("phase_noise_sigma_radians", 0.0);
        p.internal_phase_noise_sigma = j.value("internal_phase_noise_sigma_radians", 0.0);
        p.detector_noise_sigma = j.value("detector_noise_sigma", 0.0);
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("hardware profile: ") + e.what());
    }
}

void write_calibration_csv(std::ostream& out, const CalibrationRecord& record) {
    out << "heater_id,phi0,alpha,residual\n";
    char buf[128];
    for (const auto& h : record.heaters) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", h.heater_id, h.phi0, h.alpha, h.residual_rms);
        out << buf;
    }
}

}  // namespace qpp
