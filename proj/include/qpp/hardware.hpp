#pragma once

// Physical layer of the processor: thermo-optic heaters, thermal crosstalk,
// losses, coupler imperfections, calibration and simulated measurements.
//
// Heater ids: cell k (in address order) owns heater 2k (internal theta) and
// heater 2k+1 (external phi). Output phases are a compiler artifact with no
// physical heater.

#include "qpp/analysis.hpp"
#include "qpp/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpp {

struct HeaterModel {
    double phi0 = 0.0;          // radians at zero drive
    double alpha = 0.0;         // radians per watt
    double resistance = 100.0;  // ohms
    double v_max = 0.0;         // volts

    double max_power() const { return v_max * v_max / resistance; }
    double phase_span() const { return alpha * max_power(); }
};

// H x H coupling matrix in radians per watt: entry (i, j) is the phase on
// heater i per watt dissipated in heater j. The diagonal is each heater's
// own alpha.
class CrosstalkMatrix {
public:
    CrosstalkMatrix() = default;

    // Throws ValidationError unless the matrix is square with every
    // off-diagonal magnitude strictly below its row's diagonal entry.
    explicit CrosstalkMatrix(Eigen::MatrixXd entries);

    static CrosstalkMatrix diagonal(std::span<const HeaterModel> heaters);

    int size() const { return static_cast<int>(entries_.rows()); }
    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(int i, int j) const { return entries_(i, j); }

private:
    Eigen::MatrixXd entries_;
};

struct HardwareProfile {
    int n = 0;
    std::vector<HeaterModel> heaters;  // 2 per cell
    CrosstalkMatrix crosstalk;
    LossBudget loss;
    // Per-coupler deviation of the power splitting ratio from 50:50 (the
    // coupler transfers 1/2 + e of the power across): entry 2k is the input
    // coupler of cell k, 2k+1 its output coupler. Empty means ideal.
    std::vector<double> splitter_errors;
    double phase_noise_sigma = 0.0;           // jitter on external phases (radians)
    double internal_phase_noise_sigma = 0.0;  // jitter on internal phases (radians)
    double detector_noise_sigma = 0.0;        // additive, relative to injected power

    int heater_count() const { return static_cast<int>(heaters.size()); }

    // Throws ValidationError when any invariant is violated.
    void validate() const;

    // Per-cell static imperfections (no jitter), splitting ratios converted
    // to coupler mixing angles.
    std::vector<CellError> static_cell_errors() const;
};

struct CrosstalkOptions {
    double same_cell = 0.02;  // theta <-> phi heater of one cell, fraction of alpha
    double neighbor = 0.01;   // heaters of adjacent cells
};

// Heaters drawn from `seed` (phi0 uniform, alpha and resistance within
// +-10% / +-5% of 2 pi rad/W and 100 ohm), v_max giving a 3 pi span,
// nearest-neighbour crosstalk. No loss, no noise, ideal couplers.
HardwareProfile ideal_profile(int n, std::uint64_t seed = 0, const CrosstalkOptions& crosstalk = {});

// ideal_profile plus 0.9 dB/facet coupling and 0.07 dB/cm propagation over a
// 15.7 cm path per mode.
HardwareProfile default_profile(int n, std::uint64_t seed = 0);

// default_profile with the phase-jitter levels produced by fit_phase_noise()
// for n = 20 (see kCalibratedExternalSigma / kCalibratedInternalSigma).
HardwareProfile calibrated_profile(int n, std::uint64_t seed = 0);

inline constexpr double kDefaultCouplingLossDb = 0.9;
inline constexpr double kDefaultPropagationLossDbPerCm = 0.07;
inline constexpr double kDefaultPathLengthCm = 15.7;
inline constexpr double kCalibratedExternalSigma = 0.1355;
inline constexpr double kCalibratedInternalSigma = 0.0459;

// Gaussian splitter errors of standard deviation `sigma`, one per coupler.
std::vector<double> random_splitter_errors(int n, double sigma, std::uint64_t seed);

// phi0 + alpha v^2 / R + ambient, where ambient is the crosstalk phase from
// the other heaters. Throws ValidationError when v is outside [0, v_max].
double phase_from_voltage(const HeaterModel& model, double volts, double ambient_phase = 0.0);

// Phase of every heater for a full drive vector, crosstalk included.
std::vector<double> heater_phases(const HardwareProfile& profile, std::span<const double> volts);

// Mesh settings the hardware realizes for a drive vector.
MeshSettings realized_settings(const HardwareProfile& profile, std::span<const double> volts,
                               std::span<const double> output_phases);

struct SweepSample {
    double volts = 0.0;
    double power = 0.0;
};

// Detected power while one heater is driven, all others at 0 V. The power
// follows A + B cos(phase(v) + routing_offset).
struct CalibrationSweep {
    int heater_id = 0;
    double resistance = 0.0;
    double routing_offset = 0.0;
    std::vector<SweepSample> samples;
};

// Voltages giving `points` equally spaced heater powers over [0, v_max].
std::vector<double> default_voltage_grid(const HeaterModel& model, int points = 64);

// Throws LookupError for an unknown heater, ValidationError for a grid point
// outside [0, v_max].
CalibrationSweep simulate_calibration_sweep(const HardwareProfile& profile, int heater_id,
                                            std::span<const double> voltage_grid, double detector_sigma = 0.0,
                                            std::uint64_t seed = 0);

struct HeaterCalibration {
    int heater_id = 0;
    double phi0 = 0.0;
    double alpha = 0.0;
    double offset = 0.0;     // A
    double amplitude = 0.0;  // B
    double residual_rms = 0.0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  // (A, B, phi0, alpha)
};

// Least-squares fit of (A, B, phi0, alpha). Throws FitDegeneracyError for
// fewer than 8 samples, a flat response, or less than one fringe of span.
HeaterCalibration fit_phase_response(const CalibrationSweep& sweep);

struct CalibrationRecord {
    std::vector<HeaterCalibration> heaters;  // indexed by heater id
    double residual_threshold = 1e-2;

    bool accepted() const;
    const HeaterCalibration& at(int heater_id) const;
};

struct CalibrationOptions {
    int points = 64;
    double detector_sigma = 0.0;
    std::uint64_t seed = 0;
    double residual_threshold = 1e-2;
    int workers = 1;
};

// Sweeps and fits every heater of the profile.
CalibrationRecord calibrate_profile(const HardwareProfile& profile, const CalibrationOptions& options = {});

// Record with the profile's true parameters (what a perfect calibration
// would return).
CalibrationRecord exact_calibration(const HardwareProfile& profile);

// Solves phi_target = phi0 + C p for heater powers, picking 2 pi branches so
// every power stays within [0, v_max^2 / R]. Returns volts per heater id.
// Throws InfeasibleError naming the heaters when no branch assignment works.
std::vector<double> solve_voltages(const HardwareProfile& profile, const CalibrationRecord& calibration,
                                   const MeshSettings& target);

// Heater phase targets in heater-id order for a set of mesh settings.
std::vector<double> heater_targets(const MeshSettings& settings);

// Simulated |U_exp|: coherent light into each input through the lossy,
// imperfect mesh (phase jitter drawn from `seed`, static splitter errors,
// detector noise), column-normalized output powers, square roots.
AmplitudeMatrix measure_amplitude_matrix(const HardwareProfile& profile, const MeshSettings& settings,
                                         std::uint64_t seed);

// Light into input i, detected at output i with every cell in the bar state.
std::vector<double> insertion_loss_per_mode(const HardwareProfile& profile);

TransferMatrix apply_loss(const MeshSettings& settings, const HardwareProfile& profile);

struct NoiseFitTargets {
    int n = 20;
    double haar_fidelity = 0.974;
    double permutation_fidelity = 0.995;
    int haar_count = 200;
    int permutation_count = 190;
    std::uint64_t seed = 0x5eed;
    double tolerance = 2e-4;
    int max_iterations = 12;
    int workers = 1;
};

struct NoiseFitResult {
    double external_sigma = 0.0;
    double internal_sigma = 0.0;
    double haar_mean = 0.0;
    double permutation_mean = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Fits (external, internal) phase-jitter levels so that the mean amplitude
// fidelity of a Haar ensemble and a permutation ensemble hit the targets.
// Uses common random numbers so the objective is smooth in the sigmas.
NoiseFitResult fit_phase_noise(const HardwareProfile& base, const NoiseFitTargets& targets = {});

void to_json(nlohmann::json& j, const HardwareProfile& p);
HardwareProfile hardware_profile_from_json(const nlohmann::json& j);

// heater_id,phi0,alpha,residual
void write_calibration_csv(std::ostream& out, const CalibrationRecord& record);

}  // namespace qpp
