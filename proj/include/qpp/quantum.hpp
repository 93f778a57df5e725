#pragma once

// Two-photon interference on the mesh: coincidence probabilities, routing a
// photon pair onto a single tunable beam splitter, HOM scans and dip fits.

#include "qpp/analysis.hpp"
#include "qpp/hardware.hpp"
#include "qpp/mesh.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <json.hpp>

namespace qpp {

struct PhotonPairSource {
    double center_wavelength_nm = 1562.0;
    double bandwidth_fwhm_nm = 12.0;
    double overlap_at_zero_delay = 1.0 / 1.1;  // 1 / Schmidt number
    double pair_rate = 1.0e4;                  // pairs/s, count scaling only

    static PhotonPairSource from_schmidt_number(double k, double center_nm = 1562.0, double fwhm_nm = 12.0);

    // Throws ValidationError for overlap outside [0, 1] or bandwidth <= 0.
    void validate() const;

    // Standard deviation (in path length) of the Gaussian overlap decay for
    // Gaussian spectra: sqrt(ln 2) lambda^2 / (pi dlambda).
    double coherence_length_um() const;

    // x(tau) = x0 exp(-tau^2 / (2 sigma_L^2)).
    double overlap(double delay_um) const;
};

// P = |U_ca U_db|^2 + |U_cb U_da|^2 + 2x Re(U_ca U_db conj(U_cb U_da)).
// Throws ValidationError for repeated modes, out-of-range modes or x outside
// [0, 1].
double two_photon_coincidence(const TransferMatrix& u, std::array<int, 2> inputs, std::array<int, 2> outputs,
                              double overlap);

enum class CellState { bar, cross, half };

CellSetting cell_setting(CellState state);

struct RoutingPlan {
    int n = 0;
    CellAddress target;
    std::array<int, 2> inputs{};   // mode of the photon reaching the upper / lower target port
    std::array<int, 2> outputs{};  // mode where the upper / lower target output exits
    std::map<CellAddress, CellState> cell_states;

    MeshSettings settings() const;
};

// Deterministic staircase plan: in the column just before (and just after)
// the target, the upper photon uses the cell above and the lower photon the
// cell below in the cross state when those cells exist; every other cell is
// bar. Throws ValidationError for an invalid target.
RoutingPlan route_to_tbs(int n, CellAddress target);

// Cells each photon's classical light visits (non-zero power on an input
// arm) under the ideal plan settings.
struct PathTrace {
    std::array<std::set<CellAddress>, 2> visited;
    std::array<int, 2> exit_modes{};  // where each photon leaves when the target is bar
};
PathTrace trace_paths(const RoutingPlan& plan);

// True when the two photon paths share no cell except the target.
bool verify_isolation(const RoutingPlan& plan);

struct DipFit {
    double visibility = 0.0;
    double center = 0.0;    // um
    double width = 0.0;     // um, Gaussian standard deviation
    double baseline = 0.0;  // normalized coincidence far from the dip
    double visibility_sigma = 0.0;
    bool uncertain = false;  // covariance rank-deficient or V below 3 sigma
};

// Model y = b (1 - V exp(-(tau - tau0)^2 / (2 w^2))). Pass 1 fits all four
// parameters. Pass 2 recomputes the baseline from the points more than two
// fitted widths from the center (correcting them for the residual dip tail)
// and refits V, tau0, w at that baseline. Throws ValidationError for fewer
// than 10 points, BaselineUndefinedError when no point lies beyond 2 widths.
DipFit fit_gaussian_dip(std::span<const double> delays_um, std::span<const double> coincidences);

struct HomScanOptions {
    std::vector<double> delays_um;   // empty: 121 points over +-6 coherence lengths
    std::uint64_t seed = 0;          // phase jitter and count noise
    double count_noise = 0.0;        // relative (multiplicative) noise per point
    double extra_delay_um = 0.0;     // path added to the upper photon
};

struct HomScan {
    std::vector<double> delays_um;
    std::vector<double> raw;          // coincidence probability
    std::vector<double> coincidences; // normalized to the far-from-dip mean
    DipFit fit;
    bool fitted = false;
};

std::vector<double> default_delays(const PhotonPairSource& source, int points = 121, double half_range_sigmas = 6.0);

// Lossy, imperfect transfer matrix the plan realizes on `profile`, phase
// jitter drawn once from `seed`.
TransferMatrix realized_transfer(const RoutingPlan& plan, const HardwareProfile& profile, std::uint64_t seed);

HomScan hom_scan(const RoutingPlan& plan, const PhotonPairSource& source, const HardwareProfile& profile,
                 const HomScanOptions& options = {});

struct VisibilityEntry {
    CellAddress cell;
    double visibility = 0.0;
    DipFit fit;
};

struct VisibilityMap {
    int n = 0;
    std::vector<VisibilityEntry> entries;  // address order
    EnsembleStatistics stats;

    // Visibilities grouped by cell row (index = row) or mesh column.
    std::vector<std::vector<double>> by_row() const;
    std::vector<std::vector<double>> by_column() const;
};

struct VisibilityMapOptions {
    HomScanOptions scan;
    int workers = 1;
};

VisibilityMap hom_visibility_map(int n, const PhotonPairSource& source, const HardwareProfile& profile,
                                 const VisibilityMapOptions& options = {});

// Rows are cell rows 0..n-2, columns are mesh columns; empty where the mesh
// has no cell.
void write_visibility_grid_csv(std::ostream& out, const VisibilityMap& map);
void write_hom_scan_csv(std::ostream& out, const HomScan& scan);

// Main-diagonal path: photon A enters mode 0 and crosses at cells (k, k),
// k = 0..n-3; photon B enters mode n-1 through bar cells; they meet at cell
// (n-2, n-2) and leave on the bottom two outputs.
RoutingPlan diagonal_plan(int n);

// Heaters on photon A's arm: theta and phi of the crossing cells plus phi of
// the meeting cell.
std::vector<int> diagonal_heaters(int n);

struct DelaySweepPoint {
    double drive_radians = 0.0;  // phase applied to every driven heater
    double path_shift_um = 0.0;  // model: heaters * drive * lambda / (2 pi)
    double fitted_center_um = 0.0;
    double visibility = 0.0;
};

struct DelaySweep {
    RoutingPlan plan;
    std::vector<int> heaters;
    double wavelength_um = 0.0;
    std::vector<DelaySweepPoint> points;
};

// Each drive level adds drive * lambda / (2 pi) of path per driven heater to
// photon A; the routing settings themselves are held fixed. Throws
// ValidationError for a drive outside [0, span] of any driven heater.
DelaySweep diagonal_delay_sweep(int n, const HardwareProfile& profile, const PhotonPairSource& source,
                                std::span<const double> drive_radians, std::uint64_t seed = 0);

void to_json(nlohmann::json& j, const DipFit& f);
void to_json(nlohmann::json& j, const RoutingPlan& p);
void to_json(nlohmann::json& j, const HomScan& s);
void to_json(nlohmann::json& j, const VisibilityMap& m);
void to_json(nlohmann::json& j, const DelaySweep& s);

}  // namespace qpp
