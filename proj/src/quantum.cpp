#include "qpp/quantum.hpp"

#include "qpp/error.hpp"
#include "qpp/least_squares.hpp"
#include "qpp/parallel.hpp"
#include "qpp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace qpp {

namespace {

using std::numbers::pi;

void check_modes(int n, std::array<int, 2> modes, const char* what) {
    if (modes[0] == modes[1]) {
        throw ValidationError(std::string(what) + " modes must differ (both are " + std::to_string(modes[0]) + ")");
    }
    for (int m : modes) {
        if (m < 0 || m >= n) throw ValidationError(std::string(what) + " mode " + std::to_string(m) + " out of range");
    }
}

double gaussian(double tau, double center, double width) {
    const double z = (tau - center) / width;
    return std::exp(-0.5 * z * z);
}

// Baseline for display: mean over the 20% of samples farthest from zero
// delay.
double far_baseline(std::span<const double> delays, std::span<const double> values) {
    std::vector<std::size_t> order(delays.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(delays[a]) > std::abs(delays[b]); });
    const std::size_t take = std::max<std::size_t>(1, delays.size() / 5);
    double sum = 0.0;
    for (std::size_t k = 0; k < take; ++k) sum += values[order[k]];
    return sum / static_cast<double>(take);
}

}  // namespace

PhotonPairSource PhotonPairSource::from_schmidt_number(double k, double center_nm, double fwhm_nm) {
    if (!(k >= 1.0)) throw ValidationError("Schmidt number must be >= 1");
    PhotonPairSource s;
    s.center_wavelength_nm = center_nm;
    s.bandwidth_fwhm_nm = fwhm_nm;
    s.overlap_at_zero_delay = 1.0 / k;
    return s;
}

void PhotonPairSource::validate() const {
    if (!(bandwidth_fwhm_nm > 0.0)) throw ValidationError("source bandwidth must be > 0 nm");
    if (!(center_wavelength_nm > 0.0)) throw ValidationError("source wavelength must be > 0 nm");
    if (!(overlap_at_zero_delay >= 0.0 && overlap_at_zero_delay <= 1.0)) {
        throw ValidationError("source overlap must lie in [0, 1]");
    }
}

double PhotonPairSource::coherence_length_um() const {
    validate();
    const double lambda_um = center_wavelength_nm * 1e-3;
    const double dlambda_um = bandwidth_fwhm_nm * 1e-3;
    return std::sqrt(std::log(2.0)) * lambda_um * lambda_um / (pi * dlambda_um);
}

double PhotonPairSource::overlap(double delay_um) const {
    return overlap_at_zero_delay * gaussian(delay_um, 0.0, coherence_length_um());
}

double two_photon_coincidence(const TransferMatrix& u, std::array<int, 2> inputs, std::array<int, 2> outputs,
                              double overlap) {
    check_modes(u.n(), inputs, "input");
    check_modes(u.n(), outputs, "output");
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ValidationError("overlap must lie in [0, 1]");
    const auto [a, b] = inputs;
    const auto [c, d] = outputs;
    const Complex direct = u(c, a) * u(d, b);
    const Complex exchange = u(c, b) * u(d, a);
    return std::norm(direct) + std::norm(exchange) + 2.0 * overlap * std::real(direct * std::conj(exchange));
}

CellSetting cell_setting(CellState state) {
    switch (state) {
        case CellState::bar: return CellSetting::bar();
        case CellState::cross: return CellSetting::cross();
        case CellState::half: return CellSetting::balanced();
    }
    return CellSetting::bar();
}

MeshSettings RoutingPlan::settings() const {
    std::map<CellAddress, CellSetting> cells;
    for (const auto& [address, state] : cell_states) cells.emplace(address, cell_setting(state));
    return MeshSettings(n, cells, std::vector<double>(n, 0.0));
}

RoutingPlan route_to_tbs(int n, CellAddress target) {
    if (!is_valid_address(n, target)) {
        throw ValidationError("no cell at column " + std::to_string(target.column) + ", row " +
                              std::to_string(target.row) + " for n = " + std::to_string(n));
    }
    RoutingPlan plan;
    plan.n = n;
    plan.target = target;
    for (const auto& a : cell_addresses(n)) plan.cell_states[a] = CellState::bar;
    plan.cell_states[target] = CellState::half;

    const int r = target.row;
    auto spread = [&](int column) {
        std::array<int, 2> modes{r, r + 1};
        if (column < 0 || column >= column_count(n)) return modes;
        const CellAddress above{column, r - 1};
        const CellAddress below{column, r + 1};
        if (r >= 1 && is_valid_address(n, above)) {
            plan.cell_states[above] = CellState::cross;
            modes[0] = r - 1;
        }
        if (is_valid_address(n, below)) {
            plan.cell_states[below] = CellState::cross;
            modes[1] = r + 2;
        }
        return modes;
    };
    plan.inputs = spread(target.column - 1);
    plan.outputs = spread(target.column + 1);
    return plan;
}

PathTrace trace_paths(const RoutingPlan& plan) {
    const int n = plan.n;
    const MeshSettings settings = plan.settings().with_cell(plan.target, CellSetting::bar());
    const auto addresses = cell_addresses(n);
    const auto cells = settings.cells();
    PathTrace trace;
    for (int p = 0; p < 2; ++p) {
        Eigen::VectorXcd field = Eigen::VectorXcd::Zero(n);
        field(plan.inputs[p]) = 1.0;
        for (std::size_t k = 0; k < addresses.size(); ++k) {
            const int m = addresses[k].row;
            if (std::norm(field(m)) + std::norm(field(m + 1)) > 1e-20) trace.visited[p].insert(addresses[k]);
            const CellMatrix t = cell_transfer(cells[k]);
            const Complex top = t(0, 0) * field(m) + t(0, 1) * field(m + 1);
            const Complex bottom = t(1, 0) * field(m) + t(1, 1) * field(m + 1);
            field(m) = top;
            field(m + 1) = bottom;
        }
        Eigen::Index exit = 0;
        field.cwiseAbs2().maxCoeff(&exit);
        trace.exit_modes[p] = static_cast<int>(exit);
    }
    return trace;
}

bool verify_isolation(const RoutingPlan& plan) {
    const PathTrace trace = trace_paths(plan);
    std::vector<CellAddress> shared;
    std::set_intersection(trace.visited[0].begin(), trace.visited[0].end(), trace.visited[1].begin(),
                          trace.visited[1].end(), std::back_inserter(shared));
    return shared.size() == 1 && shared.front() == plan.target && trace.exit_modes == plan.outputs;
}

DipFit fit_gaussian_dip(std::span<const double> delays, std::span<const double> y_in) {
    if (delays.size() != y_in.size()) throw ValidationError("dip fit: delays and coincidences differ in length");
    const auto m = static_cast<Eigen::Index>(delays.size());
    if (m < 10) throw ValidationError("dip fit needs at least 10 points, got " + std::to_string(m));
    Eigen::VectorXd tau(m);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        tau(i) = delays[i];
        y(i) = y_in[i];
    }
    const double range = tau.maxCoeff() - tau.minCoeff();
    if (!(range > 0.0)) throw ValidationError("dip fit: delays span no range");

    Eigen::Index imin = 0;
    y.minCoeff(&imin);
    const double b0 = std::max(far_baseline(delays, y_in), 1e-300);
    const double v0 = std::clamp(1.0 - y(imin) / b0, 0.0, 1.0);
    const double half = b0 * (1.0 - 0.5 * v0);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tau(a) < tau(b); });
    std::size_t pos = std::find(order.begin(), order.end(), static_cast<std::size_t>(imin)) - order.begin();
    std::size_t lo = pos;
    std::size_t hi = pos;
    while (lo > 0 && y(order[lo]) <= half) --lo;
    while (hi + 1 < order.size() && y(order[hi]) <= half) ++hi;
    double w0 = (tau(order[hi]) - tau(order[lo])) / 2.3548200450309493;
    if (!(w0 > 0.0)) w0 = range / 10.0;

    auto model_residuals = [&](double b, double v, double c, double w) {
        Eigen::VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i) r(i) = b * (1.0 - v * gaussian(tau(i), c, w)) - y(i);
        return r;
    };
    auto model_jacobian = [&](double b, double v, double c, double w) {
        Eigen::MatrixXd j(m, 4);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double g = gaussian(tau(i), c, w);
            const double d = tau(i) - c;
            j(i, 0) = 1.0 - v * g;
            j(i, 1) = -b * g;
            j(i, 2) = -b * v * g * d / (w * w);
            j(i, 3) = -b * v * g * d * d / (w * w * w);
        }
        return j;
    };

    const auto pass1 = levenberg_marquardt(
        [&](const Eigen::VectorXd& p) { return model_residuals(p(0), p(1), p(2), p(3)); },
        [&](const Eigen::VectorXd& p) { return model_jacobian(p(0), p(1), p(2), p(3)); },
        Eigen::Vector4d(b0, v0, tau(imin), w0));
    Eigen::MatrixXd cov1;
    const bool full_rank1 = parameter_covariance(pass1, static_cast<int>(m), cov1);
    const double b1 = pass1.params(0);
    const double v1 = pass1.params(1);
    const double c1 = pass1.params(2);
    const double w1 = std::abs(pass1.params(3));

    DipFit out;
    if (!full_rank1 || !pass1.params.allFinite() || !(w1 > 0.0)) {
        out.baseline = y.mean();
        out.visibility = std::max(0.0, std::isfinite(v1) ? v1 : 0.0);
        out.center = std::isfinite(c1) ? c1 : 0.0;
        out.width = std::isfinite(w1) ? w1 : 0.0;
        out.visibility_sigma = std::numeric_limits<double>::infinity();
        out.uncertain = true;
        return out;
    }

    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(tau(i) - c1) > 2.0 * w1) {
            num += y(i);
            den += 1.0 - v1 * gaussian(tau(i), c1, w1);
        }
    }
    if (den == 0.0) {
        throw BaselineUndefinedError("no scan point lies more than two widths (" + std::to_string(2.0 * w1) +
                                     " um) from the dip center");
    }
    const double b2 = den > 0.0 ? num / den : b1;

    const auto pass2 = levenberg_marquardt(
        [&](const Eigen::VectorXd& p) { return model_residuals(b2, p(0), p(1), p(2)); },
        [&](const Eigen::VectorXd& p) {
            return Eigen::MatrixXd(model_jacobian(b2, p(0), p(1), p(2)).rightCols(3));
        },
        Eigen::Vector3d(v1, c1, w1));
    Eigen::MatrixXd cov2;
    const bool full_rank2 = parameter_covariance(pass2, static_cast<int>(m), cov2);
    out.baseline = b2;
    out.visibility = pass2.params(0);
    out.center = pass2.params(1);
    out.width = std::abs(pass2.params(2));
    out.visibility_sigma = std::sqrt(std::max(cov2(0, 0), 0.0));
    out.uncertain = !full_rank2 || out.visibility < 3.0 * out.visibility_sigma;
    return out;
}

std::vector<double> default_delays(const PhotonPairSource& source, int points, double half_range_sigmas) {
    if (points < 2) throw ValidationError("delay grid needs at least 2 points");
    const double half = half_range_sigmas * source.coherence_length_um();
    std::vector<double> out(points);
    for (int k = 0; k < points; ++k) out[k] = -half + 2.0 * half * k / (points - 1);
    // Exact zero at the center for odd grids.
    if (points % 2 == 1) out[points / 2] = 0.0;
    return out;
}

TransferMatrix realized_transfer(const RoutingPlan& plan, const HardwareProfile& profile, std::uint64_t seed) {
    if (profile.n != plan.n) throw ValidationError("plan and profile have different mode counts");
    auto errors = profile.static_cell_errors();
    Rng rng(seed);
    for (auto& e : errors) {
        e.theta = profile.internal_phase_noise_sigma * rng.normal();
        e.phi = profile.phase_noise_sigma * rng.normal();
    }
    return propagate(plan.settings(), profile.loss, errors);
}

HomScan hom_scan(const RoutingPlan& plan, const PhotonPairSource& source, const HardwareProfile& profile,
                 const HomScanOptions& options) {
    source.validate();
    HomScan scan;
    scan.delays_um = options.delays_um.empty() ? default_delays(source) : options.delays_um;
    if (scan.delays_um.empty()) throw ValidationError("HOM scan needs at least one delay");
    const TransferMatrix u = realized_transfer(plan, profile, derive_seed(options.seed, 0));
    Rng counts(derive_seed(options.seed, 1));
    scan.raw.reserve(scan.delays_um.size());
    for (double tau : scan.delays_um) {
        double p = two_photon_coincidence(u, plan.inputs, plan.outputs, source.overlap(tau - options.extra_delay_um));
        if (options.count_noise > 0.0) p *= std::max(0.0, 1.0 + options.count_noise * counts.normal());
        scan.raw.push_back(p);
    }
    const double base = far_baseline(scan.delays_um, scan.raw);
    if (!(base > 0.0)) throw ValidationError("HOM scan: zero coincidence baseline");
    scan.coincidences.reserve(scan.raw.size());
    for (double p : scan.raw) scan.coincidences.push_back(p / base);
    if (scan.delays_um.size() >= 10) {
        scan.fit = fit_gaussian_dip(scan.delays_um, scan.coincidences);
        scan.fitted = true;
    }
    return scan;
}

std::vector<std::vector<double>> VisibilityMap::by_row() const {
    std::vector<std::vector<double>> g(std::max(n - 1, 1));
    for (const auto& e : entries) g[e.cell.row].push_back(e.visibility);
    return g;
}

std::vector<std::vector<double>> VisibilityMap::by_column() const {
    std::vector<std::vector<double>> g(std::max(column_count(n), 1));
    for (const auto& e : entries) g[e.cell.column].push_back(e.visibility);
    return g;
}

VisibilityMap hom_visibility_map(int n, const PhotonPairSource& source, const HardwareProfile& profile,
                                 const VisibilityMapOptions& options) {
    source.validate();
    VisibilityMap map;
    map.n = n;
    const auto addresses = cell_addresses(n);
    map.entries.resize(addresses.size());
    parallel_for(addresses.size(), options.workers, [&](std::size_t i) {
        HomScanOptions scan_options = options.scan;
        scan_options.seed = derive_seed(options.scan.seed, i);
        const auto plan = route_to_tbs(n, addresses[i]);
        const auto scan = hom_scan(plan, source, profile, scan_options);
        map.entries[i] = {addresses[i], scan.fit.visibility, scan.fit};
    });
    std::vector<double> v;
    v.reserve(map.entries.size());
    for (const auto& e : map.entries) v.push_back(e.visibility);
    if (!v.empty()) map.stats = ensemble_statistics(v);
    return map;
}

void write_visibility_grid_csv(std::ostream& out, const VisibilityMap& map) {
    const int columns = column_count(map.n);
    out << "row";
    for (int c = 0; c < columns; ++c) out << ",col" << c;
    out << '\n';
    std::map<CellAddress, double> lookup;
    for (const auto& e : map.entries) lookup[e.cell] = e.visibility;
    char buf[64];
    for (int r = 0; r + 1 < map.n; ++r) {
        out << r;
        for (int c = 0; c < columns; ++c) {
            out << ',';
            const auto it = lookup.find({c, r});
            if (it != lookup.end()) {
                std::snprintf(buf, sizeof buf, "%.10g", it->second);
                out << buf;
            }
        }
        out << '\n';
    }
}

void write_hom_scan_csv(std::ostream& out, const HomScan& scan) {
    out << "delay_um,normalized_coincidence\n";
    char buf[96];
    for (std::size_t i = 0; i < scan.delays_um.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", scan.delays_um[i], scan.coincidences[i]);
        out << buf;
    }
}

RoutingPlan diagonal_plan(int n) {
    if (n < 2) throw ValidationError("diagonal plan needs n >= 2");
    RoutingPlan plan;
    plan.n = n;
    plan.target = {n - 2, n - 2};
    for (const auto& a : cell_addresses(n)) plan.cell_states[a] = CellState::bar;
    for (int k = 0; k + 2 < n; ++k) plan.cell_states[{k, k}] = CellState::cross;
    plan.cell_states[plan.target] = CellState::half;
    plan.inputs = {0, n - 1};
    plan.outputs = {n - 2, n - 1};
    return plan;
}

std::vector<int> diagonal_heaters(int n) {
    std::vector<int> ids;
    for (int k = 0; k + 2 < n; ++k) {
        const auto idx = static_cast<int>(cell_index(n, {k, k}));
        ids.push_back(2 * idx);
        ids.push_back(2 * idx + 1);
    }
    ids.push_back(2 * static_cast<int>(cell_index(n, {n - 2, n - 2})) + 1);
    return ids;
}

DelaySweep diagonal_delay_sweep(int n, const HardwareProfile& profile, const PhotonPairSource& source,
                                std::span<const double> drive_radians, std::uint64_t seed) {
    source.validate();
    if (profile.n != n) throw ValidationError("profile and sweep have different mode counts");
    DelaySweep sweep;
    sweep.plan = diagonal_plan(n);
    sweep.heaters = diagonal_heaters(n);
    sweep.wavelength_um = source.center_wavelength_nm * 1e-3;

    double span = std::numeric_limits<double>::infinity();
    for (int id : sweep.heaters) span = std::min(span, profile.heaters.at(id).phase_span());
    double max_drive = 0.0;
    for (double d : drive_radians) {
        if (!(d >= 0.0) || d > span * (1.0 + 1e-12)) {
            throw ValidationError("drive " + std::to_string(d) + " rad outside [0, " + std::to_string(span) + "] rad");
        }
        max_drive = std::max(max_drive, d);
    }
    const double per_radian = static_cast<double>(sweep.heaters.size()) * sweep.wavelength_um / kTwoPi;
    const double sigma = source.coherence_length_um();
    HomScanOptions options;
    options.seed = seed;
    const double lo = -6.0 * sigma;
    const double hi = max_drive * per_radian + 6.0 * sigma;
    const double step = sigma / 10.0;
    for (double t = lo; t <= hi + 1e-9 * step; t += step) options.delays_um.push_back(t);

    for (double d : drive_radians) {
        options.extra_delay_um = d * per_radian;
        const auto scan = hom_scan(sweep.plan, source, profile, options);
        sweep.points.push_back({d, options.extra_delay_um, scan.fit.center, scan.fit.visibility});
    }
    return sweep;
}

void to_json(nlohmann::json& j, const DipFit& f) {
    j = nlohmann::json{{"visibility", f.visibility},
                       {"center_um", f.center},
                       {"width_um", f.width},
                       {"baseline", f.baseline},
                       {"visibility_sigma", std::isfinite(f.visibility_sigma) ? nlohmann::json(f.visibility_sigma)
                                                                              : nlohmann::json(nullptr)},
                       {"uncertain", f.uncertain}};
}

void to_json(nlohmann::json& j, const RoutingPlan& p) {
    nlohmann::json cross = nlohmann::json::array();
    for (const auto& [a, s] : p.cell_states) {
        if (s == CellState::cross) cross.push_back({{"col", a.column}, {"row", a.row}});
    }
    j = nlohmann::json{{"n", p.n},
                       {"target", {{"col", p.target.column}, {"row", p.target.row}}},
                       {"inputs", p.inputs},
                       {"outputs", p.outputs},
                       {"cross_cells", std::move(cross)}};
}

void to_json(nlohmann::json& j, const HomScan& s) {
    j = nlohmann::json{{"delays_um", s.delays_um}, {"normalized_coincidence", s.coincidences}};
    if (s.fitted) j["fit"] = s.fit;
}

void to_json(nlohmann::json& j, const VisibilityMap& m) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& e : m.entries) {
        cells.push_back({{"col", e.cell.column}, {"row", e.cell.row}, {"visibility", e.visibility}, {"fit", e.fit}});
    }
    j = nlohmann::json{{"n", m.n}, {"cells", std::move(cells)}, {"stats", m.stats}};
}

void to_json(nlohmann::json& j, const DelaySweep& s) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : s.points) {
        points.push_back({{"drive_radians", p.drive_radians},
                          {"path_shift_um", p.path_shift_um},
                          {"fitted_center_um", p.fitted_center_um},
                          {"visibility", p.visibility}});
    }
    j = nlohmann::json{{"plan", s.plan},
                       {"driven_heaters", s.heaters},
                       {"driven_heater_count", s.heaters.size()},
                       {"wavelength_um", s.wavelength_um},
                       {"points", std::move(points)}};
}

}  // namespace qpp
