#include "qpp/mesh.hpp"

#include "qpp/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

namespace qpp {

namespace {

constexpr double kPi = std::numbers::pi;

double round_to_15_digits(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", x);
    return std::strtod(buf, nullptr);
}

double serialized_phase(double x) {
    const double r = round_to_15_digits(x);
    return r >= kTwoPi ? 0.0 : r;
}

void check_mode_count(int n) {
    if (n < 1) {
        throw ValidationError("mode count must be >= 1, got " + std::to_string(n));
    }
}

// Applies a 2x2 block to rows (m, m+1) of `target` in place.
void apply_rows(ComplexMatrix& target, int m, const CellMatrix& t) {
    for (Eigen::Index k = 0; k < target.cols(); ++k) {
        const Complex a = target(m, k);
        const Complex b = target(m + 1, k);
        target(m, k) = t(0, 0) * a + t(0, 1) * b;
        target(m + 1, k) = t(1, 0) * a + t(1, 1) * b;
    }
}

CellMatrix coupler(double mixing_angle) {
    const double c = std::cos(mixing_angle);
    const double s = std::sin(mixing_angle);
    CellMatrix b;
    b << Complex(c, 0.0), Complex(0.0, s), Complex(0.0, s), Complex(c, 0.0);
    return b;
}

}  // namespace

double normalize_phase(double phase) {
    double r = std::fmod(phase, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double phase_distance(double a, double b) {
    double d = std::remainder(a - b, kTwoPi);
    if (d <= -kPi) d += kTwoPi;
    return d;
}

int column_count(int n) {
    if (n <= 1) return 0;
    return n == 2 ? 1 : n;
}

std::size_t cell_count(int n) {
    return n <= 1 ? 0 : static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
}

bool is_valid_address(int n, CellAddress a) {
    return a.column >= 0 && a.column < column_count(n) && a.row >= 0 && a.row + 1 < n &&
           (a.row % 2) == (a.column % 2);
}

std::vector<CellAddress> cell_addresses(int n) {
    std::vector<CellAddress> out;
    out.reserve(cell_count(n));
    for (int col = 0; col < column_count(n); ++col) {
        for (int m = col % 2; m + 1 < n; m += 2) {
            out.push_back({col, m});
        }
    }
    return out;
}

std::size_t cell_index(int n, CellAddress a) {
    if (!is_valid_address(n, a)) {
        throw ValidationError("cell (" + std::to_string(a.column) + ", " + std::to_string(a.row) +
                              ") is not part of a " + std::to_string(n) + "-mode mesh");
    }
    // Even columns hold floor(n/2) cells, odd columns floor((n-1)/2).
    const std::size_t even = static_cast<std::size_t>(n / 2);
    const std::size_t odd = static_cast<std::size_t>((n - 1) / 2);
    const std::size_t col = static_cast<std::size_t>(a.column);
    const std::size_t before = (col / 2) * (even + odd) + (col % 2) * even;
    return before + static_cast<std::size_t>(a.row / 2);
}

// ---------------------------------------------------------------------------
// MeshSettings

MeshSettings::MeshSettings(int n)
    : n_(n), cells_(cell_count(n), CellSetting::bar()), output_phases_(n > 0 ? n : 0, 0.0) {
    check_mode_count(n);
}

MeshSettings::MeshSettings(int n, std::vector<CellSetting> cells, std::vector<double> output_phases)
    : n_(n), cells_(std::move(cells)), output_phases_(std::move(output_phases)) {
    check_mode_count(n);
    if (cells_.size() != cell_count(n)) {
        throw StructuralError("mesh with " + std::to_string(n) + " modes needs " + std::to_string(cell_count(n)) +
                              " cells, got " + std::to_string(cells_.size()));
    }
    if (output_phases_.size() != static_cast<std::size_t>(n)) {
        throw StructuralError("expected " + std::to_string(n) + " output phases, got " +
                              std::to_string(output_phases_.size()));
    }
    for (auto& c : cells_) c = CellSetting(c.theta, c.phi);
    for (auto& p : output_phases_) p = normalize_phase(p);
}

MeshSettings::MeshSettings(int n, const std::map<CellAddress, CellSetting>& cells, std::vector<double> output_phases)
    : MeshSettings(n, [&] {
          check_mode_count(n);
          if (cells.size() != cell_count(n)) {
              throw StructuralError("mesh with " + std::to_string(n) + " modes needs " +
                                    std::to_string(cell_count(n)) + " cells, got " + std::to_string(cells.size()));
          }
          std::vector<CellSetting> ordered;
          ordered.reserve(cells.size());
          for (const auto& [address, setting] : cells) {
              if (!is_valid_address(n, address)) {
                  throw StructuralError("cell (" + std::to_string(address.column) + ", " +
                                        std::to_string(address.row) + ") is not part of a " + std::to_string(n) +
                                        "-mode mesh");
              }
              ordered.push_back(setting);
          }
          return ordered;
      }(), std::move(output_phases)) {}

const CellSetting& MeshSettings::at(CellAddress address) const { return cells_[cell_index(n_, address)]; }

MeshSettings MeshSettings::with_cell(CellAddress address, CellSetting setting) const {
    MeshSettings out = *this;
    out.cells_[cell_index(n_, address)] = CellSetting(setting.theta, setting.phi);
    return out;
}

MeshSettings MeshSettings::with_output_phases(std::vector<double> phases) const {
    return MeshSettings(n_, cells_, std::move(phases));
}

// ---------------------------------------------------------------------------
// Unitary / TransferMatrix

double unitarity_error(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    const ComplexMatrix d = m * m.adjoint() - ComplexMatrix::Identity(m.rows(), m.cols());
    return d.cwiseAbs().maxCoeff();
}

Unitary Unitary::from_matrix(ComplexMatrix m, double tolerance) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw ValidationError("unitary must be a non-empty square matrix, got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    const double err = unitarity_error(m);
    if (!(err <= tolerance)) {
        std::ostringstream msg;
        msg << "matrix is not unitary: max |U U^dagger - I| = " << err << " exceeds tolerance " << tolerance;
        throw ValidationError(msg.str());
    }
    return Unitary(std::move(m));
}

Unitary Unitary::identity(int n) {
    check_mode_count(n);
    return Unitary(ComplexMatrix::Identity(n, n));
}

TransferMatrix TransferMatrix::from_matrix(ComplexMatrix m) {
    if (m.rows() != m.cols() || m.rows() < 1) {
        throw ValidationError("transfer matrix must be a non-empty square matrix");
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(m);
    const double top = svd.singularValues()(0);
    if (top > 1.0 + 1e-9) {
        std::ostringstream msg;
        msg << "transfer matrix is not passive: largest singular value " << top;
        throw ValidationError(msg.str());
    }
    const bool lossy = unitarity_error(m) > 1e-10;
    return TransferMatrix(std::move(m), lossy);
}

// ---------------------------------------------------------------------------
// Cells and composition

CellMatrix cell_transfer(const CellSetting& setting) {
    const double s = std::sin(setting.theta / 2.0);
    const double c = std::cos(setting.theta / 2.0);
    const Complex g = std::polar(1.0, setting.theta / 2.0);
    const Complex e = std::polar(1.0, setting.phi);
    CellMatrix t;
    t << g * e * s, g * c, g * e * c, -g * s;
    return t;
}

CellMatrix cell_transfer(const CellSetting& setting, const CellError& error) {
    const double theta = setting.theta + error.theta;
    const double phi = setting.phi + error.phi;
    CellMatrix inner = CellMatrix::Zero();
    inner(0, 0) = std::polar(1.0, theta);
    inner(1, 1) = 1.0;
    CellMatrix outer = CellMatrix::Zero();
    outer(0, 0) = std::polar(1.0, phi);
    outer(1, 1) = 1.0;
    const double quarter = std::numbers::pi / 4.0;
    return Complex(0.0, -1.0) * coupler(quarter + error.splitter_out) * inner * coupler(quarter + error.splitter_in) *
           outer;
}

ComplexMatrix column_matrix(const MeshSettings& settings, int column) {
    const int n = settings.n();
    ComplexMatrix out = ComplexMatrix::Identity(n, n);
    for (int m = column % 2; m + 1 < n; m += 2) {
        const CellMatrix t = cell_transfer(settings.at({column, m}));
        out.block<2, 2>(m, m) = t;
    }
    return out;
}

Unitary mesh_unitary(const MeshSettings& settings) {
    const int n = settings.n();
    ComplexMatrix u = ComplexMatrix::Identity(n, n);
    const auto addresses = cell_addresses(n);
    const auto cells = settings.cells();
    for (std::size_t i = 0; i < addresses.size(); ++i) {
        apply_rows(u, addresses[i].row, cell_transfer(cells[i]));
    }
    const auto out = settings.output_phases();
    for (int m = 0; m < n; ++m) {
        u.row(m) *= std::polar(1.0, out[m]);
    }
    return Unitary::from_matrix(std::move(u));
}

double db_to_power(double db) { return std::pow(10.0, -db / 10.0); }
double db_to_amplitude(double db) { return std::pow(10.0, -db / 20.0); }

void LossBudget::validate(int n) const {
    if (coupling_loss_db_per_facet < 0.0) {
        throw ValidationError("coupling_loss_db_per_facet must be >= 0");
    }
    if (propagation_loss_db_per_cm < 0.0) {
        throw ValidationError("propagation_loss_db_per_cm must be >= 0");
    }
    if (!path_length_cm.empty() && path_length_cm.size() != static_cast<std::size_t>(n)) {
        throw ValidationError("path_length_cm needs one entry per mode (" + std::to_string(n) + "), got " +
                              std::to_string(path_length_cm.size()));
    }
    for (double len : path_length_cm) {
        if (len < 0.0) throw ValidationError("path_length_cm entries must be >= 0");
    }
}

TransferMatrix apply_loss(const MeshSettings& settings, const LossBudget& loss) {
    return propagate(settings, loss, {});
}

TransferMatrix propagate(const MeshSettings& settings, const LossBudget& loss, std::span<const CellError> errors) {
    const int n = settings.n();
    loss.validate(n);
    if (!errors.empty() && errors.size() != cell_count(n)) {
        throw StructuralError("expected one CellError per cell (" + std::to_string(cell_count(n)) + "), got " +
                              std::to_string(errors.size()));
    }

    const double facet = db_to_amplitude(loss.coupling_loss_db_per_facet);
    const int segments = std::max(1, column_count(n));
    std::vector<double> per_column(n, 1.0);
    bool any_propagation = false;
    for (int m = 0; m < n; ++m) {
        const double len = loss.path_length_cm.empty() ? 0.0 : loss.path_length_cm[m];
        const double db = loss.propagation_loss_db_per_cm * len / segments;
        per_column[m] = db_to_amplitude(db);
        any_propagation = any_propagation || db != 0.0;
    }

    ComplexMatrix t = ComplexMatrix::Identity(n, n);
    if (facet != 1.0) t *= facet;

    const auto addresses = cell_addresses(n);
    const auto cells = settings.cells();
    std::size_t next = 0;
    for (int col = 0; col < segments; ++col) {
        if (any_propagation) {
            for (int m = 0; m < n; ++m) t.row(m) *= per_column[m];
        }
        for (; next < addresses.size() && addresses[next].column == col; ++next) {
            const CellMatrix cell =
                errors.empty() ? cell_transfer(cells[next]) : cell_transfer(cells[next], errors[next]);
            apply_rows(t, addresses[next].row, cell);
        }
    }

    const auto out = settings.output_phases();
    for (int m = 0; m < n; ++m) {
        t.row(m) *= std::polar(facet, out[m]);
    }
    return TransferMatrix::from_matrix(std::move(t));
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const MeshSettings& settings) {
    nlohmann::json cells = nlohmann::json::array();
    const auto addresses = cell_addresses(settings.n());
    const auto values = settings.cells();
    for (std::size_t i = 0; i < addresses.size(); ++i) {
        cells.push_back({{"col", addresses[i].column},
                         {"row", addresses[i].row},
                         {"theta", serialized_phase(values[i].theta)},
                         {"phi", serialized_phase(values[i].phi)}});
    }
    nlohmann::json out = nlohmann::json::array();
    for (double p : settings.output_phases()) out.push_back(serialized_phase(p));
    j = nlohmann::json{{"n", settings.n()}, {"cells", std::move(cells)}, {"output_phases", std::move(out)}};
}

MeshSettings mesh_settings_from_json(const nlohmann::json& j) {
    try {
        const int n = j.at("n").get<int>();
        std::map<CellAddress, CellSetting> cells;
        for (const auto& c : j.at("cells")) {
            const CellAddress a{c.at("col").get<int>(), c.at("row").get<int>()};
            if (!cells.emplace(a, CellSetting(c.at("theta").get<double>(), c.at("phi").get<double>())).second) {
                throw StructuralError("duplicate cell (" + std::to_string(a.column) + ", " + std::to_string(a.row) +
                                      ")");
            }
        }
        return MeshSettings(n, cells, j.at("output_phases").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("malformed mesh settings JSON: ") + e.what());
    }
}

}  // namespace qpp
