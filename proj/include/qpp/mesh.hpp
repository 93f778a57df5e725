#pragma once

// Clements-style square mesh: topology, unit-cell transfer convention, and
// composition into full N-mode transfer matrices.

#include <Eigen/Dense>

#include <compare>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include <json.hpp>

namespace qpp {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using CellMatrix = Eigen::Matrix2cd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Wraps any real phase into [0, 2*pi).
double normalize_phase(double phase);

// Signed distance between two phases, wrapped into (-pi, pi].
double phase_distance(double a, double b);

// Position of a unit cell. `column` is the layer in the mesh (earliest layer
// acts first on the input), `row` is the upper mode m of the coupled pair
// (m, m+1). Columns alternate between even and odd rows.
struct CellAddress {
    int column = 0;
    int row = 0;

    auto operator<=>(const CellAddress&) const = default;
};

int column_count(int n);
std::size_t cell_count(int n);
bool is_valid_address(int n, CellAddress address);

// All addresses for an n-mode mesh, sorted by (column, row).
std::vector<CellAddress> cell_addresses(int n);

// Position of `address` in cell_addresses(n). Throws ValidationError when the
// address does not exist for n.
std::size_t cell_index(int n, CellAddress address);

struct CellSetting {
    double theta = 0.0;  // internal MZI phase
    double phi = 0.0;    // external phase on the upper input

    CellSetting() = default;
    CellSetting(double theta_, double phi_) : theta(normalize_phase(theta_)), phi(normalize_phase(phi_)) {}

    static CellSetting bar() { return {std::numbers::pi, 0.0}; }
    static CellSetting cross() { return {0.0, 0.0}; }
    static CellSetting balanced() { return {std::numbers::pi / 2.0, 0.0}; }

    bool operator==(const CellSetting&) const = default;
};

// Compiled program for the mesh: one CellSetting per cell in address order
// plus an output phase screen.
class MeshSettings {
public:
    // All cells in the bar state, output phases zero.
    explicit MeshSettings(int n);

    // `cells` must hold exactly cell_count(n) entries in address order.
    MeshSettings(int n, std::vector<CellSetting> cells, std::vector<double> output_phases);

    // `cells` must contain exactly the valid addresses for n.
    MeshSettings(int n, const std::map<CellAddress, CellSetting>& cells, std::vector<double> output_phases);

    int n() const { return n_; }
    std::span<const CellSetting> cells() const { return cells_; }
    std::span<const double> output_phases() const { return output_phases_; }

    const CellSetting& at(CellAddress address) const;
    MeshSettings with_cell(CellAddress address, CellSetting setting) const;
    MeshSettings with_output_phases(std::vector<double> phases) const;

    bool operator==(const MeshSettings&) const = default;

private:
    int n_;
    std::vector<CellSetting> cells_;
    std::vector<double> output_phases_;
};

// Max-abs elementwise deviation of U U^dagger from the identity.
double unitarity_error(const ComplexMatrix& m);

class Unitary {
public:
    static constexpr double kDefaultTolerance = 1e-10;

    // Throws ValidationError (with the violation magnitude) if `m` is not
    // square or deviates from unitarity by more than `tolerance`.
    static Unitary from_matrix(ComplexMatrix m, double tolerance = kDefaultTolerance);
    static Unitary identity(int n);

    int n() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    Complex operator()(int row, int col) const { return m_(row, col); }

private:
    explicit Unitary(ComplexMatrix m) : m_(std::move(m)) {}
    ComplexMatrix m_;
};

// Passive, possibly lossy, linear network.
class TransferMatrix {
public:
    static TransferMatrix from_matrix(ComplexMatrix m);
    static TransferMatrix from_unitary(const Unitary& u) { return TransferMatrix(u.matrix(), false); }

    int n() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    Complex operator()(int row, int col) const { return m_(row, col); }
    bool sub_unitary() const { return sub_unitary_; }

private:
    TransferMatrix(ComplexMatrix m, bool sub_unitary) : m_(std::move(m)), sub_unitary_(sub_unitary) {}
    ComplexMatrix m_;
    bool sub_unitary_;
};

// T(theta, phi) = e^{i theta/2} [[e^{i phi} sin(theta/2),  cos(theta/2)],
//                                [e^{i phi} cos(theta/2), -sin(theta/2)]]
// theta = pi is the bar state, theta = 0 the cross state.
CellMatrix cell_transfer(const CellSetting& setting);

// Fabrication and drive imperfections of one cell. The splitter errors are
// deviations of the two directional-coupler mixing angles from pi/4; the
// phase errors are added to theta and phi.
struct CellError {
    double splitter_in = 0.0;
    double splitter_out = 0.0;
    double theta = 0.0;
    double phi = 0.0;
};

// Physical MZI built from two couplers: -i B(out) P(theta) B(in) P(phi).
// Equals cell_transfer() up to rounding when all errors are zero.
CellMatrix cell_transfer(const CellSetting& setting, const CellError& error);

// N x N matrix of a single column (identity on uncoupled modes).
ComplexMatrix column_matrix(const MeshSettings& settings, int column);

Unitary mesh_unitary(const MeshSettings& settings);

struct LossBudget {
    double coupling_loss_db_per_facet = 0.0;
    double propagation_loss_db_per_cm = 0.0;
    std::vector<double> path_length_cm;  // one entry per mode; empty = zero length

    static LossBudget lossless(int n) { return {0.0, 0.0, std::vector<double>(n, 0.0)}; }

    // Throws ValidationError for negative parameters or a wrong mode count.
    void validate(int n) const;
};

// Input facet, per-column propagation loss (mode path length spread evenly
// over the columns), output facet. Exactly mesh_unitary() for a lossless
// budget.
TransferMatrix apply_loss(const MeshSettings& settings, const LossBudget& loss);

// Forward model with per-cell imperfections. `errors` is empty (ideal) or
// holds one entry per cell in address order.
TransferMatrix propagate(const MeshSettings& settings, const LossBudget& loss, std::span<const CellError> errors);

double db_to_power(double db);
double db_to_amplitude(double db);

void to_json(nlohmann::json& j, const MeshSettings& settings);
MeshSettings mesh_settings_from_json(const nlohmann::json& j);

}  // namespace qpp
