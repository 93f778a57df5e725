#include "qpp/compiler.hpp"

#include "qpp/error.hpp"
#include "qpp/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

namespace qpp {

namespace {

constexpr double kPi = std::numbers::pi;

// Elements below this are treated as already nulled. Unitary entries are
// bounded by 1, so an absolute threshold is enough.
constexpr double kZero = 1e-13;

struct PlacedCell {
    int mode;
    CellSetting setting;
};

// Right-side nulling of U(r, m) using columns (m, m+1):
// (U T^-1)(r, m) = e^{-i theta/2} (a e^{-i phi} sin(theta/2) + b cos(theta/2)).
CellSetting right_nulling(Complex a, Complex b) {
    if (std::abs(a) < kZero) return CellSetting::bar();
    if (std::abs(b) < kZero) return CellSetting::cross();
    const double theta = 2.0 * std::atan2(std::abs(b), std::abs(a));
    const double phi = std::arg(a) - std::arg(b) + kPi;
    return {theta, phi};
}

// Left-side nulling of U(m+1, k) using rows (m, m+1):
// (T U)(m+1, k) = e^{i theta/2} (e^{i phi} cos(theta/2) a - sin(theta/2) b).
CellSetting left_nulling(Complex a, Complex b) {
    if (std::abs(b) < kZero) return CellSetting::bar();
    if (std::abs(a) < kZero) return CellSetting::cross();
    const double theta = 2.0 * std::atan2(std::abs(a), std::abs(b));
    const double phi = std::arg(b) - std::arg(a);
    return {theta, phi};
}

void apply_columns_inverse(ComplexMatrix& u, int m, const CellMatrix& t) {
    const CellMatrix inv = t.adjoint();
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
        const Complex a = u(r, m);
        const Complex b = u(r, m + 1);
        u(r, m) = a * inv(0, 0) + b * inv(1, 0);
        u(r, m + 1) = a * inv(0, 1) + b * inv(1, 1);
    }
}

void apply_rows(ComplexMatrix& u, int m, const CellMatrix& t) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const Complex a = u(m, k);
        const Complex b = u(m + 1, k);
        u(m, k) = t(0, 0) * a + t(0, 1) * b;
        u(m + 1, k) = t(1, 0) * a + t(1, 1) * b;
    }
}

double checked_residual(const MeshSettings& settings, const ComplexMatrix& target) {
    return (mesh_unitary(settings).matrix() - target).cwiseAbs().maxCoeff();
}

}  // namespace

DecompositionReport clements_decompose(const ComplexMatrix& target) {
    const int n = static_cast<int>(target.rows());
    // Throws with the violation magnitude when the input is not unitary.
    Unitary::from_matrix(target, kDecomposeTolerance);

    ComplexMatrix u = target;
    std::vector<PlacedCell> right;
    std::vector<PlacedCell> left;
    std::vector<NullingStep> sequence;

    for (int i = 0; i + 1 < n; ++i) {
        if (i % 2 == 0) {
            for (int j = 0; j <= i; ++j) {
                const int r = n - 1 - j;
                const int m = i - j;
                const CellSetting s = right_nulling(u(r, m), u(r, m + 1));
                apply_columns_inverse(u, m, cell_transfer(s));
                right.push_back({m, s});
                sequence.push_back({NullingStep::Side::right, r, m, m});
            }
        } else {
            for (int j = 1; j <= i + 1; ++j) {
                const int m = n + j - i - 3;
                const int k = j - 1;
                const CellSetting s = left_nulling(u(m, k), u(m + 1, k));
                apply_rows(u, m, cell_transfer(s));
                left.push_back({m, s});
                sequence.push_back({NullingStep::Side::left, m + 1, k, m});
            }
        }
    }

    // Now L_k ... L_1 U R_1^-1 ... R_r^-1 = D. Move each L^-1 through D:
    // T^-1 diag(d1, d2) = diag(d1', d2') T(theta, phi') with
    // phi' = arg(d1/d2), d1' = e^{-i(theta+phi)} d2, d2' = e^{-i theta} d2.
    std::vector<Complex> d(n);
    for (int m = 0; m < n; ++m) d[m] = u(m, m);

    std::vector<PlacedCell> ordered = right;
    for (auto it = left.rbegin(); it != left.rend(); ++it) {
        const int m = it->mode;
        const double theta = it->setting.theta;
        const double phi = it->setting.phi;
        const Complex d1 = d[m];
        const Complex d2 = d[m + 1];
        if (it->setting == CellSetting::bar()) {
            // Bar cells are diagonal, so phi' is free; keep it at 0.
            d[m] = -std::polar(1.0, -phi) * d1;
            d[m + 1] = -d2;
            ordered.push_back({m, CellSetting::bar()});
            continue;
        }
        const double moved_phi = std::arg(d1 / d2);
        d[m] = std::polar(1.0, -theta - phi) * d2;
        d[m + 1] = std::polar(1.0, -theta) * d2;
        ordered.push_back({m, CellSetting(theta, moved_phi)});
    }

    // `ordered` is in application order (first acts first on the input).
    // Schedule each cell into the earliest column with matching parity that
    // respects per-mode ordering.
    std::vector<int> next_free(n, 0);
    std::map<CellAddress, CellSetting> cells;
    for (const auto& c : ordered) {
        int col = std::max(next_free[c.mode], next_free[c.mode + 1]);
        if (col % 2 != c.mode % 2) ++col;
        next_free[c.mode] = next_free[c.mode + 1] = col + 1;
        if (!cells.emplace(CellAddress{col, c.mode}, c.setting).second || !is_valid_address(n, {col, c.mode})) {
            throw StructuralError("decomposition produced an out-of-mesh cell placement");
        }
    }

    std::vector<double> output(n);
    for (int m = 0; m < n; ++m) output[m] = std::arg(d[m]);

    MeshSettings settings(n, cells, std::move(output));
    const double residual = checked_residual(settings, target);
    return {std::move(settings), residual, std::move(sequence)};
}

DecompositionReport clements_decompose(const Unitary& u) { return clements_decompose(u.matrix()); }

Unitary haar_random(int n, std::uint64_t seed) {
    if (n < 1) throw ValidationError("haar_random needs n >= 1");
    Rng rng(seed);
    ComplexMatrix z(n, n);
    const double scale = 1.0 / std::sqrt(2.0);
    for (int c = 0; c < n; ++c) {
        for (int r = 0; r < n; ++r) {
            const double re = rng.normal();
            const double im = rng.normal();
            z(r, c) = Complex(re * scale, im * scale);
        }
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(z);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix& packed = qr.matrixQR();
    for (int c = 0; c < n; ++c) {
        const Complex diag = packed(c, c);
        const double mag = std::abs(diag);
        q.col(c) *= mag > 0.0 ? diag / mag : Complex(1.0, 0.0);
    }
    return Unitary::from_matrix(std::move(q));
}

Unitary permutation_unitary(std::span<const int> perm) {
    const int n = static_cast<int>(perm.size());
    if (n < 1) throw ValidationError("permutation must be non-empty");
    std::vector<bool> seen(n, false);
    for (int i = 0; i < n; ++i) {
        const int p = perm[i];
        if (p < 0 || p >= n || seen[p]) {
            throw ValidationError("permutation is not a bijection on {0.." + std::to_string(n - 1) +
                                  "}: entry " + std::to_string(i) + " -> " + std::to_string(p));
        }
        seen[p] = true;
    }
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    for (int i = 0; i < n; ++i) m(perm[i], i) = 1.0;
    return Unitary::from_matrix(std::move(m));
}

std::vector<std::vector<int>> permutation_ensemble(int n, int count, std::uint64_t seed) {
    if (n < 1) throw ValidationError("permutation_ensemble needs n >= 1");
    if (count < 1) throw ValidationError("permutation_ensemble needs count >= 1, got " + std::to_string(count));
    // n! overflows 64 bits past 20, where any int count is far below n!.
    if (n <= 20) {
        std::uint64_t factorial = 1;
        for (int k = 2; k <= n; ++k) factorial *= static_cast<std::uint64_t>(k);
        if (static_cast<std::uint64_t>(count) > factorial) {
            throw ValidationError("count " + std::to_string(count) + " exceeds " + std::to_string(n) +
                                  "! = " + std::to_string(factorial) + " distinct permutations");
        }
    }

    Rng rng(seed);
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> out;
    out.reserve(count);
    std::vector<int> perm(n);
    while (static_cast<int>(out.size()) < count) {
        for (int i = 0; i < n; ++i) perm[i] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[i], perm[j]);
        }
        if (seen.insert(perm).second) out.push_back(perm);
    }
    return out;
}

std::uint64_t ensemble_item_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, index); }

std::vector<Unitary> build_ensemble(const EnsembleManifest& manifest) {
    std::vector<Unitary> out;
    out.reserve(manifest.count);
    if (manifest.kind == EnsembleManifest::Kind::haar) {
        for (int i = 0; i < manifest.count; ++i) {
            out.push_back(haar_random(manifest.n, ensemble_item_seed(manifest.seed, i)));
        }
    } else {
        for (const auto& p : permutation_ensemble(manifest.n, manifest.count, manifest.seed)) {
            out.push_back(permutation_unitary(p));
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const EnsembleManifest& m) {
    j = nlohmann::json{{"kind", m.kind == EnsembleManifest::Kind::haar ? "haar" : "permutation"},
                       {"n", m.n},
                       {"seed", m.seed},
                       {"count", m.count}};
}

void from_json(const nlohmann::json& j, EnsembleManifest& m) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "haar") {
        m.kind = EnsembleManifest::Kind::haar;
    } else if (kind == "permutation") {
        m.kind = EnsembleManifest::Kind::permutation;
    } else {
        throw ValidationError("unknown ensemble kind '" + kind + "'");
    }
    m.n = j.at("n").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.count = j.at("count").get<int>();
}

void write_matrix_csv(std::ostream& out, const ComplexMatrix& m) {
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c > 0) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", m(r, c).real(), m(r, c).imag());
            out << buf;
        }
        out << '\n';
    }
}

ComplexMatrix read_matrix_csv(std::istream& in) {
    std::vector<std::vector<Complex>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw ValidationError("matrix CSV: cannot parse '" + field + "'");
            }
        }
        if (values.size() % 2 != 0) throw ValidationError("matrix CSV rows need (real, imaginary) pairs");
        std::vector<Complex> row;
        for (std::size_t k = 0; k < values.size(); k += 2) row.emplace_back(values[k], values[k + 1]);
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    ComplexMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != n) throw ValidationError("matrix CSV is not square");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

}  // namespace qpp
