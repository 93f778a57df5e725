#include "oracles.hpp"

#include "qpp/error.hpp"
#include "qpp/mesh.hpp"
#include "qpp/random.hpp"

#include <doctest.h>

using namespace qpp;
using std::numbers::pi;

namespace {

MeshSettings random_settings(int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CellSetting> cells(cell_count(n));
    for (auto& c : cells) c = CellSetting(kTwoPi * rng.uniform(), kTwoPi * rng.uniform());
    std::vector<double> out(n);
    for (auto& p : out) p = kTwoPi * rng.uniform();
    return MeshSettings(n, std::move(cells), std::move(out));
}

std::vector<oracle::OracleCell> oracle_cells(const MeshSettings& s) {
    std::vector<oracle::OracleCell> out;
    const auto addresses = cell_addresses(s.n());
    for (std::size_t k = 0; k < addresses.size(); ++k) {
        out.push_back({addresses[k].column, addresses[k].row, s.cells()[k].theta, s.cells()[k].phi});
    }
    return out;
}

}  // namespace

TEST_CASE("mesh topology") {
    CHECK(column_count(1) == 0);
    CHECK(column_count(2) == 1);
    CHECK(column_count(3) == 3);
    CHECK(column_count(20) == 20);
    CHECK(cell_count(20) == 190);
    CHECK(cell_count(12) == 66);
    for (int n = 1; n <= 9; ++n) {
        const auto a = cell_addresses(n);
        REQUIRE(a.size() == cell_count(n));
        CHECK(std::is_sorted(a.begin(), a.end()));
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(cell_index(n, a[k]) == k);
            CHECK(a[k].row % 2 == a[k].column % 2);
            CHECK(a[k].row + 1 < n);
        }
    }
    CHECK_THROWS_AS(cell_index(4, {0, 1}), ValidationError);
    CHECK_FALSE(is_valid_address(4, {4, 0}));
}

TEST_CASE("phase normalization") {
    CHECK(normalize_phase(kTwoPi) == doctest::Approx(0.0));
    CHECK(normalize_phase(-0.5) == doctest::Approx(kTwoPi - 0.5));
    CHECK(normalize_phase(7.0) >= 0.0);
    CHECK(phase_distance(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
}

TEST_CASE("cell transfer convention") {
    const CellMatrix bar = cell_transfer(CellSetting::bar());
    CHECK(std::abs(bar(0, 1)) < 1e-15);
    CHECK(std::abs(bar(1, 0)) < 1e-15);
    CHECK(std::abs(bar(0, 0)) == doctest::Approx(1.0));
    const CellMatrix cross = cell_transfer(CellSetting::cross());
    CHECK(std::abs(cross(0, 0)) < 1e-15);
    CHECK(std::abs(cross(1, 0)) == doctest::Approx(1.0));
    const CellMatrix half = cell_transfer(CellSetting::balanced());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::norm(half(i, j)) == doctest::Approx(0.5));

    // Entry-by-entry against the written-out formula.
    for (double theta : {0.0, 0.3, 1.7, pi, 4.0}) {
        for (double phi : {0.0, 1.1, 5.9}) {
            const CellMatrix t = cell_transfer(CellSetting(theta, phi));
            const auto o = oracle::cell(theta, phi);
            CHECK((t - Eigen::Matrix2cd(o)).cwiseAbs().maxCoeff() < 1e-15);
            CHECK(unitarity_error(t) < 1e-15);
            // Physical two-coupler model agrees with the pinned convention.
            const CellMatrix p = cell_transfer(CellSetting(theta, phi), CellError{});
            CHECK((t - p).cwiseAbs().maxCoeff() < 1e-14);
        }
    }
}

TEST_CASE("cell transfer is 2 pi periodic in theta") {
    CellSetting a;
    a.theta = 0.7;
    a.phi = 0.2;
    CellSetting b = a;
    b.theta = 0.7 + kTwoPi;
    CHECK((cell_transfer(a) - cell_transfer(b)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("mesh unitary matches explicit layer products") {
    for (int n = 1; n <= 8; ++n) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const auto s = random_settings(n, seed * 31 + n);
            const Unitary u = mesh_unitary(s);
            const auto o = oracle::mesh_product(n, oracle_cells(s),
                                                std::vector<double>(s.output_phases().begin(), s.output_phases().end()));
            CHECK((u.matrix() - o).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(unitarity_error(u.matrix()) < 1e-12);
        }
    }
}

TEST_CASE("all-bar mesh has identity magnitudes") {
    for (int n = 1; n <= 10; ++n) {
        const Unitary u = mesh_unitary(MeshSettings(n));
        CHECK((u.matrix().cwiseAbs() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("mesh settings construction errors") {
    CHECK_THROWS_AS(MeshSettings(3, std::vector<CellSetting>(2), std::vector<double>(3)), StructuralError);
    CHECK_THROWS_AS(MeshSettings(3, std::vector<CellSetting>(3), std::vector<double>(2)), StructuralError);
    std::map<CellAddress, CellSetting> partial{{{0, 0}, CellSetting::bar()}};
    CHECK_THROWS_AS(MeshSettings(3, partial, std::vector<double>(3)), StructuralError);
    CHECK_THROWS_AS(MeshSettings(0), ValidationError);
    CHECK_THROWS_AS(MeshSettings(4).at({1, 0}), ValidationError);
}

TEST_CASE("unitary validation") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(3, 3);
    m(0, 0) = 1.01;
    try {
        (void)Unitary::from_matrix(m);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("0.0") != std::string::npos);
    }
    CHECK_THROWS_AS(Unitary::from_matrix(Eigen::MatrixXcd::Identity(2, 3)), ValidationError);
    CHECK_NOTHROW(Unitary::from_matrix(Eigen::MatrixXcd::Identity(3, 3)));
    Eigen::MatrixXcd gain = Eigen::MatrixXcd::Identity(2, 2) * 1.1;
    CHECK_THROWS_AS(TransferMatrix::from_matrix(gain), ValidationError);
    CHECK(TransferMatrix::from_matrix(Eigen::MatrixXcd::Identity(2, 2) * 0.5).sub_unitary());
}

TEST_CASE("settings json round trip") {
    const auto s = random_settings(6, 99);
    nlohmann::json j = s;
    const auto back = mesh_settings_from_json(j);
    CHECK(back.n() == 6);
    for (std::size_t k = 0; k < s.cells().size(); ++k) {
        CHECK(std::abs(phase_distance(back.cells()[k].theta, s.cells()[k].theta)) < 1e-13);
        CHECK(std::abs(phase_distance(back.cells()[k].phi, s.cells()[k].phi)) < 1e-13);
    }
    // Serialization is stable under a second round trip.
    nlohmann::json j2 = back;
    CHECK(j2.dump() == nlohmann::json(mesh_settings_from_json(j2)).dump());

    auto dup = j;
    dup["cells"].push_back(dup["cells"][0]);
    CHECK_THROWS_AS(mesh_settings_from_json(dup), StructuralError);
    CHECK_THROWS_AS(mesh_settings_from_json(nlohmann::json::parse("{\"n\": 3}")), StructuralError);
}

TEST_CASE("loss model") {
    const auto s = random_settings(5, 3);
    const TransferMatrix lossless = apply_loss(s, LossBudget::lossless(5));
    CHECK((lossless.matrix() - mesh_unitary(s).matrix()).cwiseAbs().maxCoeff() == 0.0);

    LossBudget loss{0.9, 0.07, std::vector<double>(5, 15.7)};
    const TransferMatrix lossy = apply_loss(MeshSettings(5), loss);
    const double expected_db = 2 * 0.9 + 0.07 * 15.7;
    for (int m = 0; m < 5; ++m) {
        CHECK(-10.0 * std::log10(std::norm(lossy(m, m))) == doctest::Approx(expected_db).epsilon(1e-12));
    }
    // Uniform loss scales the whole matrix.
    const TransferMatrix scaled = apply_loss(s, loss);
    CHECK((scaled.matrix() / std::sqrt(db_to_power(expected_db)) - mesh_unitary(s).matrix()).cwiseAbs().maxCoeff() <
          1e-12);

    CHECK_THROWS_AS(LossBudget({-1.0, 0.0, std::vector<double>(5, 0.0)}).validate(5), ValidationError);
    CHECK_THROWS_AS(LossBudget({0.0, 0.0, std::vector<double>(4, 0.0)}).validate(5), ValidationError);
    CHECK(db_to_power(10.0) == doctest::Approx(0.1));
    CHECK(db_to_amplitude(20.0) == doctest::Approx(0.1));
}

TEST_CASE("propagate with splitter errors stays passive") {
    const auto s = random_settings(6, 8);
    std::vector<CellError> errors(cell_count(6));
    Rng rng(4);
    for (auto& e : errors) {
        e.splitter_in = 0.05 * rng.normal();
        e.splitter_out = 0.05 * rng.normal();
        e.theta = 0.1 * rng.normal();
        e.phi = 0.1 * rng.normal();
    }
    const auto t = propagate(s, LossBudget::lossless(6), errors);
    CHECK(unitarity_error(t.matrix()) < 1e-12);
    CHECK((t.matrix() - mesh_unitary(s).matrix()).cwiseAbs().maxCoeff() > 1e-3);
    CHECK_THROWS_AS(propagate(s, LossBudget::lossless(6), std::vector<CellError>(3)), StructuralError);
}

TEST_CASE("rng is reproducible and well formed") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(1);
    double sum = 0.0;
    double sq = 0.0;
    const int count = 200000;
    for (int i = 0; i < count; ++i) {
        const double z = c.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / count) < 0.01);
    CHECK(std::abs(sq / count - 1.0) < 0.01);
    for (int i = 0; i < 1000; ++i) CHECK(c.below(7) < 7);
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(5, 0, 1) != derive_seed(5, 1, 0));
}

TEST_CASE("uniform loss scales singular values") {
    const auto s = random_settings(6, 21);
    LossBudget loss{0.9, 0.07, std::vector<double>(6, 15.7)};
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(apply_loss(s, loss).matrix());
    const double expected = std::pow(10.0, -(1.8 + 0.07 * 15.7) / 20.0);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(svd.singularValues()(i) == doctest::Approx(expected).epsilon(1e-12));

    LossBudget facets{0.9, 0.0, std::vector<double>(6, 15.7)};
    const auto t = apply_loss(MeshSettings(6), facets);
    for (int m = 0; m < 6; ++m) CHECK(std::norm(t(m, m)) == doctest::Approx(std::pow(10.0, -0.18)).epsilon(1e-12));
}
