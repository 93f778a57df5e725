#include "oracles.hpp"

#include "qpp/compiler.hpp"
#include "qpp/error.hpp"

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

using namespace qpp;
using std::numbers::pi;

TEST_CASE("identity compiles to all-bar cells") {
    for (int n = 2; n <= 8; ++n) {
        const auto r = clements_decompose(Unitary::identity(n));
        CHECK(r.residual < 1e-12);
        for (const auto& c : r.settings.cells()) {
            CHECK(std::abs(phase_distance(c.theta, pi)) < 1e-12);
            CHECK(std::abs(phase_distance(c.phi, 0.0)) < 1e-12);
        }
        // The bar state carries a relative phase, so the output screen is
        // not zero; the magnitude pattern is the identity.
        const auto u = mesh_unitary(r.settings);
        CHECK((u.matrix().cwiseAbs() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("Haar round trip") {
    for (int n = 1; n <= 12; ++n) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto u = haar_random(n, seed);
            const auto r = clements_decompose(u);
            CHECK(r.residual < 1e-10);
            CHECK(r.nulling_sequence.size() == cell_count(n));
            for (const auto& c : r.settings.cells()) {
                CHECK(c.theta >= 0.0);
                CHECK(c.theta <= pi + 1e-12);
            }
        }
    }
}

TEST_CASE("round trip on independently generated unitaries") {
    for (int n = 2; n <= 10; ++n) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const oracle::Mat m = oracle::gram_schmidt_haar(n, seed);
            const auto r = clements_decompose(m);
            const auto rebuilt = mesh_unitary(r.settings);
            CHECK((rebuilt.matrix() - m).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("permutations compile to bar and cross cells only") {
    const auto perms = permutation_ensemble(7, 50, 11);
    for (const auto& p : perms) {
        const auto u = permutation_unitary(p);
        const auto r = clements_decompose(u);
        CHECK(r.residual < 1e-12);
        for (const auto& c : r.settings.cells()) {
            const bool bar = std::abs(phase_distance(c.theta, pi)) < 1e-9;
            const bool cross = std::abs(phase_distance(c.theta, 0.0)) < 1e-9;
            CHECK((bar || cross));
        }
    }
}

TEST_CASE("decomposition rejects non-unitary input") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(3, 3);
    m(1, 2) = 0.1;
    CHECK_THROWS_AS(clements_decompose(m), ValidationError);
    CHECK_THROWS_AS(clements_decompose(Eigen::MatrixXcd::Identity(2, 3)), ValidationError);
}

TEST_CASE("haar sampler is seeded") {
    CHECK(haar_random(6, 3).matrix() == haar_random(6, 3).matrix());
    CHECK((haar_random(6, 3).matrix() - haar_random(6, 4).matrix()).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(unitarity_error(haar_random(20, 0).matrix()) < 1e-12);
}

// |U_00|^2 of a Haar unitary follows Beta(1, n - 1): CDF 1 - (1 - x)^(n-1).
TEST_CASE("Haar marginal passes a Kolmogorov-Smirnov test") {
    const int n = 5;
    const std::size_t samples = 2000;
    for (int entry : {0, 7}) {
        std::vector<double> x;
        for (std::size_t i = 0; i < samples; ++i) {
            const auto u = haar_random(n, 1000 + i);
            x.push_back(std::norm(u(entry / n, entry % n)));
        }
        std::sort(x.begin(), x.end());
        double d = 0.0;
        for (std::size_t i = 0; i < samples; ++i) {
            const double cdf = 1.0 - std::pow(1.0 - x[i], n - 1);
            d = std::max({d, std::abs(cdf - static_cast<double>(i) / samples),
                          std::abs(cdf - static_cast<double>(i + 1) / samples)});
        }
        CHECK(oracle::ks_p_value(d, samples) > 0.01);
    }
}

// Left-invariance: V U has the same law as U, checked on the phase of an
// entry, which is uniform on (-pi, pi].
TEST_CASE("Haar phases are uniform after a fixed rotation") {
    const int n = 4;
    const std::size_t samples = 2000;
    const auto v = oracle::gram_schmidt_haar(n, 5);
    std::vector<double> phases;
    for (std::size_t i = 0; i < samples; ++i) {
        const Eigen::MatrixXcd w = v * haar_random(n, 50000 + i).matrix();
        phases.push_back(std::arg(w(1, 2)));
    }
    std::sort(phases.begin(), phases.end());
    double d = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double cdf = (phases[i] + pi) / (2.0 * pi);
        d = std::max({d, std::abs(cdf - static_cast<double>(i) / samples),
                      std::abs(cdf - static_cast<double>(i + 1) / samples)});
    }
    CHECK(oracle::ks_p_value(d, samples) > 0.01);
}

TEST_CASE("permutation ensembles") {
    const auto perms = permutation_ensemble(20, 190, 0);
    CHECK(perms.size() == 190);
    std::set<std::vector<int>> distinct(perms.begin(), perms.end());
    CHECK(distinct.size() == 190);
    CHECK(perms == permutation_ensemble(20, 190, 0));
    CHECK(permutation_ensemble(3, 6, 1).size() == 6);
    CHECK_THROWS_AS(permutation_ensemble(3, 7, 1), ValidationError);
    CHECK_THROWS_AS(permutation_ensemble(3, 0, 1), ValidationError);
    const std::vector<int> bad{0, 0, 1};
    CHECK_THROWS_AS(permutation_unitary(bad), ValidationError);
    const std::vector<int> swap{1, 0};
    const auto u = permutation_unitary(swap);
    CHECK(std::abs(u(1, 0)) == 1.0);
    CHECK(std::abs(u(0, 0)) == 0.0);
}

TEST_CASE("ensemble manifests") {
    EnsembleManifest m;
    m.kind = EnsembleManifest::Kind::permutation;
    m.n = 5;
    m.seed = 9;
    m.count = 10;
    nlohmann::json j = m;
    CHECK(j.get<EnsembleManifest>() == m);
    const auto a = build_ensemble(m);
    const auto b = build_ensemble(m);
    REQUIRE(a.size() == 10);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].matrix() == b[i].matrix());
    EnsembleManifest h;
    h.n = 4;
    h.count = 3;
    h.seed = 2;
    const auto haar = build_ensemble(h);
    CHECK(haar[1].matrix() == haar_random(4, ensemble_item_seed(2, 1)).matrix());
}

TEST_CASE("matrix csv round trip is exact") {
    const auto u = haar_random(5, 17);
    std::stringstream s;
    write_matrix_csv(s, u.matrix());
    const auto back = read_matrix_csv(s);
    CHECK(back == u.matrix());
    std::stringstream bad("1,2,3\n");
    CHECK_THROWS_AS(read_matrix_csv(bad), ValidationError);
}

TEST_CASE("golden decomposition") {
    std::ifstream in(std::string(QPP_GOLDEN_DIR) + "/compile_n4_seed7.json");
    REQUIRE(in.good());
    const auto golden = mesh_settings_from_json(nlohmann::json::parse(in));
    const auto r = clements_decompose(haar_random(4, 7));
    REQUIRE(golden.n() == 4);
    for (std::size_t k = 0; k < golden.cells().size(); ++k) {
        CHECK(std::abs(phase_distance(golden.cells()[k].theta, r.settings.cells()[k].theta)) < 1e-12);
        CHECK(std::abs(phase_distance(golden.cells()[k].phi, r.settings.cells()[k].phi)) < 1e-12);
    }
    for (int m = 0; m < 4; ++m) {
        CHECK(std::abs(phase_distance(golden.output_phases()[m], r.settings.output_phases()[m])) < 1e-12);
    }
}

TEST_CASE("reversal permutation") {
    for (int n : {2, 5, 8}) {
        std::vector<int> rev(n);
        for (int i = 0; i < n; ++i) rev[i] = n - 1 - i;
        const auto r = clements_decompose(permutation_unitary(rev));
        const Eigen::MatrixXd mag = mesh_unitary(r.settings).matrix().cwiseAbs();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) CHECK(std::abs(mag(i, j) - (i == n - 1 - j ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("Haar second moment and cross-generator agreement") {
    const int n = 20;
    const int samples = 10000;
    double m = 0.0;
    double m2 = 0.0;
    double f_lib = 0.0;
    double f_lib2 = 0.0;
    double f_ref = 0.0;
    double f_ref2 = 0.0;
    auto overlap = [](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
        return (a.cwiseAbs().transpose() * b.cwiseAbs()).trace() / static_cast<double>(a.rows());
    };
    for (int i = 0; i < samples; ++i) {
        const double x = std::norm(haar_random(n, 200000 + i)(0, 0));
        m += x;
        m2 += x * x;
        const double fl = overlap(haar_random(n, 2 * i + 1).matrix(), haar_random(n, 2 * i + 2).matrix());
        const double fr = overlap(oracle::gram_schmidt_haar(n, 2 * i + 1), oracle::gram_schmidt_haar(n, 2 * i + 2));
        f_lib += fl;
        f_lib2 += fl * fl;
        f_ref += fr;
        f_ref2 += fr * fr;
    }
    m /= samples;
    const double se = std::sqrt((m2 / samples - m * m) / samples);
    CHECK(std::abs(m - 1.0 / n) < 3.0 * se);
    f_lib /= samples;
    f_ref /= samples;
    const double se_f = std::sqrt((f_lib2 / samples - f_lib * f_lib + f_ref2 / samples - f_ref * f_ref) / samples);
    CHECK(std::abs(f_lib - f_ref) < 3.0 * se_f);
}

TEST_CASE("column products are associative") {
    const auto s = clements_decompose(haar_random(7, 1)).settings;
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Identity(7, 7);
    for (int c = 0; c < column_count(7); ++c) full = column_matrix(s, c) * full;
    for (int split = 0; split <= column_count(7); ++split) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(7, 7);
        Eigen::MatrixXcd b = Eigen::MatrixXcd::Identity(7, 7);
        for (int c = 0; c < split; ++c) a = column_matrix(s, c) * a;
        for (int c = split; c < column_count(7); ++c) b = column_matrix(s, c) * b;
        CHECK(((b * a) - full).cwiseAbs().maxCoeff() < 1e-12);
    }
}
