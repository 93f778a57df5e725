#pragma once

#include "qpp/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpp {

// One elimination step of the decomposition. Right-side steps multiply the
// working matrix by T^{-1} on columns (mode, mode+1); left-side steps
// multiply by T on rows (mode, mode+1). (row, col) is the zeroed element.
struct NullingStep {
    enum class Side { right, left };
    Side side;
    int row;
    int col;
    int mode;
};

struct DecompositionReport {
    MeshSettings settings;
    double residual;  // max-abs |mesh_unitary(settings) - U|
    std::vector<NullingStep> nulling_sequence;
};

inline constexpr double kDecomposeTolerance = 1e-8;

// Rectangular (Clements) decomposition into mesh settings. theta lands in
// [0, pi]; when the element to be nulled is already zero the cell is set to
// bar with phi = 0.
DecompositionReport clements_decompose(const Unitary& u);

// Accepts a raw matrix; throws ValidationError when it is not unitary within
// kDecomposeTolerance.
DecompositionReport clements_decompose(const ComplexMatrix& u);

// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
// R's diagonal moved into Q.
Unitary haar_random(int n, std::uint64_t seed);

// Matrix routing input i to output perm[i]. Throws ValidationError if `perm`
// is not a bijection on {0..n-1}.
Unitary permutation_unitary(std::span<const int> perm);

// `count` distinct permutations of n elements, sampled uniformly without
// replacement. Throws ValidationError when count < 1 or count > n!.
std::vector<std::vector<int>> permutation_ensemble(int n, int count, std::uint64_t seed);

struct EnsembleManifest {
    enum class Kind { haar, permutation };
    Kind kind = Kind::haar;
    int n = 20;
    std::uint64_t seed = 0;
    int count = 1;

    bool operator==(const EnsembleManifest&) const = default;
};

// Seed for item `index` of an ensemble. Items are independent of each other
// and of evaluation order.
std::uint64_t ensemble_item_seed(std::uint64_t seed, std::size_t index);

// Materializes the targets described by a manifest.
std::vector<Unitary> build_ensemble(const EnsembleManifest& manifest);

void to_json(nlohmann::json& j, const EnsembleManifest& m);
void from_json(const nlohmann::json& j, EnsembleManifest& m);

// One line per matrix row: re(0),im(0),re(1),im(1),...
void write_matrix_csv(std::ostream& out, const ComplexMatrix& m);
ComplexMatrix read_matrix_csv(std::istream& in);

}  // namespace qpp
