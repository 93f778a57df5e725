#pragma once

#include "qpp/mesh.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace qpp {

using RealMatrix = Eigen::MatrixXd;

// Elementwise magnitudes with unit-norm columns: the |U_exp| that an
// intensity measurement can recover.
class AmplitudeMatrix {
public:
    // Normalizes every column of `magnitudes` to unit Euclidean norm. Throws
    // ValidationError on negative entries, non-square input or zero columns.
    static AmplitudeMatrix from_magnitudes(RealMatrix magnitudes);

    // Column-normalized square roots of measured output powers
    // (powers(out, in)).
    static AmplitudeMatrix from_powers(const RealMatrix& powers);

    static AmplitudeMatrix of(const Unitary& u);

    int n() const { return static_cast<int>(m_.rows()); }
    const RealMatrix& magnitudes() const { return m_; }
    double operator()(int row, int col) const { return m_(row, col); }

private:
    explicit AmplitudeMatrix(RealMatrix m) : m_(std::move(m)) {}
    RealMatrix m_;
};

// F = (1/N) Tr(|U^dagger| . measured), with |U^dagger| = |U|^T.
double amplitude_fidelity(const Unitary& target, const AmplitudeMatrix& measured);

// |target| - measured, elementwise.
RealMatrix error_matrix(const Unitary& target, const AmplitudeMatrix& measured);

struct Histogram {
    double lower = 0.0;
    double upper = 0.0;
    double bin_width = 0.0;
    std::vector<int> counts;
    int underflow = 0;
    int overflow = 0;
};

// Fixed bins: [lower, upper) split into width-sized bins; the upper edge is
// included in the last bin.
Histogram make_histogram(std::span<const double> values, double lower, double upper, double bin_width);

struct EnsembleStatistics {
    std::size_t count = 0;
    double mean = 0.0;
    double std_dev = 0.0;  // sample standard deviation (n - 1); 0 for one value
    double min = 0.0;
    double max = 0.0;
    Histogram histogram;
};

// Fidelity statistics with 0.25% bins over [0.90, 1.00]. Inputs are sorted
// before reduction so the result does not depend on their order.
EnsembleStatistics ensemble_statistics(std::span<const double> values);
EnsembleStatistics ensemble_statistics(std::span<const double> values, double lower, double upper, double bin_width);

// e^-1 transmission threshold expressed in dB: 10 log10(e).
inline constexpr double kInverseEThresholdDb = 4.3429448190325182765;

// floor(10 log10(e) / loss_per_unit_cell_db). Throws ValidationError for
// loss <= 0.
int useful_processor_size(double loss_per_unit_cell_db);

struct PlatformEntry {
    std::string name;
    std::string platform;
    int modes = 0;
    int heaters = 0;  // 0 when unknown
    double loss_per_unit_cell_db = 0.0;
    double insertion_loss_db = 0.0;
    double coupling_loss_db_per_facet = -1.0;    // < 0 when unknown
    double propagation_loss_db_per_cm = -1.0;    // < 0 when unknown
    std::string citation;
};

// The two processors compared in the 12- vs 20-mode table. Loss per unit cell
// is the on-chip share of the insertion loss spread over the N columns a
// light path crosses.
std::vector<PlatformEntry> builtin_platform_entries();

// CSV with header name,platform,modes,loss_per_unit_cell_db,insertion_loss_db,citation
std::vector<PlatformEntry> read_platform_csv(std::istream& in);

struct PlatformRanking {
    PlatformEntry entry;
    int useful_size = 0;
};

struct PlatformReport {
    std::vector<PlatformEntry> loss_table;  // built-ins first, then extras, as given
    std::vector<PlatformRanking> ranking;   // by useful size, descending; ties by name
};

PlatformReport platform_report(std::span<const PlatformEntry> extra_entries);

struct AnovaResult {
    double f_statistic = 0.0;
    double p_value = 1.0;
    int df_between = 0;
    int df_within = 0;
};

// One-way ANOVA across groups. Groups with no members are skipped. Throws
// ValidationError with fewer than two non-empty groups or no within-group
// degrees of freedom.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

void to_json(nlohmann::json& j, const Histogram& h);
void to_json(nlohmann::json& j, const EnsembleStatistics& s);
void to_json(nlohmann::json& j, const PlatformReport& r);

}  // namespace qpp
