#include "qpp/analysis.hpp"

#include "qpp/error.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

namespace qpp {

namespace {

void check_same_size(const Unitary& target, const AmplitudeMatrix& measured) {
    if (target.n() != measured.n()) {
        throw ValidationError("dimension mismatch: target is " + std::to_string(target.n()) + "x" +
                              std::to_string(target.n()) + ", measured is " + std::to_string(measured.n()) + "x" +
                              std::to_string(measured.n()));
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace

AmplitudeMatrix AmplitudeMatrix::from_magnitudes(RealMatrix m) {
    if (m.rows() != m.cols() || m.rows() < 1) throw ValidationError("amplitude matrix must be square and non-empty");
    if ((m.array() < 0.0).any()) throw ValidationError("amplitude matrix entries must be non-negative");
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double norm = m.col(c).norm();
        if (!(norm > 0.0)) throw ValidationError("amplitude matrix column " + std::to_string(c) + " is zero");
        m.col(c) /= norm;
    }
    return AmplitudeMatrix(std::move(m));
}

AmplitudeMatrix AmplitudeMatrix::from_powers(const RealMatrix& powers) {
    if ((powers.array() < 0.0).any()) throw ValidationError("measured powers must be non-negative");
    return from_magnitudes(powers.cwiseSqrt());
}

AmplitudeMatrix AmplitudeMatrix::of(const Unitary& u) { return from_magnitudes(u.matrix().cwiseAbs()); }

double amplitude_fidelity(const Unitary& target, const AmplitudeMatrix& measured) {
    check_same_size(target, measured);
    const RealMatrix dagger_abs = target.matrix().adjoint().cwiseAbs();
    return (dagger_abs * measured.magnitudes()).trace() / target.n();
}

RealMatrix error_matrix(const Unitary& target, const AmplitudeMatrix& measured) {
    check_same_size(target, measured);
    return target.matrix().cwiseAbs() - measured.magnitudes();
}

Histogram make_histogram(std::span<const double> values, double lower, double upper, double bin_width) {
    if (!(upper > lower) || !(bin_width > 0.0)) throw ValidationError("histogram needs upper > lower, width > 0");
    Histogram h;
    h.lower = lower;
    h.upper = upper;
    h.bin_width = bin_width;
    const auto bins = static_cast<std::size_t>(std::llround((upper - lower) / bin_width));
    h.counts.assign(bins, 0);
    for (double v : values) {
        if (v < lower) {
            ++h.underflow;
        } else if (v > upper) {
            ++h.overflow;
        } else {
            auto k = static_cast<std::size_t>(std::floor((v - lower) / bin_width));
            if (k >= bins) k = bins - 1;
            ++h.counts[k];
        }
    }
    return h;
}

EnsembleStatistics ensemble_statistics(std::span<const double> values, double lower, double upper,
                                       double bin_width) {
    if (values.empty()) throw ValidationError("ensemble_statistics needs at least one value");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    EnsembleStatistics s;
    s.count = sorted.size();
    s.min = sorted.front();
    s.max = sorted.back();
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(s.count - 1));
    }
    s.histogram = make_histogram(sorted, lower, upper, bin_width);
    return s;
}

EnsembleStatistics ensemble_statistics(std::span<const double> values) {
    return ensemble_statistics(values, 0.90, 1.00, 0.0025);
}

int useful_processor_size(double loss_per_unit_cell_db) {
    if (!(loss_per_unit_cell_db > 0.0)) {
        throw ValidationError("loss per unit cell must be > 0 dB");
    }
    return static_cast<int>(std::floor(kInverseEThresholdDb / loss_per_unit_cell_db));
}

std::vector<PlatformEntry> builtin_platform_entries() {
    auto row = [](std::string name, int modes, int heaters, double il, double cl, double pl) {
        PlatformEntry e;
        e.name = std::move(name);
        e.platform = "SiN";
        e.modes = modes;
        e.heaters = heaters;
        e.insertion_loss_db = il;
        e.coupling_loss_db_per_facet = cl;
        e.propagation_loss_db_per_cm = pl;
        e.loss_per_unit_cell_db = (il - 2.0 * cl) / modes;
        e.citation = "table";
        return e;
    };
    return {row("12-mode", 12, 132, 5.0, 2.1, 0.1), row("20-mode", 20, 380, 2.9, 0.9, 0.07)};
}

std::vector<PlatformEntry> read_platform_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("platform CSV is empty");
    const auto header = split_csv_line(line);
    const std::vector<std::string> expected{"name", "platform", "modes", "loss_per_unit_cell_db",
                                            "insertion_loss_db", "citation"};
    if (header != expected) {
        throw ValidationError("platform CSV header must be name,platform,modes,loss_per_unit_cell_db,"
                              "insertion_loss_db,citation");
    }
    std::vector<PlatformEntry> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv_line(line);
        if (f.size() != expected.size()) {
            throw ValidationError("platform CSV line " + std::to_string(line_no) + ": expected 6 fields");
        }
        PlatformEntry e;
        e.name = f[0];
        e.platform = f[1];
        try {
            e.modes = std::stoi(f[2]);
            e.loss_per_unit_cell_db = std::stod(f[3]);
            e.insertion_loss_db = f[4].empty() ? -1.0 : std::stod(f[4]);
        } catch (const std::exception&) {
            throw ValidationError("platform CSV line " + std::to_string(line_no) + ": bad number");
        }
        e.citation = f[5];
        out.push_back(std::move(e));
    }
    return out;
}

PlatformReport platform_report(std::span<const PlatformEntry> extra_entries) {
    PlatformReport report;
    report.loss_table = builtin_platform_entries();
    report.loss_table.insert(report.loss_table.end(), extra_entries.begin(), extra_entries.end());
    for (const auto& e : report.loss_table) {
        if (e.loss_per_unit_cell_db > 0.0) {
            report.ranking.push_back({e, useful_processor_size(e.loss_per_unit_cell_db)});
        }
    }
    std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const auto& a, const auto& b) {
        if (a.useful_size != b.useful_size) return a.useful_size > b.useful_size;
        return a.entry.name < b.entry.name;
    });
    return report;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    std::size_t total = 0;
    int k = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        ++k;
        total += g.size();
        grand += std::accumulate(g.begin(), g.end(), 0.0);
    }
    if (k < 2) throw ValidationError("ANOVA needs at least two non-empty groups");
    if (total <= static_cast<std::size_t>(k)) throw ValidationError("ANOVA needs within-group degrees of freedom");
    grand /= static_cast<double>(total);

    double between = 0.0;
    double within = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double v : g) within += (v - mean) * (v - mean);
    }
    AnovaResult r;
    r.df_between = k - 1;
    r.df_within = static_cast<int>(total) - k;
    const double ms_between = between / r.df_between;
    const double ms_within = within / r.df_within;
    if (ms_within <= 0.0) {
        r.f_statistic = ms_between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        r.p_value = ms_between > 0.0 ? 0.0 : 1.0;
        return r;
    }
    r.f_statistic = ms_between / ms_within;
    boost::math::fisher_f dist(r.df_between, r.df_within);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.f_statistic));
    return r;
}

void to_json(nlohmann::json& j, const Histogram& h) {
    j = nlohmann::json{{"lower", h.lower},         {"upper", h.upper},      {"bin_width", h.bin_width},
                       {"counts", h.counts},       {"underflow", h.underflow}, {"overflow", h.overflow}};
}

void to_json(nlohmann::json& j, const EnsembleStatistics& s) {
    j = nlohmann::json{{"count", s.count}, {"mean", s.mean}, {"std", s.std_dev},
                       {"min", s.min},     {"max", s.max},   {"histogram", s.histogram}};
}

void to_json(nlohmann::json& j, const PlatformReport& r) {
    nlohmann::json table = nlohmann::json::array();
    for (const auto& e : r.loss_table) {
        nlohmann::json row{{"name", e.name},
                           {"platform", e.platform},
                           {"modes", e.modes},
                           {"loss_per_unit_cell_db", e.loss_per_unit_cell_db},
                           {"insertion_loss_db", e.insertion_loss_db},
                           {"citation", e.citation}};
        if (e.heaters > 0) row["heaters"] = e.heaters;
        if (e.coupling_loss_db_per_facet >= 0.0) row["coupling_loss_db_per_facet"] = e.coupling_loss_db_per_facet;
        if (e.propagation_loss_db_per_cm >= 0.0) row["propagation_loss_db_per_cm"] = e.propagation_loss_db_per_cm;
        table.push_back(std::move(row));
    }
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& r2 : r.ranking) {
        ranking.push_back({{"name", r2.entry.name},
                           {"platform", r2.entry.platform},
                           {"loss_per_unit_cell_db", r2.entry.loss_per_unit_cell_db},
                           {"useful_size", r2.useful_size}});
    }
    j = nlohmann::json{{"loss_table", std::move(table)}, {"ranking", std::move(ranking)}};
}

}  // namespace qpp
