#pragma once

// Small configurations whose report payloads are pinned in tests/golden.
// make_goldens writes them; test_campaign compares against them.

#include "qpp/campaign.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace golden {

inline std::vector<std::pair<std::string, nlohmann::json>> configs() {
    return {
        {"fidelity_haar", {{"campaign", "fidelity-haar"}, {"n", 4}, {"seed", 3}, {"count", 6}, {"profile", "calibrated"}}},
        {"fidelity_perm", {{"campaign", "fidelity-perm"}, {"n", 4}, {"seed", 3}, {"count", 5}, {"profile", "calibrated"}}},
        {"calibration", {{"campaign", "calibration"}, {"n", 3}, {"seed", 1}, {"detector_sigma", 1e-3}}},
        {"hom_map",
         {{"campaign", "hom-map"}, {"n", 4}, {"seed", 2}, {"overlap", 0.98}, {"splitter_error_sigma", 0.02}}},
        {"delay_sweep", {{"campaign", "delay-sweep"}, {"n", 4}, {"seed", 0}, {"drive_levels", {0.0, 3.14159, 6.0}}}},
        {"loss_report", {{"campaign", "loss-report"}, {"n", 6}}},
    };
}

inline std::string path(const std::string& dir, const std::string& name) { return dir + "/" + name + ".json"; }

// Structural equality with a numeric tolerance on floating-point leaves.
inline bool json_close(const nlohmann::json& a, const nlohmann::json& b, std::string& where,
                       const std::string& at = "$") {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>();
        const double y = b.get<double>();
        if (std::abs(x - y) <= 1e-9 + 1e-9 * std::max(std::abs(x), std::abs(y))) return true;
        where = at + ": " + a.dump() + " vs " + b.dump();
        return false;
    }
    if (a.type() != b.type()) {
        where = at + ": type differs";
        return false;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            where = at + ": key count differs";
            return false;
        }
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                where = at + "." + it.key() + ": missing";
                return false;
            }
            if (!json_close(it.value(), b.at(it.key()), where, at + "." + it.key())) return false;
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where = at + ": length differs";
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!json_close(a[i], b[i], where, at + "[" + std::to_string(i) + "]")) return false;
        }
        return true;
    }
    if (a != b) {
        where = at + ": " + a.dump() + " vs " + b.dump();
        return false;
    }
    return true;
}

}  // namespace golden
