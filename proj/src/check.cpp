#include "mcrm/check.hpp"

namespace mcrm {

nlohmann::json CheckReport::to_json() const {
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : failures) {
        fails.push_back({{"trial", f.trial},
                         {"witness", f.witness},
                         {"observed", f.observed},
                         {"expected", f.expected}});
    }
    return {{"check_name", check_name}, {"trials", trials},   {"passes", passes},
            {"skipped", skipped},       {"max_residual", max_residual}, {"failures", fails}};
}

CheckReport check_report_from_json(const nlohmann::json& j) {
    CheckReport r;
    r.check_name = j.at("check_name").get<std::string>();
    r.trials = j.at("trials").get<long>();
    r.passes = j.at("passes").get<long>();
    r.skipped = j.at("skipped").get<long>();
    r.max_residual = j.at("max_residual").get<double>();
    for (const auto& f : j.at("failures")) {
        r.failures.push_back({f.at("trial").get<long>(), f.at("witness"), f.at("observed"), f.at("expected")});
    }
    return r;
}

} // namespace mcrm
