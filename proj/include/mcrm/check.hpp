#ifndef MCRM_CHECK_HPP
#define MCRM_CHECK_HPP

#include <string>
#include <vector>

#include <json.hpp>

namespace mcrm {

/// One failed trial with the inputs that witnessed it.
struct CheckFailure {
    long trial = 0;
    nlohmann::json witness;
    nlohmann::json observed;
    nlohmann::json expected;
};

/// Outcome of one randomized property check. Failures are data, not
/// errors; a check passes iff it recorded none.
struct CheckReport {
    std::string check_name;
    long trials = 0;
    long passes = 0;
    long skipped = 0;
    double max_residual = 0.0;
    std::vector<CheckFailure> failures;

    bool passed() const { return failures.empty(); }

    void note_residual(double r) {
        if (r > max_residual) max_residual = r;
    }

    void record(bool ok, long trial, const nlohmann::json& witness, const nlohmann::json& observed,
                const nlohmann::json& expected) {
        ++trials;
        if (ok) {
            ++passes;
        } else {
            failures.push_back({trial, witness, observed, expected});
        }
    }

    nlohmann::json to_json() const;
};

CheckReport check_report_from_json(const nlohmann::json& j);

} // namespace mcrm

#endif
