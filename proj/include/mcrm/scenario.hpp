#ifndef MCRM_SCENARIO_HPP
#define MCRM_SCENARIO_HPP

#include <map>
#include <optional>
#include <string>

#include "mcrm/families.hpp"

namespace mcrm {

/// One check declaration: which suite to run against which subjects,
/// with replayable randomness and an expected outcome.
struct CheckSpec {
    std::string name;
    std::string subject;
    std::string subject2;
    std::string fine;   // algebra name (range_lemma)
    std::string coarse; // algebra name (range_lemma)
    std::string t1;     // domain algebra name (intercons_link)
    std::string t2;
    int trials = 100;
    int samples = 24;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    std::string expect = "pass"; // "pass" or "fail"
    std::string expect_class;    // classify_diagonal only
    std::optional<double> expect_a;
};

/// A fully constructed scenario: every named object is built and every
/// reference resolved at parse time.
struct Scenario {
    std::string digest;
    FiniteProbSpace space;
    std::optional<ProductSpace> product;
    std::map<std::string, SigmaAlgebra> algebras;
    std::map<std::string, Utility> utilities;
    std::map<std::string, OuterMap> outer_maps;
    std::map<std::string, Crm> crms;
    std::map<std::string, CrmFamily> families;
    std::vector<CheckSpec> checks;
};

Scenario parse_scenario(const std::string& path);
Scenario parse_scenario_text(const std::string& text);

struct CheckOutcome {
    CheckSpec spec;
    CheckReport report;
    bool matched = false; // outcome agrees with the declared expectation
    double wall_ms = 0.0;
};

struct Report {
    std::string scenario_digest;
    std::vector<CheckOutcome> outcomes;

    bool all_matched() const;
    nlohmann::json to_json(bool include_timing = true) const;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Execute the checks in declaration order. Check failures are recorded,
/// never thrown; only invalid constructions abort.
Report run(const Scenario& scenario);

enum class ReportFormat { Json, Text, Csv };

/// Write the report to `path`, or to stdout when path is empty.
void emit(const Report& report, ReportFormat format, const std::string& path);

/// Ready-made scenario texts. `kind` is one of spatial, dynamic, cce.
std::string demo_scenario(const std::string& kind);

std::uint64_t fnv1a64(const std::string& text);

} // namespace mcrm

#endif
