#include "mcrm/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace mcrm {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    fail(ErrorKind::ValidationError, path + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) bad(path + "." + key, "missing field");
    return j.at(key);
}

std::string need_str(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_string()) bad(path + "." + key, "expected a string");
    return v.get<std::string>();
}

double need_num(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_number()) bad(path + "." + key, "expected a number");
    return v.get<double>();
}

int need_int(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_number_integer()) bad(path + "." + key, "expected an integer");
    return v.get<int>();
}

Eigen::VectorXd need_vec(const json& j, const char* key, const std::string& path) {
    const json& v = need(j, key, path);
    if (!v.is_array() || v.empty()) bad(path + "." + key, "expected a non-empty array of numbers");
    Eigen::VectorXd out(static_cast<int>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!v[k].is_number()) bad(path + "." + key, "expected numbers");
        out(static_cast<int>(k)) = v[k].get<double>();
    }
    return out;
}

PiecewiseLinear parse_table(const json& j, const std::string& path) {
    const Eigen::VectorXd xs = need_vec(j, "x", path);
    const Eigen::VectorXd ys = need_vec(j, "y", path);
    std::vector<double> x(xs.data(), xs.data() + xs.size());
    std::vector<double> y(ys.data(), ys.data() + ys.size());
    return PiecewiseLinear(std::move(x), std::move(y));
}

SigmaAlgebra parse_algebra(const json& j, const Scenario& sc, const std::string& path) {
    if (j.is_string()) {
        const std::string kind = j.get<std::string>();
        if (kind == "trivial") return SigmaAlgebra::trivial(sc.space);
        if (kind == "discrete") return SigmaAlgebra::discrete(sc.space);
        bad(path, "unknown algebra shorthand '" + kind + "'");
    }
    if (j.is_object() && j.contains("factor")) {
        if (!sc.product.has_value()) bad(path, "factor algebras need a product space");
        const int which = need_int(j, "factor", path);
        if (which == 1) return sc.product->factor1;
        if (which == 2) return sc.product->factor2;
        bad(path + ".factor", "must be 1 or 2");
    }
    const json& blocks = need(j, "blocks", path);
    if (!blocks.is_array()) bad(path + ".blocks", "expected an array of blocks");
    std::vector<std::vector<int>> parsed;
    for (const auto& blk : blocks) {
        if (!blk.is_array()) bad(path + ".blocks", "each block must be an array of states");
        std::vector<int> states;
        for (const auto& s : blk) states.push_back(s.get<int>());
        parsed.push_back(std::move(states));
    }
    return SigmaAlgebra(sc.space, std::move(parsed));
}

Utility parse_utility(const json& j, const std::string& path) {
    const std::string kind = need_str(j, "kind", path);
    if (kind == "linear_weighted")
        return Utility::linear_weighted(need_num(j, "a", path), need_num(j, "b", path), need_vec(j, "weights", path));
    if (kind == "exponential_weighted")
        return Utility::exponential_weighted(need_num(j, "a", path), need_num(j, "b", path),
                                             need_num(j, "beta", path), need_vec(j, "weights", path));
    if (kind == "sum_of_univariate") {
        const json& tables = need(j, "tables", path);
        std::vector<PiecewiseLinear> parts;
        for (std::size_t k = 0; k < tables.size(); ++k)
            parts.push_back(parse_table(tables[k], path + ".tables[" + std::to_string(k) + "]"));
        return Utility::sum_of_univariate(std::move(parts));
    }
    bad(path + ".kind", "unknown utility kind '" + kind + "'");
}

OuterMap parse_outer(const json& j, const FiniteProbSpace& space, const std::string& path) {
    const std::string kind = need_str(j, "kind", path);
    if (kind == "negation") return OuterMap::negation(space);
    if (kind == "affine_neg")
        return OuterMap::affine_neg(space, need_num(j, "scale", path), need_num(j, "offset", path));
    if (kind == "tables") {
        const json& tables = need(j, "tables", path);
        if (static_cast<int>(tables.size()) != space.n()) bad(path + ".tables", "one table per state required");
        std::vector<PiecewiseLinear> per_state;
        for (std::size_t k = 0; k < tables.size(); ++k)
            per_state.push_back(parse_table(tables[k], path + ".tables[" + std::to_string(k) + "]"));
        return OuterMap::tables(space, std::move(per_state));
    }
    bad(path + ".kind", "unknown outer map kind '" + kind + "'");
}

const SigmaAlgebra& resolve_algebra(const Scenario& sc, const std::string& name, const std::string& path) {
    const auto it = sc.algebras.find(name);
    if (it == sc.algebras.end()) bad(path, "unknown algebra '" + name + "'");
    return it->second;
}

const Utility& resolve_utility(const Scenario& sc, const std::string& name, const std::string& path) {
    const auto it = sc.utilities.find(name);
    if (it == sc.utilities.end()) bad(path, "unknown utility '" + name + "'");
    return it->second;
}

const OuterMap& resolve_outer(const Scenario& sc, const std::string& name, const std::string& path) {
    const auto it = sc.outer_maps.find(name);
    if (it == sc.outer_maps.end()) bad(path, "unknown outer map '" + name + "'");
    return it->second;
}

const Crm& resolve_crm(const Scenario& sc, const std::string& name, const std::string& path) {
    const auto it = sc.crms.find(name);
    if (it == sc.crms.end()) bad(path, "unknown risk measure '" + name + "'");
    return it->second;
}

Crm parse_crm(const json& j, const Scenario& sc, const std::string& path) {
    const std::string kind = need_str(j, "kind", path);
    if (kind == "cert_equiv") {
        const auto& u = resolve_utility(sc, need_str(j, "utility", path), path + ".utility");
        const auto& outer = resolve_outer(sc, need_str(j, "outer", path), path + ".outer");
        const auto& domain = resolve_algebra(sc, need_str(j, "domain", path), path + ".domain");
        const auto& target = resolve_algebra(sc, need_str(j, "target", path), path + ".target");
        return make_cert_equiv(u, outer, domain, target);
    }
    if (kind == "normalized") {
        const auto& inner = resolve_crm(sc, need_str(j, "of", path), path + ".of");
        return normalize(inner);
    }
    if (kind == "constant_zero") {
        const auto& domain = resolve_algebra(sc, need_str(j, "domain", path), path + ".domain");
        const auto& target = resolve_algebra(sc, need_str(j, "target", path), path + ".target");
        return make_constant_zero(domain, target, need_int(j, "dim", path));
    }
    if (kind == "state_weighted") {
        const auto& domain = resolve_algebra(sc, need_str(j, "domain", path), path + ".domain");
        return make_state_weighted(domain, need_int(j, "dim", path), need_vec(j, "weights", path));
    }
    if (kind == "mixed_utility") {
        const auto& domain = resolve_algebra(sc, need_str(j, "domain", path), path + ".domain");
        const auto& target = resolve_algebra(sc, need_str(j, "target", path), path + ".target");
        const auto& mixing = resolve_algebra(sc, need_str(j, "mixing", path), path + ".mixing");
        const json& names = need(j, "utilities", path);
        std::vector<Utility> per_block;
        for (std::size_t k = 0; k < names.size(); ++k)
            per_block.push_back(
                resolve_utility(sc, names[k].get<std::string>(), path + ".utilities[" + std::to_string(k) + "]"));
        return make_mixed_utility(domain, target, mixing, std::move(per_block));
    }
    bad(path + ".kind", "unknown risk measure kind '" + kind + "'");
}

CrmFamily parse_family(const json& j, const Scenario& sc, const std::string& path) {
    const std::string kind = need_str(j, "kind", path);
    if (kind == "spatial") {
        const int s_size = need_int(j, "s_size", path);
        const int institutions = need_int(j, "institutions", path);
        double states = 1;
        for (int k = 0; k < institutions; ++k) states *= s_size;
        Eigen::VectorXd probs;
        const json& p = need(j, "probs", path);
        if (p.is_string() && p.get<std::string>() == "uniform") {
            probs = Eigen::VectorXd::Constant(static_cast<int>(states), 1.0 / states);
        } else {
            probs = need_vec(j, "probs", path);
        }
        const auto& u = resolve_utility(sc, need_str(j, "utility", path), path + ".utility");
        json outer_spec = j.contains("outer") ? j.at("outer") : json{{"kind", "negation"}};
        const std::string outer_path = path + ".outer";
        return build_spatial_family(s_size, institutions, probs, u, [&](const std::vector<int>&) {
            return parse_outer(outer_spec, FiniteProbSpace(probs), outer_path);
        });
    }
    if (kind == "dynamic") {
        const json& filt = need(j, "filtration", path);
        std::vector<SigmaAlgebra> filtration;
        for (std::size_t k = 0; k < filt.size(); ++k)
            filtration.push_back(resolve_algebra(sc, filt[k].get<std::string>(),
                                                 path + ".filtration[" + std::to_string(k) + "]"));
        const auto& u = resolve_utility(sc, need_str(j, "utility", path), path + ".utility");
        std::vector<OuterMap> outers;
        if (j.contains("outers")) {
            const json& names = j.at("outers");
            if (names.size() != filtration.size()) bad(path + ".outers", "one outer map per level required");
            for (std::size_t k = 0; k < names.size(); ++k)
                outers.push_back(
                    resolve_outer(sc, names[k].get<std::string>(), path + ".outers[" + std::to_string(k) + "]"));
        } else {
            for (std::size_t k = 0; k < filtration.size(); ++k) outers.push_back(OuterMap::negation(sc.space));
        }
        return build_dynamic_family(filtration, u, [&](int level) { return outers[static_cast<std::size_t>(level)]; });
    }
    if (kind == "cce") {
        const json& filt = need(j, "filtration", path);
        std::vector<SigmaAlgebra> filtration;
        for (std::size_t k = 0; k < filt.size(); ++k)
            filtration.push_back(resolve_algebra(sc, filt[k].get<std::string>(),
                                                 path + ".filtration[" + std::to_string(k) + "]"));
        const json& names = need(j, "utilities", path);
        std::vector<Utility> utilities;
        for (std::size_t k = 0; k < names.size(); ++k)
            utilities.push_back(
                resolve_utility(sc, names[k].get<std::string>(), path + ".utilities[" + std::to_string(k) + "]"));
        return build_cce_family(filtration, utilities);
    }
    bad(path + ".kind", "unknown family kind '" + kind + "'");
}

CheckSpec parse_check(const json& j, const Scenario& sc, const std::string& path) {
    CheckSpec spec;
    spec.name = need_str(j, "check", path);
    if (!j.contains("seed")) bad(path + ".seed", "missing field (every randomized check needs a seed)");
    spec.seed = static_cast<std::uint64_t>(j.at("seed").get<long long>());
    if (j.contains("trials")) spec.trials = need_int(j, "trials", path);
    if (j.contains("samples")) spec.samples = need_int(j, "samples", path);
    if (j.contains("tol")) spec.tol = need_num(j, "tol", path);
    if (j.contains("expect")) spec.expect = need_str(j, "expect", path);
    if (spec.expect != "pass" && spec.expect != "fail") bad(path + ".expect", "must be 'pass' or 'fail'");
    if (j.contains("expect_class")) spec.expect_class = need_str(j, "expect_class", path);
    if (j.contains("expect_a")) spec.expect_a = need_num(j, "expect_a", path);

    const bool two_subject = spec.name == "consistency_recursive" || spec.name == "consistency_definitional" ||
                             spec.name == "aggregation_consistency" || spec.name == "independent_constant";
    const bool family_subject = spec.name == "family_consistency" || spec.name == "intercons_link";
    const bool utility_subject = spec.name == "range_lemma";

    spec.subject = need_str(j, "subject", path);
    if (family_subject) {
        if (sc.families.find(spec.subject) == sc.families.end())
            bad(path + ".subject", "unknown family '" + spec.subject + "'");
    } else if (utility_subject) {
        if (sc.utilities.find(spec.subject) == sc.utilities.end())
            bad(path + ".subject", "unknown utility '" + spec.subject + "'");
    } else {
        if (sc.crms.find(spec.subject) == sc.crms.end())
            bad(path + ".subject", "unknown risk measure '" + spec.subject + "'");
    }
    if (two_subject) {
        spec.subject2 = need_str(j, "subject2", path);
        if (sc.crms.find(spec.subject2) == sc.crms.end())
            bad(path + ".subject2", "unknown risk measure '" + spec.subject2 + "'");
    }
    if (utility_subject) {
        spec.fine = need_str(j, "fine", path);
        spec.coarse = need_str(j, "coarse", path);
        resolve_algebra(sc, spec.fine, path + ".fine");
        resolve_algebra(sc, spec.coarse, path + ".coarse");
    }
    if (spec.name == "intercons_link") {
        spec.t1 = need_str(j, "t1", path);
        spec.t2 = need_str(j, "t2", path);
        resolve_algebra(sc, spec.t1, path + ".t1");
        resolve_algebra(sc, spec.t2, path + ".t2");
    }
    if (spec.name == "classify_diagonal" && spec.expect_class.empty())
        bad(path + ".expect_class", "classify_diagonal needs an expected class");
    if (spec.name == "independent_constant" && !sc.product.has_value())
        bad(path + ".subject", "independent_constant needs a product space");
    return spec;
}

const char* known_checks[] = {"strict_antitonicity",    "locality",
                              "cond_law_invariance",    "normalized_on_constants",
                              "inverse_roundtrip",      "consistency_recursive",
                              "consistency_definitional", "risk_antitonicity",
                              "decomposition",          "aggregation_consistency",
                              "independent_constant",   "classify_diagonal",
                              "family_consistency",     "intercons_link",
                              "range_lemma"};

} // namespace

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Scenario parse_scenario_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::ParseError, e.what());
    }
    if (!j.is_object()) fail(ErrorKind::ParseError, "scenario root must be an object");
    if (!j.contains("format_version") || j.at("format_version") != 1)
        fail(ErrorKind::ValidationError, "format_version: must be 1");

    const json& space_spec = need(j, "space", "space");
    std::optional<ProductSpace> product;
    Eigen::VectorXd probs;
    if (space_spec.contains("product")) {
        const json& p = space_spec.at("product");
        product = product_space(FiniteProbSpace(need_vec(p, "probs1", "space.product")),
                                FiniteProbSpace(need_vec(p, "probs2", "space.product")));
        probs = product->space.probs();
    } else if (space_spec.contains("uniform")) {
        const int n = need_int(space_spec, "uniform", "space");
        probs = Eigen::VectorXd::Constant(n, 1.0 / n);
    } else {
        probs = need_vec(space_spec, "probs", "space");
    }

    Scenario sc{.digest = "", .space = FiniteProbSpace(probs), .product = std::move(product), .algebras = {},
                .utilities = {}, .outer_maps = {}, .crms = {}, .families = {}, .checks = {}};
    {
        std::ostringstream hex;
        hex << "fnv1a:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(j.dump());
        sc.digest = hex.str();
    }

    if (j.contains("algebras"))
        for (const auto& [name, spec] : j.at("algebras").items())
            sc.algebras.emplace(name, parse_algebra(spec, sc, "algebras." + name));
    if (j.contains("utilities"))
        for (const auto& [name, spec] : j.at("utilities").items())
            sc.utilities.emplace(name, parse_utility(spec, "utilities." + name));
    if (j.contains("outer_maps"))
        for (const auto& [name, spec] : j.at("outer_maps").items())
            sc.outer_maps.emplace(name, parse_outer(spec, sc.space, "outer_maps." + name));
    if (j.contains("crms"))
        for (const auto& [name, spec] : j.at("crms").items())
            sc.crms.emplace(name, parse_crm(spec, sc, "crms." + name));
    if (j.contains("families"))
        for (const auto& [name, spec] : j.at("families").items())
            sc.families.emplace(name, parse_family(spec, sc, "families." + name));

    if (j.contains("checks")) {
        const json& checks = j.at("checks");
        if (!checks.is_array()) fail(ErrorKind::ValidationError, "checks: expected an array");
        for (std::size_t k = 0; k < checks.size(); ++k) {
            const std::string path = "checks[" + std::to_string(k) + "]";
            const CheckSpec spec = parse_check(checks[k], sc, path);
            bool known = false;
            for (const char* name : known_checks) known = known || spec.name == name;
            if (!known) bad(path + ".check", "unknown check '" + spec.name + "'");
            sc.checks.push_back(spec);
        }
    }
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open scenario file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario_text(buffer.str());
}

namespace {

CheckReport run_normalized_on_constants(const Crm& rho, const CheckSpec& spec) {
    CheckReport report;
    report.check_name = "normalized_on_constants";
    const Crm bar = normalize(rho);
    const Crm bar2 = normalize(bar);
    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
        const RandomVariable alpha = random_measurable_variable(rng, rho.target());
        const double diag_residual = (f_rho(bar, alpha).values() + alpha.values()).cwiseAbs().maxCoeff();
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());
        const double idem_residual = (eval(bar2, x).values() - eval(bar, x).values()).cwiseAbs().maxCoeff();
        const double residual = std::max(diag_residual, idem_residual);
        report.note_residual(residual);
        report.record(residual <= spec.tol, trial, {{"alpha", to_json(alpha)}, {"X", to_json(x)}},
                      {{"diagonal_residual", diag_residual}, {"idempotence_residual", idem_residual}},
                      {{"max_residual", spec.tol}});
    }
    return report;
}

CheckReport run_inverse_roundtrip(const Crm& rho, const CheckSpec& spec) {
    CheckReport report;
    report.check_name = "inverse_roundtrip";
    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
        bool ok = true;
        nlohmann::json observed;
        const RandomVariable alpha = random_measurable_variable(rng, rho.target());
        const RandomVector x = random_measurable_vector(rng, rho.domain(), rho.dim());
        try {
            const RandomVariable back = f_rho_inverse(rho, f_rho(rho, alpha));
            const double left = (back.values() - alpha.values()).cwiseAbs().maxCoeff();
            const RandomVariable beta = f_rho(rho, alpha);
            const double right = (f_rho(rho, f_rho_inverse(rho, beta)).values() - beta.values()).cwiseAbs().maxCoeff();
            // every attained risk level is a diagonal risk level
            const RandomVariable cash = f_rho_inverse(rho, eval(rho, x));
            const double image = (f_rho(rho, cash).values() - eval(rho, x).values()).cwiseAbs().maxCoeff();
            const double residual = std::max({left, right, image});
            report.note_residual(residual);
            ok = residual <= spec.tol;
            observed = {{"roundtrip_residual", left}, {"forward_residual", right}, {"image_residual", image}};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::OutOfRange) throw;
            ok = false;
            observed = {{"error", e.what()}};
        }
        report.record(ok, trial, {{"alpha", to_json(alpha)}, {"X", to_json(x)}}, observed,
                      {{"max_residual", spec.tol}});
    }
    return report;
}

CheckReport run_decomposition(const Crm& rho, const CheckSpec& spec) {
    const Decomposition dec = extract_decomposition(rho, 40, derive_seed(spec.seed, 0xDECu));
    CheckReport report = verify_decomposition(rho, dec, spec.trials, spec.seed, spec.tol);
    report.check_name = "decomposition";
    if (dec.warning()) {
        report.failures.push_back({-1, {{"warning", "risk_antitonicity"}},
                                   {{"detail", "extraction flagged a risk-antitonicity violation"}},
                                   {{"risk_antitone", true}}});
    }
    return report;
}

CheckReport run_independent_constant(const Scenario& sc, const Crm& rho, const Crm& rho_h, const CheckSpec& spec) {
    CheckReport report;
    report.check_name = "independent_constant";
    const ProductSpace& prod = *sc.product;
    for (int trial = 0; trial < spec.trials; ++trial) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(trial)));
        const RandomVector x2 = random_vector(rng, prod.marginal2, rho.dim());
        const RandomVector x = prod.lift_factor2(x2);
        CheckReport single = check_lemma_independent_constant(rho, rho_h, x, spec.tol);
        report.trials += 1;
        report.note_residual(single.max_residual);
        if (single.passed()) {
            report.passes += 1;
        } else {
            CheckFailure f = single.failures.front();
            f.trial = trial;
            report.failures.push_back(std::move(f));
        }
    }
    return report;
}

CheckReport run_classify(const Crm& rho, const CheckSpec& spec) {
    CheckReport report;
    report.check_name = "classify_diagonal";
    std::vector<double> grid;
    for (int k = 0; k < 41; ++k) grid.push_back(-5.0 + 0.25 * k);
    report.trials = 1;
    try {
        const Classification c = classify_diagonal(rho, grid, spec.tol);
        const bool ok = spec.expect_class == to_string(c.kind);
        nlohmann::json observed = {{"class", to_string(c.kind)},
                                   {"a", c.a},
                                   {"b", c.b},
                                   {"beta", c.beta},
                                   {"linear_residual", c.linear_residual},
                                   {"entropic_residual", c.entropic_residual},
                                   {"cash_additive", c.cash_additive},
                                   {"convex", c.convex}};
        report.note_residual(std::min(c.linear_residual, c.entropic_residual));
        if (ok)
            report.passes = 1;
        else
            report.failures.push_back({0, {{"grid", {grid.front(), grid.back()}}}, observed,
                                       {{"class", spec.expect_class}}});
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotNormalized) throw;
        if (spec.expect_class == "NotNormalized")
            report.passes = 1;
        else
            report.failures.push_back({0, {}, {{"error", e.what()}}, {{"class", spec.expect_class}}});
    }
    return report;
}

CheckReport run_intercons(const Scenario& sc, const CrmFamily& fam, const CheckSpec& spec) {
    CheckReport report;
    report.check_name = "intercons_link";
    const SigmaAlgebra& t1 = sc.algebras.at(spec.t1);
    const SigmaAlgebra& t2 = sc.algebras.at(spec.t2);
    report.trials = 1;
    try {
        const AffineLink link = fit_intercons_link(fam, t1, t2, spec.samples, spec.seed, spec.tol);
        bool ok = true;
        if (spec.expect_a.has_value() && std::abs(link.a - *spec.expect_a) > 1e-6) ok = false;
        nlohmann::json bs = nlohmann::json::array();
        for (const auto& [alg, b] : link.b) bs.push_back(to_json(b));
        report.note_residual(link.residual);
        if (ok)
            report.passes = 1;
        else
            report.failures.push_back(
                {0, {}, {{"a", link.a}, {"b", bs}, {"residual", link.residual}}, {{"a", spec.expect_a.value()}}});
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonAffineRelation && e.kind() != ErrorKind::DegenerateFit) throw;
        report.failures.push_back({0, {}, {{"error", e.what()}}, {{"affine_link", true}}});
    }
    return report;
}

} // namespace

bool Report::all_matched() const {
    for (const auto& o : outcomes)
        if (!o.matched) return false;
    return true;
}

Report run(const Scenario& scenario) {
    Report report;
    report.scenario_digest = scenario.digest;
    for (const auto& spec : scenario.checks) {
        const auto start = std::chrono::steady_clock::now();
        CheckReport result;
        if (spec.name == "strict_antitonicity") {
            result = check_strict_antitonicity(scenario.crms.at(spec.subject), spec.trials, spec.seed);
        } else if (spec.name == "locality") {
            result = check_locality(scenario.crms.at(spec.subject), spec.trials, spec.seed);
        } else if (spec.name == "cond_law_invariance") {
            result = check_cond_law_invariance(scenario.crms.at(spec.subject), spec.trials, spec.seed);
        } else if (spec.name == "normalized_on_constants") {
            result = run_normalized_on_constants(scenario.crms.at(spec.subject), spec);
        } else if (spec.name == "inverse_roundtrip") {
            result = run_inverse_roundtrip(scenario.crms.at(spec.subject), spec);
        } else if (spec.name == "consistency_recursive") {
            result = check_consistency_recursive(scenario.crms.at(spec.subject), scenario.crms.at(spec.subject2),
                                                 spec.trials, spec.seed, spec.tol);
        } else if (spec.name == "consistency_definitional") {
            result = check_consistency_definitional(scenario.crms.at(spec.subject), scenario.crms.at(spec.subject2),
                                                    spec.trials, spec.seed, spec.tol);
        } else if (spec.name == "risk_antitonicity") {
            result = check_risk_antitonicity(scenario.crms.at(spec.subject), spec.trials, spec.seed);
        } else if (spec.name == "decomposition") {
            result = run_decomposition(scenario.crms.at(spec.subject), spec);
        } else if (spec.name == "aggregation_consistency") {
            const Decomposition dec_g = extract_decomposition(scenario.crms.at(spec.subject), 40,
                                                              derive_seed(spec.seed, 0xA1u));
            const Decomposition dec_f = extract_decomposition(scenario.crms.at(spec.subject2), 40,
                                                              derive_seed(spec.seed, 0xA2u));
            result = check_aggregation_consistency(dec_g, dec_f, spec.trials, spec.seed, spec.tol);
        } else if (spec.name == "independent_constant") {
            result = run_independent_constant(scenario, scenario.crms.at(spec.subject),
                                              scenario.crms.at(spec.subject2), spec);
        } else if (spec.name == "classify_diagonal") {
            result = run_classify(scenario.crms.at(spec.subject), spec);
        } else if (spec.name == "family_consistency") {
            result = check_family_consistency(scenario.families.at(spec.subject), spec.trials, spec.seed, spec.tol);
        } else if (spec.name == "intercons_link") {
            result = run_intercons(scenario, scenario.families.at(spec.subject), spec);
        } else if (spec.name == "range_lemma") {
            result = check_range_lemma(scenario.utilities.at(spec.subject), scenario.algebras.at(spec.fine),
                                       scenario.algebras.at(spec.coarse), spec.trials, spec.seed);
        } else {
            fail(ErrorKind::ValidationError, "unknown check '" + spec.name + "'");
        }
        const auto stop = std::chrono::steady_clock::now();

        CheckOutcome outcome;
        outcome.spec = spec;
        outcome.report = std::move(result);
        const bool passed = outcome.report.passed();
        outcome.matched = (spec.expect == "pass") ? passed : !passed;
        outcome.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        report.outcomes.push_back(std::move(outcome));
    }
    return report;
}

nlohmann::json Report::to_json(bool include_timing) const {
    nlohmann::json checks = nlohmann::json::array();
    long unmatched = 0, failures_total = 0;
    for (const auto& o : outcomes) {
        nlohmann::json entry = o.report.to_json();
        entry["subject"] = o.spec.subject;
        if (!o.spec.subject2.empty()) entry["subject2"] = o.spec.subject2;
        entry["seed"] = o.spec.seed;
        entry["tol"] = o.spec.tol;
        entry["expect"] = o.spec.expect;
        entry["outcome"] = o.report.passed() ? "pass" : "fail";
        entry["matched"] = o.matched;
        if (include_timing) entry["wall_ms"] = o.wall_ms;
        checks.push_back(std::move(entry));
        if (!o.matched) ++unmatched;
        failures_total += static_cast<long>(o.report.failures.size());
    }
    return {{"format_version", 1},
            {"scenario_digest", scenario_digest},
            {"checks", checks},
            {"summary",
             {{"checks", outcomes.size()},
              {"matched", outcomes.size() - static_cast<std::size_t>(unmatched)},
              {"unmatched", unmatched},
              {"failures_total", failures_total}}}};
}

std::string Report::to_text() const {
    std::ostringstream out;
    out << "scenario " << scenario_digest << "\n";
    for (const auto& o : outcomes) {
        const bool passed = o.report.passed();
        std::string token;
        if (passed)
            token = "PASS";
        else if (o.spec.expect == "fail")
            token = "EXPECTED-FAIL";
        else
            token = "FAIL";
        out << std::left << std::setw(14) << token << std::setw(26) << o.report.check_name << " subject="
            << o.spec.subject;
        if (!o.spec.subject2.empty()) out << "," << o.spec.subject2;
        out << " trials=" << o.report.trials << " passes=" << o.report.passes << " skipped=" << o.report.skipped
            << " max_residual=" << std::scientific << std::setprecision(3) << o.report.max_residual
            << std::defaultfloat;
        if (!o.matched) out << "  [UNEXPECTED]";
        out << "\n";
    }
    long unmatched = 0;
    for (const auto& o : outcomes)
        if (!o.matched) ++unmatched;
    out << "checks=" << outcomes.size() << " unmatched=" << unmatched << "\n";
    return out.str();
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "name,subject,trials,passes,failures,max_residual\n";
    for (const auto& o : outcomes) {
        std::string subject = o.spec.subject;
        if (!o.spec.subject2.empty()) subject += "+" + o.spec.subject2;
        out << o.report.check_name << "," << subject << "," << o.report.trials << "," << o.report.passes << ","
            << o.report.failures.size() << "," << std::scientific << std::setprecision(9) << o.report.max_residual
            << std::defaultfloat << "\n";
    }
    return out.str();
}

std::string demo_scenario(const std::string& kind) {
    if (kind == "spatial") {
        return R"({
  "format_version": 1,
  "space": {"uniform": 8},
  "algebras": {
    "triv": "trivial",
    "full": "discrete",
    "inst0": {"blocks": [[0,1,2,3],[4,5,6,7]]}
  },
  "utilities": {
    "mean3": {"kind": "linear_weighted", "a": 1.0, "b": 0.0, "weights": [0.5, 0.3, 0.2]}
  },
  "outer_maps": {"neg": {"kind": "negation"}},
  "crms": {
    "rho_inst0": {"kind": "cert_equiv", "utility": "mean3", "outer": "neg", "domain": "full", "target": "inst0"}
  },
  "families": {
    "grid": {"kind": "spatial", "s_size": 2, "institutions": 3, "probs": "uniform", "utility": "mean3"}
  },
  "checks": [
    {"check": "family_consistency", "subject": "grid", "trials": 40, "seed": 2101, "tol": 1e-8},
    {"check": "strict_antitonicity", "subject": "rho_inst0", "trials": 100, "seed": 2102},
    {"check": "locality", "subject": "rho_inst0", "trials": 100, "seed": 2103},
    {"check": "cond_law_invariance", "subject": "rho_inst0", "trials": 100, "seed": 2104},
    {"check": "decomposition", "subject": "rho_inst0", "trials": 60, "seed": 2105, "tol": 1e-8}
  ]
})";
    }
    if (kind == "dynamic") {
        return R"({
  "format_version": 1,
  "space": {"uniform": 4},
  "algebras": {
    "triv": "trivial",
    "mid": {"blocks": [[0,1],[2,3]]},
    "full": "discrete"
  },
  "utilities": {
    "exp1": {"kind": "exponential_weighted", "a": 1.0, "b": 0.0, "beta": 1.0, "weights": [0.5, 0.5]},
    "exp2": {"kind": "exponential_weighted", "a": 1.0, "b": 0.0, "beta": 2.0, "weights": [0.5, 0.5]}
  },
  "outer_maps": {
    "neg": {"kind": "negation"},
    "aff": {"kind": "affine_neg", "scale": 2.0, "offset": 1.0}
  },
  "crms": {
    "rho_triv": {"kind": "cert_equiv", "utility": "exp1", "outer": "neg", "domain": "full", "target": "triv"},
    "rho_mid": {"kind": "cert_equiv", "utility": "exp1", "outer": "aff", "domain": "full", "target": "mid"},
    "rho_mid_fast": {"kind": "cert_equiv", "utility": "exp2", "outer": "neg", "domain": "full", "target": "mid"},
    "skewed": {"kind": "state_weighted", "domain": "full", "dim": 2, "weights": [0, 1, 2, 3]}
  },
  "families": {
    "clock": {"kind": "dynamic", "filtration": ["triv", "mid", "full"], "utility": "exp1",
              "outers": ["neg", "aff", "neg"]}
  },
  "checks": [
    {"check": "consistency_recursive", "subject": "rho_triv", "subject2": "rho_mid",
     "trials": 100, "seed": 2201, "tol": 1e-8},
    {"check": "consistency_definitional", "subject": "rho_triv", "subject2": "rho_mid",
     "trials": 100, "seed": 2202, "tol": 1e-8},
    {"check": "consistency_recursive", "subject": "rho_triv", "subject2": "rho_mid_fast",
     "trials": 100, "seed": 2203, "tol": 1e-8, "expect": "fail"},
    {"check": "normalized_on_constants", "subject": "rho_mid", "trials": 100, "seed": 2204, "tol": 1e-8},
    {"check": "inverse_roundtrip", "subject": "rho_mid", "trials": 100, "seed": 2205, "tol": 1e-8},
    {"check": "risk_antitonicity", "subject": "rho_mid", "trials": 100, "seed": 2206},
    {"check": "cond_law_invariance", "subject": "skewed", "trials": 100, "seed": 2207, "expect": "fail"},
    {"check": "classify_diagonal", "subject": "rho_triv", "seed": 2208, "tol": 1e-6, "expect_class": "Entropic"},
    {"check": "family_consistency", "subject": "clock", "trials": 50, "seed": 2209, "tol": 1e-8}
  ]
})";
    }
    if (kind == "cce") {
        return R"({
  "format_version": 1,
  "space": {"uniform": 4},
  "algebras": {
    "triv": "trivial",
    "mid": {"blocks": [[0,1],[2,3]]},
    "full": "discrete"
  },
  "utilities": {
    "u_now": {"kind": "exponential_weighted", "a": 1.0, "b": 1.0, "beta": 1.0, "weights": [0.5, 0.5]},
    "u_mid": {"kind": "exponential_weighted", "a": 2.0, "b": 0.5, "beta": 1.0, "weights": [0.5, 0.5]},
    "u_end": {"kind": "exponential_weighted", "a": 0.5, "b": 0.0, "beta": 1.0, "weights": [0.5, 0.5]},
    "v_slow": {"kind": "exponential_weighted", "a": 1.0, "b": 0.0, "beta": 1.0, "weights": [0.5, 0.5]},
    "v_fast": {"kind": "exponential_weighted", "a": 1.0, "b": 0.0, "beta": 2.0, "weights": [0.5, 0.5]}
  },
  "families": {
    "ladder": {"kind": "cce", "filtration": ["triv", "mid", "full"],
               "utilities": ["u_now", "u_mid", "u_end"]},
    "clash": {"kind": "cce", "filtration": ["triv", "mid", "full"],
              "utilities": ["v_slow", "v_slow", "v_fast"]}
  },
  "checks": [
    {"check": "family_consistency", "subject": "ladder", "trials": 40, "seed": 2301, "tol": 1e-8},
    {"check": "intercons_link", "subject": "ladder", "t1": "full", "t2": "mid",
     "samples": 24, "seed": 2302, "tol": 1e-6, "expect_a": 4.0},
    {"check": "family_consistency", "subject": "clash", "trials": 40, "seed": 2303, "tol": 1e-8,
     "expect": "fail"},
    {"check": "intercons_link", "subject": "clash", "t1": "full", "t2": "mid",
     "samples": 24, "seed": 2304, "tol": 1e-6, "expect": "fail"},
    {"check": "range_lemma", "subject": "u_end", "fine": "mid", "coarse": "triv",
     "trials": 60, "seed": 2305}
  ]
})";
    }
    fail(ErrorKind::ValidationError, "unknown demo kind '" + kind + "' (expected spatial, dynamic or cce)");
}

void emit(const Report& report, ReportFormat format, const std::string& path) {
    std::string payload;
    switch (format) {
        case ReportFormat::Json: payload = report.to_json().dump(2) + "\n"; break;
        case ReportFormat::Text: payload = report.to_text(); break;
        case ReportFormat::Csv: payload = report.to_csv(); break;
    }
    if (path.empty()) {
        std::fputs(payload.c_str(), stdout);
        return;
    }
    std::ofstream out(path);
    if (!out) fail(ErrorKind::IoError, "cannot open report file '" + path + "'");
    out << payload;
    if (!out) fail(ErrorKind::IoError, "cannot write report file '" + path + "'");
}

} // namespace mcrm
