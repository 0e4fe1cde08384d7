// collision-lab: waiting times for r-fold collisions and repetitions over a
// preimage-size configuration. Subcommands: dist, expect, bounds, limits,
// simulate, measures, verify. Exit codes: 0 success, 2 invalid request,
// 3 numeric/resource failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "collision_lab/collision_lab.hpp"
#include "json.hpp"

namespace cl = collision_lab;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- formatting

std::string fmt15(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

/// Doubles are rounded to 15 significant digits before serialization so CSV
/// and JSON renderings agree.
double round15(double v) { return std::stod(fmt15(v)); }

json prob_json(const cl::prob_value& p) {
    json j;
    j["value"] = round15(p.value);
    if (p.exact) j["rational"] = cl::rat_to_string(p.rational);
    return j;
}

json rat_json(const cl::Rat& q) {
    json j;
    j["rational"] = cl::rat_to_string(q);
    j["value"] = round15(cl::to_double(q));
    return j;
}

// ------------------------------------------------------------- input parsing

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

long parse_long(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw cl::invalid_query_error("cannot parse integer '" + s + "' for " + what);
    }
}

/// Scalar float options accept a decimal comma and normalize it to a point.
double parse_double(std::string s, const std::string& what) {
    for (char& c : s)
        if (c == ',') c = '.';
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw cl::invalid_query_error("cannot parse number '" + s + "' for " + what);
    }
}

// ------------------------------------------------------- configuration input

struct config_source {
    std::string sizes_csv;
    long classical = -1;
    std::string file;
    long multinomial_n = -1;
    std::string multinomial_p;
};

struct parsed_source {
    std::optional<cl::configuration> config;
    std::optional<cl::multinomial_model> model;
    json echo; ///< how the configuration was specified, for the report
};

parsed_source load_source(const config_source& src) {
    int given = 0;
    given += !src.sizes_csv.empty();
    given += src.classical >= 0;
    given += !src.file.empty();
    given += src.multinomial_n >= 0 || !src.multinomial_p.empty();
    if (given != 1)
        throw cl::invalid_query_error(
            "exactly one configuration source is required: --sizes, --classical, "
            "--config-file, or --multinomial-n with --multinomial-p");

    parsed_source out;
    if (!src.sizes_csv.empty()) {
        std::vector<long> sizes;
        for (const std::string& tok : split(src.sizes_csv, ','))
            sizes.push_back(parse_long(tok, "--sizes"));
        out.config = cl::configuration(sizes);
        out.echo["sizes"] = sizes;
        return out;
    }
    if (src.classical >= 0) {
        out.config = cl::configuration::classical(src.classical);
        out.echo["classical"] = src.classical;
        return out;
    }
    if (!src.file.empty()) {
        std::ifstream in(src.file);
        if (!in) throw cl::invalid_query_error("cannot open config file: " + src.file);
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw cl::invalid_query_error("config file is not valid JSON: " +
                                          std::string(e.what()));
        }
        if (doc.contains("sizes")) {
            std::vector<long> sizes;
            for (const auto& v : doc["sizes"]) {
                if (!v.is_number_integer())
                    throw cl::invalid_query_error("config file: sizes must be integers");
                sizes.push_back(v.get<long>());
            }
            out.config = cl::configuration(sizes);
            out.echo["sizes"] = sizes;
        } else if (doc.contains("classical")) {
            if (!doc["classical"].is_number_integer())
                throw cl::invalid_query_error("config file: classical must be an integer");
            out.config = cl::configuration::classical(doc["classical"].get<long>());
            out.echo["classical"] = doc["classical"].get<long>();
        } else if (doc.contains("multinomial")) {
            const auto& mn = doc["multinomial"];
            if (!mn.contains("n") || !mn.contains("p"))
                throw cl::invalid_query_error("config file: multinomial needs n and p");
            std::vector<cl::Rat> probs;
            std::vector<std::string> echo_p;
            for (const auto& v : mn["p"]) {
                if (!v.is_string())
                    throw cl::invalid_query_error(
                        "config file: multinomial p entries must be rational strings like \"1/2\"");
                probs.push_back(cl::rat_from_string(v.get<std::string>()));
                echo_p.push_back(v.get<std::string>());
            }
            out.model = cl::multinomial_model(mn["n"].get<long>(), probs);
            out.echo["multinomial"] = {{"n", mn["n"].get<long>()}, {"p", echo_p}};
        } else {
            throw cl::invalid_query_error(
                "config file must contain one of: sizes, classical, multinomial");
        }
        return out;
    }
    if (src.multinomial_n < 0 || src.multinomial_p.empty())
        throw cl::invalid_query_error(
            "--multinomial-n and --multinomial-p must be given together");
    std::vector<cl::Rat> probs;
    std::vector<std::string> echo_p;
    for (const std::string& tok : split(src.multinomial_p, ',')) {
        probs.push_back(cl::rat_from_string(tok));
        echo_p.push_back(tok);
    }
    out.model = cl::multinomial_model(src.multinomial_n, probs);
    out.echo["multinomial"] = {{"n", src.multinomial_n}, {"p", echo_p}};
    return out;
}

// --------------------------------------------------------------- the request

struct request {
    std::string command;
    config_source source;
    int r = 2;
    std::string mode = "K1";
    long k_max = -1;
    std::string method = "auto"; // expect: auto|exact|quadrature|series
    long terms = 0;
    double tol = 1e-12;
    long trials = 10000;
    std::uint64_t seed = 0;
    bool two_stage = false;
    std::string kind; // limits: evaluate this limit law
    std::string t_max = "3";
    long t_steps = 0;
    long cells_k = -1, cells_j = -1;
    std::string battery = "small";
    std::string format; // csv|json; default depends on command
    std::string out_path;
    std::vector<std::string> argv_echo;
};

json request_json(const request& rq, const json& source_echo) {
    json j;
    j["argv"] = rq.argv_echo;
    j["command"] = rq.command;
    j["configuration"] = source_echo;
    return j;
}

void emit(const request& rq, const std::string& text) {
    if (rq.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(rq.out_path);
    if (!out) throw cl::invalid_query_error("cannot open output file: " + rq.out_path);
    out << text;
}

std::string wrap_report(const request& rq, const json& source_echo, json result) {
    json doc;
    doc["request"] = request_json(rq, source_echo);
    doc["version"] = cl::version;
    doc["seed"] = rq.seed;
    doc["result"] = std::move(result);
    return doc.dump(2) + "\n";
}

// ------------------------------------------------------------------ commands

int cmd_dist(const request& rq) {
    const parsed_source src = load_source(rq.source);
    if (rq.k_max < 0) throw cl::invalid_query_error("dist: --k-max is required");
    if (rq.k_max > 5000000)
        throw cl::resource_error("dist: refusing to build a table with more than 5e6 rows");
    const cl::process_mode mode = cl::mode_from_string(rq.mode);

    std::vector<cl::prob_value> entries;
    if (src.model) {
        if (mode != cl::process_mode::K1)
            throw cl::invalid_query_error(
                "dist: a multinomial source supports only mode K1 (without replacement)");
        for (long k = 0; k <= rq.k_max; ++k)
            entries.push_back(cl::survival_K1_multinomial(*src.model, rq.r, k));
    } else {
        const cl::survival_table table =
            cl::build_survival_table(*src.config, rq.r, mode, rq.k_max);
        entries = table.entries;
    }

    if (rq.format == "csv") {
        std::ostringstream os;
        os << "k,survival,survival_float\n";
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const cl::prob_value& p = entries[k];
            os << k << ',' << (p.exact ? cl::rat_to_string(p.rational) : fmt15(p.value)) << ','
               << fmt15(p.value) << '\n';
        }
        emit(rq, os.str());
    } else {
        json result;
        result["mode"] = rq.mode;
        result["r"] = rq.r;
        json rows = json::array();
        for (std::size_t k = 0; k < entries.size(); ++k) {
            json row = prob_json(entries[k]);
            row["k"] = k;
            rows.push_back(std::move(row));
        }
        result["survival"] = std::move(rows);
        emit(rq, wrap_report(rq, src.echo, std::move(result)));
    }
    return 0;
}

int cmd_expect(const request& rq) {
    const parsed_source src = load_source(rq.source);
    if (!src.config)
        throw cl::invalid_query_error("expect: needs a configuration source, not multinomial");
    const cl::configuration& cfg = *src.config;
    const cl::process_mode mode = cl::mode_from_string(rq.mode);

    json result;
    result["mode"] = rq.mode;
    result["r"] = rq.r;
    if (rq.method == "auto" || rq.method == "exact") {
        const cl::expectation_result e = cl::expectation_exact(cfg, rq.r, mode, rq.tol);
        result["method"] = e.exact ? "exact" : "quadrature";
        result["exact"] = e.exact;
        result["value"] = round15(e.value);
        if (e.exact) result["rational"] = cl::rat_to_string(e.exact_value);
    } else if (rq.method == "quadrature") {
        const cl::expectation_result e = cl::expectation_quadrature(cfg, rq.r, mode, rq.tol);
        result["method"] = "quadrature";
        result["exact"] = false;
        result["value"] = round15(e.value);
    } else if (rq.method == "series") {
        if (mode != cl::process_mode::R)
            throw cl::invalid_query_error("expect: the asymptotic series applies to mode R");
        for (long x : cfg.sizes)
            if (x != 1)
                throw cl::invalid_query_error(
                    "expect: the asymptotic series applies to the classical configuration "
                    "(all cells of size 1)");
        const auto sr = cl::classical_ER_series(
            cfg.n, rq.r, rq.terms > 0 ? static_cast<std::size_t>(rq.terms) : 0);
        result["method"] = "series";
        result["exact"] = false;
        result["value"] = round15(sr.value);
        json contribs = json::array();
        for (std::size_t i = 0; i < sr.contributions.size(); ++i) {
            contribs.push_back({{"i", i},
                                {"coefficient", cl::rat_to_string(sr.coefficients[i])},
                                {"contribution", round15(sr.contributions[i])}});
        }
        result["terms"] = std::move(contribs);
    } else {
        throw cl::invalid_query_error("expect: unknown --method '" + rq.method +
                                      "' (auto|exact|quadrature|series)");
    }
    if (const auto cf = cl::closed_forms(cfg, rq.r)) {
        result["closed_form"] = {{"shape", cf->shape},
                                 {"K1", rat_json(cf->K1)},
                                 {"K2", rat_json(cf->K2)}};
    }
    emit(rq, wrap_report(rq, src.echo, std::move(result)));
    return 0;
}

int cmd_bounds(const request& rq) {
    const parsed_source src = load_source(rq.source);
    if (!src.config)
        throw cl::invalid_query_error("bounds: needs a configuration source, not multinomial");
    const cl::configuration& cfg = *src.config;
    const cl::config_statistics st = cl::config_statistics_of(cfg, rq.r);

    json result;
    result["r"] = rq.r;
    result["statistics"] = {{"n", st.n},
                            {"m", st.m},
                            {"nonempty_cells", st.b},
                            {"x_max", st.x_max},
                            {"s_r", rat_json(st.s_r)},
                            {"s_tilde_r", rat_json(st.s_tilde_r)},
                            {"m_r", rat_json(st.m_r)},
                            {"m_tilde_r", rat_json(st.m_tilde_r)}};
    if (st.s_r >= 1) {
        const cl::lower_bounds lb = cl::bounds_lower(st);
        json lower = {{"K1_beta", round15(lb.K1)},
                      {"K1_gamma", round15(lb.K1_gamma)},
                      {"K2", round15(lb.K2)},
                      {"R", round15(lb.R)}};
        if (lb.K1_exact_valid) lower["K1_beta_rational"] = cl::rat_to_string(lb.K1_exact);
        result["lower"] = std::move(lower);
        const cl::upper_bounds_majorization um = cl::bounds_upper_majorization(st, rq.tol);
        result["upper_majorization"] = {
            {"K1", round15(um.K1)}, {"K2", round15(um.K2)}, {"R", round15(um.R)}};
        const cl::upper_bounds_matched umt = cl::bounds_upper_matched(st, st.x_max);
        result["upper_matched"] = {{"K12_common", round15(umt.K12_common)},
                                   {"R", round15(umt.R)}};
        const cl::gap_bound_result gb = cl::gap_bound(st, rq.tol);
        result["replacement_gap"] = {{"C_r", round15(gb.C_r)}, {"bound", round15(gb.bound)}};
        const cl::split_bounds sw = cl::true_collision_sandwich(cfg, rq.r);
        result["true_collision_sandwich"] = {{"lower", rat_json(sw.lower)},
                                             {"upper", rat_json(sw.upper)}};
        const cl::true_collision_probability tc =
            cl::prob_true_collision_first(cfg, rq.r, std::max(rq.tol, 1e-10));
        json tcj;
        tcj["p_overall"] = round15(tc.p_overall);
        if (cfg.sizes.size() <= 1000) {
            json conds = json::array();
            for (const cl::Rat& c : tc.conditional) conds.push_back(cl::rat_to_string(c));
            tcj["conditional_by_cell"] = std::move(conds);
        }
        result["true_collision"] = std::move(tcj);
    } else {
        result["lower"] = nullptr;
        result["note"] = "no cell reaches size r: collision bounds are void, "
                         "repetition bounds below";
        const double g = std::tgamma(1.0 + 1.0 / rq.r);
        result["lower_R_only"] =
            round15(g * static_cast<double>(st.n) /
                    std::pow(cl::to_double(st.s_tilde_r), 1.0 / rq.r));
    }
    if (rq.r == 2) {
        const cl::split_bounds sb = cl::true_collision_split_bounds(cfg);
        result["repeat_before_collision_bounds"] = {{"lower", rat_json(sb.lower)},
                                                    {"upper", rat_json(sb.upper)}};
    }
    emit(rq, wrap_report(rq, src.echo, std::move(result)));
    return 0;
}

int cmd_limits(const request& rq) {
    const parsed_source src = load_source(rq.source);

    if (!rq.kind.empty()) {
        const cl::limit_kind kind = cl::limit_kind_from_string(rq.kind);
        std::ostringstream os;
        if (kind == cl::limit_kind::type3_discrete) {
            if (!src.model)
                throw cl::invalid_query_error(
                    "limits: type3_discrete needs a multinomial source");
            if (rq.k_max < 0)
                throw cl::invalid_query_error("limits: type3_discrete needs --k-max");
            os << "k,survival\n";
            for (long k = 0; k <= rq.k_max; ++k)
                os << k << ',' << fmt15(cl::limit_type3_survival(*src.model, rq.r, k)) << '\n';
            emit(rq, os.str());
            return 0;
        }
        if (!src.config)
            throw cl::invalid_query_error("limits: this limit kind needs a configuration");
        const long steps = rq.t_steps > 0 ? rq.t_steps : 60;
        const double tmax = parse_double(rq.t_max, "--t-max");
        os << "t,survival\n";
        for (long i = 0; i <= steps; ++i) {
            const double t = tmax * static_cast<double>(i) / static_cast<double>(steps);
            double v = 0;
            switch (kind) {
                case cl::limit_kind::type1_K1: v = cl::limit_type1_K1(*src.config, rq.r, t); break;
                case cl::limit_kind::type1_K2: v = cl::limit_type1_K2(*src.config, rq.r, t); break;
                case cl::limit_kind::type2_collision: {
                    const auto st = cl::config_statistics_of(*src.config, rq.r);
                    v = cl::limit_type2_survival(st.rho, rq.r, t);
                    break;
                }
                case cl::limit_kind::type2_repetition: {
                    const auto st = cl::config_statistics_of(*src.config, rq.r);
                    v = cl::limit_type2_survival(st.theta, rq.r, t);
                    break;
                }
                case cl::limit_kind::type3_discrete: break; // handled above
            }
            os << fmt15(t) << ',' << fmt15(v) << '\n';
        }
        emit(rq, os.str());
        return 0;
    }

    if (!src.config)
        throw cl::invalid_query_error("limits: needs a configuration source (or --kind "
                                      "type3_discrete with a multinomial source)");
    const cl::config_statistics st = cl::config_statistics_of(*src.config, rq.r);
    const cl::regime_result regime = cl::classify_regime(st);
    const cl::time_scales_result scales = cl::time_scales(st);

    json result;
    result["r"] = rq.r;
    result["regime"] = regime.regime;
    result["reason"] = regime.reason;
    // Both renderings of the collision scale: the corrected exponent 1/r and
    // the literal (r-1)/r one, labeled so the discrepancy stays auditable.
    const double mr = cl::to_double(st.m_r);
    json sc;
    sc["collision_scale_corrected_mr_pow_1_over_r"] = round15(scales.collision);
    sc["collision_scale_as_printed_mr_pow_rm1_over_r"] =
        mr > 0 ? round15(std::pow(mr, (rq.r - 1.0) / rq.r)) : 0.0;
    sc["repetition_scale_mtilde_pow_1_over_r"] = round15(scales.repetition);
    result["time_scales"] = std::move(sc);
    json atoms;
    const std::size_t atom_cap = 64;
    json rho = json::array(), theta = json::array();
    for (std::size_t i = 0; i < st.rho.size() && i < atom_cap; ++i)
        rho.push_back(round15(st.rho[i]));
    for (std::size_t i = 0; i < st.theta.size() && i < atom_cap; ++i)
        theta.push_back(round15(st.theta[i]));
    atoms["rho"] = std::move(rho);
    atoms["theta"] = std::move(theta);
    atoms["truncated"] = st.rho.size() > atom_cap;
    result["atoms"] = std::move(atoms);
    emit(rq, wrap_report(rq, src.echo, std::move(result)));
    return 0;
}

int cmd_simulate(const request& rq) {
    const parsed_source src = load_source(rq.source);
    const cl::process_mode mode = cl::mode_from_string(rq.mode);

    cl::simulation_report rep;
    if (rq.two_stage) {
        if (!src.model)
            throw cl::invalid_query_error("simulate: --two-stage needs a multinomial source");
        rep = cl::simulate_two_stage(*src.model, static_cast<long>(src.model->probs.size()),
                                     rq.r, mode, rq.trials, rq.seed);
    } else {
        if (!src.config)
            throw cl::invalid_query_error(
                "simulate: needs a configuration source (or --two-stage with multinomial)");
        rep = cl::simulate_waiting_times(*src.config, rq.r, mode, rq.trials, rq.seed);
    }

    if (rq.format == "csv") {
        std::ostringstream os;
        os << "k,fraction_above\n";
        for (const auto& [k, frac] : rep.empirical_survival)
            os << k << ',' << fmt15(frac) << '\n';
        emit(rq, os.str());
    } else {
        json result;
        result["mode"] = rq.mode;
        result["r"] = rq.r;
        result["trials"] = rep.trials;
        result["mean"] = round15(rep.mean);
        result["std_error"] = round15(rep.std_error);
        json surv = json::array();
        for (const auto& [k, frac] : rep.empirical_survival)
            surv.push_back({{"k", k}, {"fraction_above", round15(frac)}});
        result["empirical_survival"] = std::move(surv);
        for (const auto& [key, value] : rep.extras) result[key] = round15(value);
        emit(rq, wrap_report(rq, src.echo, std::move(result)));
    }
    return 0;
}

int cmd_measures(const request& rq) {
    const parsed_source src = load_source(rq.source);
    if (!src.config)
        throw cl::invalid_query_error("measures: needs a configuration source");
    const cl::configuration& cfg = *src.config;

    json result;
    result["r"] = rq.r;
    result["chi2"] = rat_json(cl::chi2_statistic(cfg));
    if (cfg.m >= 2) {
        const cl::balance_report bal = cl::balance_measures(cfg, rq.r);
        result["mu2"] = round15(bal.mu2);
        result["lambda_r"] = bal.lambda_r ? json(round15(*bal.lambda_r)) : json(nullptr);
        result["m_eff"] = bal.m_eff ? json(round15(*bal.m_eff)) : json(nullptr);
        result["s_r"] = rat_json(bal.s_r);
        result["s_tilde_r"] = rat_json(bal.s_tilde_r);
    } else {
        result["note"] = "m < 2: balance logarithms undefined";
    }
    const cl::mapping_moments mom = cl::random_mapping_moments(cfg.n, cfg.m, rq.r);
    result["random_mapping_moments"] = {{"mean", rat_json(mom.mean)},
                                        {"variance", rat_json(mom.variance)}};
    const cl::concentration_report conc = cl::concentration_check(cfg.n, cfg.m, rq.r);
    result["concentration"] = {{"scaled_mean", rat_json(conc.scaled_mean)},
                               {"scaled_std", round15(conc.scaled_std)}};
    if (rq.cells_k >= 0 && rq.cells_j >= 0)
        result["expected_cell_count"] =
            rat_json(cl::expected_cell_counts(rq.cells_k, cfg.m, rq.cells_j));
    emit(rq, wrap_report(rq, src.echo, std::move(result)));
    return 0;
}

// ------------------------------------------------------------------- verify

struct verify_stats {
    long checks = 0;
    long failures = 0;
    std::ostringstream log;

    void expect_true(bool ok, const std::string& what) {
        ++checks;
        if (!ok) {
            ++failures;
            log << "  FAIL: " << what << '\n';
        }
    }
};

void verify_oracle_equivalence(verify_stats& vs, int n_max, int max_parts) {
    for (int n = 1; n <= n_max; ++n) {
        for (const auto& part : cl::partitions_of(n, max_parts)) {
            std::vector<long> sizes(part.begin(), part.end());
            sizes.push_back(0); // exercise empty cells too
            const cl::configuration cfg(sizes);
            for (int r : {2, 3}) {
                for (const cl::process_mode mode :
                     {cl::process_mode::K1, cl::process_mode::K2, cl::process_mode::R}) {
                    if (mode != cl::process_mode::R && cfg.max_size() < r) continue;
                    const long k_max = n + 2;
                    const cl::survival_table bf =
                        cl::brute_force_survival(cfg, r, mode, k_max);
                    const cl::survival_table ex =
                        cl::build_survival_table(cfg, r, mode, k_max);
                    for (long k = 0; k <= k_max; ++k) {
                        const auto& pb = bf.entries[static_cast<std::size_t>(k)];
                        const auto& pe = ex.entries[static_cast<std::size_t>(k)];
                        vs.expect_true(pe.exact && pb.rational == pe.rational,
                                       "oracle n=" + std::to_string(n) + " r=" +
                                           std::to_string(r) + " mode=" +
                                           cl::to_string(mode) + " k=" + std::to_string(k));
                    }
                }
            }
        }
    }
}

/// P(K > k) for the without-replacement pair-collision time, extended to
/// configurations where no collision can occur (permutation indegrees): the
/// functional-graph walk always repeats a point by step n+1, so K := n+1.
cl::Rat k1_pair_survival(const cl::configuration& cfg, long k) {
    if (cfg.max_size() >= 2) return cl::survival_K1(cfg, 2, k).rational;
    return cl::Rat(k <= cfg.n ? 1 : 0);
}

void verify_mapping_identities(verify_stats& vs, int n_max) {
    for (int n = 1; n <= n_max; ++n) {
        for (const auto& part : cl::partitions_of(n, n)) {
            std::vector<long> sizes(part.begin(), part.end());
            sizes.resize(static_cast<std::size_t>(n), 0); // self-mapping needs n cells
            const cl::configuration cfg(sizes);
            const cl::fixed_indegree_distributions fid = cl::enumerate_fixed_indegree(cfg);
            // P(Z > k) = P(K > k+1) with K the without-replacement pair time
            for (long k = 0; k <= n; ++k) {
                cl::Rat pz(0);
                for (const auto& [z, p] : fid.Z_distribution)
                    if (z > k) pz += p;
                vs.expect_true(pz == k1_pair_survival(cfg, k + 1),
                               "Z-identity sizes n=" + std::to_string(n) +
                                   " k=" + std::to_string(k));
            }
            // P(rho > k) = ((n-k)/n) P(K > k)
            for (long k = 0; k <= n; ++k) {
                cl::Rat prho(0);
                for (const auto& [l, p] : fid.rho_distribution)
                    if (l > k) prho += p;
                cl::Rat expected =
                    k1_pair_survival(cfg, k) * cl::Rat(cl::Int(n - k), cl::Int(n));
                expected.canonicalize();
                vs.expect_true(prho == expected, "rho-identity n=" + std::to_string(n) +
                                                     " k=" + std::to_string(k));
            }
        }
    }
}

void verify_series_rows(verify_stats& vs) {
    const std::vector<std::pair<int, std::vector<std::string>>> rows = {
        {2, {"1", "2/3", "1/12", "-2/135", "1/864"}},
        {3, {"1", "1/2", "21/80", "7/240", "83/13440"}},
        {4, {"1", "2/5", "17/100", "194/2625", "271/42000"}},
        {5, {"1", "1/3", "5/42", "11/252", "515/31752"}},
    };
    for (const auto& [r, expected] : rows) {
        const cl::rat_series got = cl::asymptotic_series_coefficients(r, expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i)
            vs.expect_true(cl::rat_to_string(got[i]) == expected[i],
                           "series r=" + std::to_string(r) + " a_" + std::to_string(i));
    }
}

void verify_hand_values(verify_stats& vs) {
    const cl::configuration cfg({2, 2});
    vs.expect_true(cl::rat_to_string(cl::survival_K1(cfg, 2, 2).rational) == "2/3",
                   "P(K1>2) on (2,2)");
    vs.expect_true(cl::rat_to_string(cl::survival_K2(cfg, 2, 2).rational) == "3/4",
                   "P(K2>2) on (2,2)");
    vs.expect_true(cl::rat_to_string(cl::survival_R(cfg, 2, 2).rational) == "1/2",
                   "P(R>2) on (2,2)");
    vs.expect_true(
        cl::rat_to_string(cl::expectation_exact(cfg, 2, cl::process_mode::K1).exact_value) ==
            "8/3",
        "E K1 on (2,2)");
    vs.expect_true(
        cl::rat_to_string(cl::expectation_exact(cfg, 2, cl::process_mode::K2).exact_value) ==
            "11/3",
        "E K2 on (2,2)");
    vs.expect_true(
        cl::rat_to_string(cl::expectation_exact(cfg, 2, cl::process_mode::R).exact_value) ==
            "5/2",
        "E R on (2,2)");
}

void verify_inequality_lemmas(verify_stats& vs, bool full) {
    // P(Bin(n,p) < r) >= (1 - p^r)^C(n,r)
    const double p_step = full ? 0.01 : 0.07;
    const int n_max = full ? 40 : 20;
    for (int n = 2; n <= n_max; ++n) {
        for (int r = 2; r < n; ++r) {
            for (double p = p_step; p < 0.995; p += p_step) {
                const double lhs = cl::G_r_eval(n, r, p);
                const double c = cl::to_double(cl::Rat(cl::binomial_int(
                    static_cast<unsigned long>(n), r)));
                // log1p keeps the bound honest when p^r is below machine eps.
                const double rhs = std::exp(c * std::log1p(-std::pow(p, r)));
                vs.expect_true(lhs >= rhs - 1e-12, "binomial tail lower bound n=" +
                                                       std::to_string(n) + " r=" +
                                                       std::to_string(r));
            }
        }
    }
    // -log G_r(n, 1-e^{-s}) <= C(n,r) s^r
    for (int n = 3; n <= (full ? 30 : 12); ++n) {
        for (int r = 2; r < n; ++r) {
            const double c = cl::to_double(cl::Rat(cl::binomial_int(
                static_cast<unsigned long>(n), r)));
            for (double s = 0.05; s <= 5.0; s += 0.05) {
                const double lhs = -cl::log_G_r_eval(n, r, -std::expm1(-s));
                vs.expect_true(lhs <= c * std::pow(s, r) + 1e-9,
                               "log-G bound n=" + std::to_string(n) + " r=" +
                                   std::to_string(r));
            }
        }
    }
    // -log(q_r(s) e^{-s}) <= s^r / r!
    for (int r = 2; r <= 6; ++r) {
        const double rfact = std::exp(std::lgamma(r + 1.0));
        for (double s = 0.05; s <= 10.0; s += 0.05) {
            const double lhs = s - std::log(cl::q_r_eval(s, r));
            vs.expect_true(lhs <= std::pow(s, r) / rfact + 1e-9,
                           "q-kernel bound r=" + std::to_string(r));
        }
    }
}

int cmd_verify(const request& rq) {
    const bool full = rq.battery == "full";
    if (!full && rq.battery != "small")
        throw cl::invalid_query_error("verify: --battery must be small or full");
    verify_stats vs;
    std::ostringstream os;
    long prev = 0;
    auto report = [&](const char* name) {
        os << name << ": " << (vs.failures ? "FAIL" : "ok") << " (" << (vs.checks - prev)
           << " checks)\n";
        prev = vs.checks;
    };
    verify_hand_values(vs);
    report("hand-values (2,2)");
    verify_oracle_equivalence(vs, full ? 6 : 5, full ? 4 : 3);
    report("exhaustive-oracle equivalence");
    verify_mapping_identities(vs, full ? 6 : 5);
    report("mapping identities (cyclic points, rho)");
    verify_series_rows(vs);
    report("asymptotic series rows");
    verify_inequality_lemmas(vs, full);
    report("inequality lemmas");
    os << "total: " << vs.checks << " checks, " << vs.failures << " failures\n";
    emit(rq, os.str() + vs.log.str());
    if (vs.failures > 0)
        throw cl::numeric_error("verify: " + std::to_string(vs.failures) + " checks failed",
                                static_cast<double>(vs.failures));
    return 0;
}

void add_source_options(CLI::App* sub, request& rq) {
    sub->add_option("--sizes", rq.source.sizes_csv,
                    "configuration as comma-separated cell sizes, e.g. 2,2");
    sub->add_option("--classical", rq.source.classical,
                    "classical configuration: M cells of size 1");
    sub->add_option("--config-file", rq.source.file, "JSON file with the configuration");
    sub->add_option("--multinomial-n", rq.source.multinomial_n,
                    "multinomial model: number of draws n");
    sub->add_option("--multinomial-p", rq.source.multinomial_p,
                    "multinomial model: probabilities as comma-separated rationals, e.g. "
                    "1/2,1/4,1/4");
}

} // namespace

int main(int argc, char** argv) {
    request rq;
    for (int i = 1; i < argc; ++i) rq.argv_echo.emplace_back(argv[i]);

    CLI::App app{"collision-lab: r-fold collision and repetition waiting times"};
    app.require_subcommand(1);

    std::string tol_str = "1e-12";

    auto* dist = app.add_subcommand("dist", "exact/float survival table P(T > k)");
    auto* expect = app.add_subcommand("expect", "expectation of a waiting time");
    auto* bounds = app.add_subcommand("bounds", "lower/upper expectation bounds and gaps");
    auto* limits = app.add_subcommand("limits", "limit-law classification and evaluation");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates");
    auto* measures = app.add_subcommand("measures", "balance measures and mapping moments");
    auto* verify = app.add_subcommand("verify", "run the cross-validation batteries");

    for (CLI::App* sub : {dist, expect, bounds, limits, simulate, measures}) {
        add_source_options(sub, rq);
        sub->add_option("--r", rq.r, "collision order r (default 2)");
        sub->add_option("--format", rq.format, "output format: csv or json");
        sub->add_option("--out", rq.out_path, "write output to this file instead of stdout");
        sub->add_option("--tol", tol_str, "numeric tolerance for quadrature paths");
        sub->add_option("--seed", rq.seed, "random seed (embedded in reports)");
    }
    dist->add_option("--mode", rq.mode, "process: K1, K2, or R");
    dist->add_option("--k-max", rq.k_max, "largest k in the table")->required();
    expect->add_option("--mode", rq.mode, "process: K1, K2, or R");
    expect->add_option("--method", rq.method, "auto|exact|quadrature|series");
    expect->add_option("--terms", rq.terms, "series terms (method=series; default 2r)");
    limits->add_option("--kind", rq.kind,
                       "evaluate this limit law: type1_K1, type1_K2, type2_collision, "
                       "type2_repetition, type3_discrete");
    limits->add_option("--t-max", rq.t_max, "largest scaled time t in the grid");
    limits->add_option("--t-steps", rq.t_steps, "number of grid steps (default 60)");
    limits->add_option("--k-max", rq.k_max, "largest k (type3_discrete)");
    simulate->add_option("--mode", rq.mode, "process: K1, K2, or R");
    simulate->add_option("--trials", rq.trials, "number of trials (default 10000)");
    simulate->add_flag("--two-stage", rq.two_stage,
                       "sample the configuration from the multinomial model each trial");
    measures->add_option("--cells-k", rq.cells_k, "report E(cells with exactly j) after k draws");
    measures->add_option("--cells-j", rq.cells_j, "occupancy count j for --cells-k");
    verify->add_option("--battery", rq.battery, "small (default) or full");
    verify->add_option("--out", rq.out_path, "write output to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        rq.tol = parse_double(tol_str, "--tol");
        if (dist->parsed()) rq.command = "dist";
        if (expect->parsed()) rq.command = "expect";
        if (bounds->parsed()) rq.command = "bounds";
        if (limits->parsed()) rq.command = "limits";
        if (simulate->parsed()) rq.command = "simulate";
        if (measures->parsed()) rq.command = "measures";
        if (verify->parsed()) rq.command = "verify";
        if (rq.format.empty())
            rq.format = (rq.command == "dist" || rq.command == "simulate") ? "csv" : "json";
        if (rq.format != "csv" && rq.format != "json")
            throw cl::invalid_query_error("--format must be csv or json");
        if (rq.format == "csv" && rq.command != "dist" && rq.command != "simulate" &&
            rq.command != "limits")
            throw cl::invalid_query_error(
                "csv output is only available for the tabular commands (dist, simulate, "
                "limits); use --format json for " +
                rq.command);

        if (rq.command == "dist") return cmd_dist(rq);
        if (rq.command == "expect") return cmd_expect(rq);
        if (rq.command == "bounds") return cmd_bounds(rq);
        if (rq.command == "limits") return cmd_limits(rq);
        if (rq.command == "simulate") return cmd_simulate(rq);
        if (rq.command == "measures") return cmd_measures(rq);
        if (rq.command == "verify") return cmd_verify(rq);
        throw cl::invalid_query_error("no command given");
    } catch (const cl::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const cl::resource_error& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return 3;
    } catch (const cl::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
