#pragma once

// Command driver shared by the executable and the tests.

#include <iomanip>
#include <limits>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "side/arrays.hpp"
#include "side/io.hpp"
#include "side/oracle.hpp"

namespace side {

enum ExitStatus : int { exit_ok = 0, exit_unsolvable = 2, exit_assumption = 3, exit_input = 4 };

struct RunConfig {
    std::string command;
    std::string input;                // problem file, report file or builtin name
    std::vector<std::string> params;  // key=value parameters for a builtin name
    std::optional<double> tol_rel;
    double tol_abs = 0.0;
    std::optional<Index> window;
    int max_index = -1;  // -1: bounded by the initial upper rank
    int max_level = 4;
    std::optional<Index> horizon;
    std::string format = "auto";  // json | text | csv
    std::string out;

    RankTolerance tolerance() const { return RankTolerance{tol_rel, tol_abs}; }
};

struct RunResult {
    int status = exit_ok;
    json report;
};

inline const char* const kCommands[] = {"analyze", "reduce", "feedback", "arrays", "solve", "verify"};

namespace detail {

inline json options_json(const RunConfig& c) {
    json o;
    o["tolerance"] = to_json(c.tolerance());
    o["window"] = c.window ? json(*c.window) : json(nullptr);
    o["max_index"] = c.max_index;
    o["max_level"] = c.max_level;
    o["horizon"] = c.horizon ? json(*c.horizon) : json(nullptr);
    return o;
}

inline void apply_options(RunConfig& c, const json& o) {
    if (!o.is_object()) throw InputError("options: expected an object");
    const json& t = o.at("tolerance");
    c.tol_rel = t.at("relative").is_null() ? std::optional<double>{} : t.at("relative").get<double>();
    c.tol_abs = t.at("absolute").get<double>();
    c.window = o.at("window").is_null() ? std::optional<Index>{} : o.at("window").get<Index>();
    c.max_index = o.at("max_index").get<int>();
    c.max_level = o.at("max_level").get<int>();
    c.horizon = o.at("horizon").is_null() ? std::optional<Index>{} : o.at("horizon").get<Index>();
}

inline json dims_json(const SecondOrderSystem& s) {
    return {{"m", s.m()}, {"d", s.d()}, {"p", s.p()}, {"n0", s.n0()}, {"window", s.window()}};
}

inline RowSequence to_rows(const FormSequence& fs) {
    RowSequence s;
    s.n0 = fs.n0;
    for (const auto& f : fs.forms) s.blocks.push_back(f.rows);
    return s;
}

inline json steps_json(const std::vector<ReductionStep>& steps) {
    json out = json::array();
    for (const auto& s : steps)
        out.push_back({{"index", s.index}, {"d2", s.d2}, {"s2", s.s2}, {"d1", s.d1}, {"s1", s.s1},
                       {"upper_rank_before", s.upper_before}, {"upper_rank_nominal", s.upper_nominal}});
    return out;
}

inline json invariants_json(const std::vector<Invariants>& v) {
    json out = json::array();
    for (const auto& i : v) out.push_back(to_json(i));
    return out;
}

inline json analyze(const Problem& pr, const RunConfig& cfg, int& status) {
    const SecondOrderSystem& sys = pr.system;
    const RankTolerance tol = cfg.tolerance();
    const RowSequence seq = sample(sys);
    json r;
    json per_n = json::array();
    for (Time n = seq.n0; n <= seq.last(); ++n) {
        const RowBlock& row = seq.at(n);
        const Invariants inv = sys.p() > 0 ? condense_descriptor(row, tol).form.inv : block_triangularize(row, tol).inv;
        json e = to_json(inv);
        e["n"] = n;
        e["singular_values"] = {{"A", to_json(singular_values(row.a))},
                                {"AB", to_json(singular_values(hstack(row.a, row.b)))},
                                {"ABC", to_json(singular_values(row.behavior()))}};
        per_n.push_back(std::move(e));
    }
    r["invariants_per_n"] = std::move(per_n);
    const AssumptionCheck ac = check_assumption1(seq, tol);
    json ranks = json::array();
    for (const auto& p : ac.per_n) {
        json e = {{"n", p.n}};
        for (std::size_t k = 0; k < p.ranks.size(); ++k) e[kAssumptionRanks[k]] = p.ranks[k];
        ranks.push_back(std::move(e));
    }
    r["assumption1"] = {{"satisfied", ac.satisfied},
                        {"first_violation", ac.first_violation ? json(*ac.first_violation) : json(nullptr)},
                        {"condition", ac.condition},
                        {"ranks_per_n", std::move(ranks)}};
    if (!ac.satisfied) status = exit_assumption;
    return r;
}

inline json consistency_json(const StrangenessFreeSystem& sfs, const RhsFunction& f) {
    const ConsistencySystem cs = consistency_system(sfs, f);
    return {{"lhs", to_json(cs.lhs)}, {"rhs", to_json(cs.rhs)}, {"unknowns", "[x(n0); x(n0+1)]"}};
}

inline json reduce(const Problem& pr, const RunConfig& cfg, int& status) {
    const SecondOrderSystem& sys = pr.system;
    const RankTolerance tol = cfg.tolerance();
    const RhsFunction f = sys.rhs_function();
    json r;
    if (sys.p() == 0) {
        const Algorithm1Result res = algorithm1(sys, tol, cfg.max_index);
        const SolvabilityVerdict sv = solvability(res.sfs, f);
        r["mu"] = res.mu;
        r["invariants_per_step"] = invariants_json(res.invariants);
        r["steps"] = steps_json(res.steps);
        r["strangeness_free"] = to_json(to_rows(res.sfs.forms));
        r["rhs_shifts"] = res.sfs.max_shift();
        r["solvable"] = sv.solvable;
        r["unique"] = sv.unique;
        r["redundant_residual"] = sv.max_residual;
        r["violating_n"] = sv.violating_n ? json(*sv.violating_n) : json(nullptr);
        r["certified_window"] = {res.sfs.n0(), res.sfs.last()};
        r["consistency_conditions"] = consistency_json(res.sfs, f);
        if (!sv.solvable) status = exit_unsolvable;
    } else {
        const DescriptorResult res = algorithm1_descriptor(sys, tol, cfg.max_index);
        const SolvabilityVerdict sv = descriptor_solvability(res.sfd, f);
        int shift = 0;
        for (const auto& c : res.sfd.cond.forms) shift = std::max(shift, c.form.rows.rhs.max_offset());
        r["mu"] = res.mu;
        r["invariants_per_step"] = invariants_json(res.invariants);
        r["nominal_invariants"] = invariants_json(res.nominal);
        r["steps"] = steps_json(res.steps);
        r["phi1"] = res.sfd.inv.phi1;
        r["phi0"] = res.sfd.inv.phi0;
        r["strangeness_free"] = to_json(res.sfd.rows());
        r["rhs_shifts"] = shift;
        r["solvable"] = sv.solvable;
        r["unique"] = sv.unique;
        r["redundant_residual"] = sv.max_residual;
        r["violating_n"] = sv.violating_n ? json(*sv.violating_n) : json(nullptr);
        r["certified_window"] = {res.sfd.n0(), res.sfd.last()};
        if (!sv.solvable) status = exit_unsolvable;
    }
    return r;
}

inline json feedback(const Problem& pr, const RunConfig& cfg, int& status) {
    const SecondOrderSystem& sys = pr.system;
    if (sys.p() == 0) throw InputError("feedback: the system has no inputs (p = 0)");
    const RankTolerance tol = cfg.tolerance();
    json r = reduce(pr, cfg, status);
    const DescriptorResult res = algorithm1_descriptor(sys, tol, cfg.max_index);
    const Feedback fb = regularizing_feedback(res.sfd.cond, tol);
    const RowSequence closed = close_loop(res.sfd.rows(), fb);
    const Algorithm1Result cl = algorithm1(closed, tol);
    json k1 = json::array(), k0 = json::array(), f1 = json::array(), f0 = json::array(), v = json::array();
    for (std::size_t i = 0; i < fb.k1.size(); ++i) {
        k1.push_back(to_json(fb.k1[i]));
        k0.push_back(to_json(fb.k0[i]));
        f1.push_back(to_json(fb.f1[i]));
        f0.push_back(to_json(fb.f0[i]));
        v.push_back(to_json(fb.v[i]));
    }
    r["feedback"] = {{"n0", fb.n0},
                     {"last", fb.last()},
                     {"F1", std::move(k1)},
                     {"F0", std::move(k0)},
                     {"eta", fb.eta},
                     {"transformed", {{"F1", std::move(f1)}, {"F0", std::move(f0)}, {"V", std::move(v)}}}};
    r["closed_loop_mu"] = cl.mu;
    r["closed_loop_certified"] = certify_strangeness_free(cl.sfs, tol);
    return r;
}

inline json arrays(const Problem& pr, const RunConfig& cfg, int&) {
    const Algorithm2Result res = algorithm2(pr.system, cfg.tolerance(), cfg.max_level);
    json r;
    r["shift_index"] = res.nu;
    r["level"] = res.level;
    json levels = json::array();
    for (const auto& [n, l] : res.per_n_levels) levels.push_back({{"n", n}, {"level", l}});
    r["per_n_levels"] = std::move(levels);
    RankCertificate worst = res.certificates.front();
    json certs = json::array();
    for (std::size_t i = 0; i < res.certificates.size(); ++i) {
        const RankCertificate& c = res.certificates[i];
        certs.push_back({{"n", res.extracted.n0 + static_cast<Time>(i)}, {"dynamic", c.dynamic}, {"input", c.input}});
    }
    r["rank_certificate"] = {{"dynamic", worst.dynamic}, {"input", worst.input}, {"target_d", worst.target_d}};
    r["rank_certificate_per_n"] = std::move(certs);
    r["extracted_invariants"] = to_json(res.invariants.front());
    r["extracted"] = to_json(res.extracted);
    return r;
}

// Input-free system to run the IVP on: a descriptor system is solved for
// the given input sequence.
inline SecondOrderSystem solve_system(const Problem& pr) {
    return pr.system.p() > 0 ? fold_input(pr.system, pr.input) : pr.system;
}

inline json solve(const Problem& pr, const RunConfig& cfg, int& status) {
    const SecondOrderSystem sys = solve_system(pr);
    const RhsFunction f = sys.rhs_function();
    const Algorithm1Result res = algorithm1(sys, cfg.tolerance(), cfg.max_index);
    json r;
    r["mu"] = res.mu;
    const SolvabilityVerdict sv = solvability(res.sfs, f);
    if (!sv.solvable) {
        r["error"] = "redundant equation violated at n = " + std::to_string(*sv.violating_n);
        r["residual"] = sv.max_residual;
        status = exit_unsolvable;
        return r;
    }
    Vec x0, x1;
    if (pr.x0) {
        x0 = *pr.x0;
        x1 = *pr.x1;
        const ConsistencyVerdict cv = consistency(res.sfs, f, x0, x1);
        if (!cv.consistent) {
            const char* which = cv.residual_algebraic >= std::max(cv.residual_first_order, cv.residual_next)
                                    ? "C3(n0) x0 = g3(n0)"
                                    : (cv.residual_first_order >= cv.residual_next
                                           ? "B2(n0) x1 + C2(n0) x0 = g2(n0)"
                                           : "C3(n0+1) x1 = g3(n0+1)");
            r["error"] = std::string("inconsistent initial values: violated constraint ") + which;
            r["residual"] = cv.max_residual();
            r["residuals"] = {{"first_order", cv.residual_first_order},
                              {"algebraic", cv.residual_algebraic},
                              {"next_algebraic", cv.residual_next},
                              {"bound", cv.bound}};
            status = exit_unsolvable;
            return r;
        }
    } else {
        std::tie(x0, x1) = consistent_initial_values(res.sfs, f);
    }
    const Index horizon = cfg.horizon.value_or(res.sfs.last() - res.sfs.n0());
    const Trajectory tr = solve_ivp(res.sfs, f, x0, x1, horizon, {}, &sys);
    json traj = json::array();
    for (Time n = tr.n0; n <= tr.last(); ++n) traj.push_back({{"n", n}, {"x", to_json(tr.at(n))}});
    r["initial_values"] = {{"x0", to_json(x0)}, {"x1", to_json(x1)}, {"given", pr.x0.has_value()}};
    r["trajectory"] = std::move(traj);
    r["max_residual"] = tr.max_residual;
    return r;
}

inline json check_entry(const std::string& name, bool passed, json detail = json::object()) {
    detail["name"] = name;
    detail["passed"] = passed;
    return detail;
}

inline json verify_problem(const Problem& pr, const RunConfig& cfg, int& status) {
    const RankTolerance tol = cfg.tolerance();
    const SecondOrderSystem sys = solve_system(pr);
    const RhsFunction f = sys.rhs_function();
    const RowSequence orig = sample(sys);
    json checks = json::array();
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            checks.push_back(fn());
        } catch (const AssumptionError& e) {
            checks.push_back({{"name", name}, {"passed", nullptr}, {"skipped", e.what()}});
        } catch (const Error& e) {
            checks.push_back({{"name", name}, {"passed", false}, {"error", e.what()}});
        }
    };
    std::optional<Algorithm1Result> a1;
    guarded("reduced_solution_set", [&] {
        a1 = algorithm1(sys, tol, cfg.max_index);
        const RowSequence red = to_rows(a1->sfs.forms);
        const Time t = red.last();
        const SetComparison c = same_solution_set({orig, f, orig.last()}, {red, f, t}, t);
        return check_entry("reduced_solution_set", c.equal,
                           {{"observed_last", t}, {"direction_gap", c.direction_gap}, {"point_gap", c.point_gap},
                            {"reason", c.reason}});
    });
    guarded("extracted_contains_original", [&] {
        const Algorithm2Result a2 = algorithm2(orig, tol, cfg.max_level);
        const Time t = a2.extracted.last();
        const bool ok = solutions_satisfy({orig, f, orig.last()}, {a2.extracted, f, t}, t);
        return check_entry("extracted_contains_original", ok, {{"observed_last", t}, {"level", a2.level}});
    });
    if (a1) {
        guarded("ivp_matches_window_solve", [&] {
            const SolvabilityVerdict sv = solvability(a1->sfs, f);
            if (!sv.solvable || !sv.unique)
                return json{{"name", "ivp_matches_window_solve"}, {"passed", nullptr},
                            {"skipped", "system is not uniquely solvable"}};
            Vec x0, x1;
            if (pr.x0) {
                x0 = *pr.x0;
                x1 = *pr.x1;
            } else {
                std::tie(x0, x1) = consistent_initial_values(a1->sfs, f);
            }
            const Index horizon = a1->sfs.last() - a1->sfs.n0();
            const Trajectory tr = solve_ivp(a1->sfs, f, x0, x1, horizon, {}, &sys);
            WindowSystem w = build_window(orig, f, orig.last());
            add_initial_conditions(w, x0, x1);
            const WindowSolution ws = window_solve(w);
            double gap = 0.0, scale = 1.0;
            for (Time n = tr.n0; n <= tr.last(); ++n) {
                const Vec xs = ws.x.segment(w.state_offset(n), w.d);
                gap = std::max(gap, (xs - tr.at(n)).cwiseAbs().maxCoeff());
                scale = std::max(scale, tr.at(n).cwiseAbs().maxCoeff());
            }
            const double bound = std::max(1e-8, 10.0 * std::numeric_limits<double>::epsilon() * ws.condition);
            json detail = {{"max_difference", gap},       {"feasible", ws.feasible}, {"horizon", horizon},
                           {"window_condition", ws.condition}, {"relative_bound", bound}};
            // The trajectory already satisfies the original equations here, so an
            // infeasible window means the oracle cannot represent it.
            if (!ws.feasible || bound > 1e-2) {
                detail["name"] = "ivp_matches_window_solve";
                detail["passed"] = nullptr;
                detail["skipped"] = "window matrix too ill-conditioned for the oracle";
                return detail;
            }
            return check_entry("ivp_matches_window_solve", gap <= bound * scale, std::move(detail));
        });
    }
    bool all = true;
    for (const auto& c : checks)
        if (c["passed"].is_boolean() && !c["passed"].get<bool>()) all = false;
    if (!all) status = exit_unsolvable;
    return {{"checks", std::move(checks)}, {"all_passed", all}};
}

} // namespace detail

RunResult execute(const RunConfig& cfg, const json& input);

namespace detail {

inline json verify_report(const json& stored, RunConfig cfg, int& status) {
    RunConfig rerun = cfg;
    rerun.command = stored.at("command").get<std::string>();
    if (rerun.command == "verify") throw InputError("verify: refusing to re-run a verify report");
    apply_options(rerun, stored.at("options"));
    const RunResult again = execute(rerun, stored.at("problem"));
    json diffs = json::array();
    for (const auto& [k, v] : stored.items())
        if (!again.report.contains(k) || again.report.at(k) != v) diffs.push_back(k);
    for (const auto& [k, v] : again.report.items())
        if (!stored.contains(k)) diffs.push_back(k);
    const bool same = diffs.empty();
    if (!same) status = exit_unsolvable;
    return {{"reproduced", same}, {"rerun_command", rerun.command}, {"differences", std::move(diffs)}};
}

} // namespace detail

// Runs one command on a problem (or, for verify, on a stored report).
inline RunResult execute(const RunConfig& cfg, const json& input) {
    RunResult res;
    json& r = res.report;
    r["command"] = cfg.command;
    r["options"] = detail::options_json(cfg);
    int status = exit_ok;
    try {
        if (cfg.command == "verify" && input.is_object() && input.contains("command") && input.contains("problem")) {
            r["verify"] = detail::verify_report(input, cfg, status);
            r["problem"] = input.at("problem");
        } else {
            r["problem"] = input;
            const Problem pr = parse_problem(input, cfg.window);
            r["system"] = detail::dims_json(pr.system);
            json body;
            if (cfg.command == "analyze") body = detail::analyze(pr, cfg, status);
            else if (cfg.command == "reduce") body = detail::reduce(pr, cfg, status);
            else if (cfg.command == "feedback") body = detail::feedback(pr, cfg, status);
            else if (cfg.command == "arrays") body = detail::arrays(pr, cfg, status);
            else if (cfg.command == "solve") body = detail::solve(pr, cfg, status);
            else if (cfg.command == "verify") body = detail::verify_problem(pr, cfg, status);
            else throw InputError("unknown command '" + cfg.command + "'");
            r.update(body);
        }
    } catch (const InputError& e) {
        status = exit_input;
        r["error"] = e.what();
    } catch (const HorizonError& e) {
        status = exit_input;
        r["error"] = e.what();
    } catch (const AssumptionError& e) {
        status = exit_assumption;
        r["error"] = e.what();
        r["violation"] = {{"n", e.time()}, {"step", e.step()}};
    } catch (const NumericalError& e) {
        status = exit_assumption;
        r["error"] = e.what();
    } catch (const SolvabilityError& e) {
        status = exit_unsolvable;
        r["error"] = e.what();
        r["residual"] = e.residual();
    } catch (const json::exception& e) {
        status = exit_input;
        r["error"] = std::string("malformed field: ") + e.what();
    }
    r["status"] = status;
    res.status = status;
    return res;
}

inline std::string trajectory_csv(const json& report) {
    std::ostringstream os;
    const json& traj = report.at("trajectory");
    const std::size_t d = traj.empty() ? 0 : traj[0].at("x").size();
    os << "n";
    for (std::size_t i = 1; i <= d; ++i) os << ",x_" << i;
    os << "\n" << std::setprecision(17);
    for (const auto& row : traj) {
        os << row.at("n").get<Time>();
        for (const auto& v : row.at("x")) os << "," << v.get<double>();
        os << "\n";
    }
    return os.str();
}

inline std::string text_summary(const json& r) {
    std::ostringstream os;
    os << std::setprecision(6);
    os << "command: " << r.value("command", "") << "   status: " << r.value("status", 0) << "\n";
    if (r.contains("error")) os << "error: " << r["error"].get<std::string>() << "\n";
    if (r.contains("system")) {
        const json& s = r["system"];
        os << "system: m=" << s["m"] << " d=" << s["d"] << " p=" << s["p"] << " n0=" << s["n0"]
           << " window=" << s["window"] << "\n";
    }
    if (r.contains("assumption1")) {
        const json& a = r["assumption1"];
        os << "constant rank: " << (a["satisfied"].get<bool>() ? "satisfied" : "violated");
        if (!a["satisfied"].get<bool>()) os << " (" << a["condition"].get<std::string>() << " at n=" << a["first_violation"] << ")";
        os << "\n";
    }
    if (r.contains("invariants_per_n") && !r["invariants_per_n"].empty()) {
        const json& i = r["invariants_per_n"][0];
        os << "invariants at n0: r2=" << i["r2"] << " r1=" << i["r1"] << " r0=" << i["r0"] << " phi1=" << i["phi1"]
           << " phi0=" << i["phi0"] << " v=" << i["v"] << "\n";
    }
    if (r.contains("mu")) os << "strangeness index mu = " << r["mu"] << "\n";
    if (r.contains("invariants_per_step"))
        for (std::size_t k = 0; k < r["invariants_per_step"].size(); ++k) {
            const json& i = r["invariants_per_step"][k];
            os << "  stage " << k << ": r2=" << i["r2"] << " r1=" << i["r1"] << " r0=" << i["r0"] << " v=" << i["v"]
               << " upper_rank=" << i["upper_rank"] << "\n";
        }
    if (r.contains("rhs_shifts")) os << "max rhs shift: " << r["rhs_shifts"] << "\n";
    if (r.contains("solvable")) os << "solvable: " << r["solvable"] << "  unique: " << r["unique"] << "\n";
    if (r.contains("closed_loop_mu")) os << "closed-loop mu = " << r["closed_loop_mu"] << "\n";
    if (r.contains("shift_index"))
        os << "shift index nu = " << r["shift_index"] << " (level " << r["level"] << ", rank "
           << r["rank_certificate"]["dynamic"] << " + " << r["rank_certificate"]["input"] << " of "
           << r["rank_certificate"]["target_d"] << ")\n";
    if (r.contains("trajectory") && !r["trajectory"].empty()) {
        for (const auto& row : r["trajectory"]) {
            os << "  x(" << row["n"] << ") =";
            for (const auto& v : row["x"]) os << " " << std::setw(12) << v.get<double>();
            os << "\n";
        }
        os << "original residual: " << r["max_residual"].get<double>() << "\n";
    }
    if (r.contains("checks"))
        for (const auto& c : r["checks"]) {
            const char* verdict = c["passed"].is_null() ? "skip" : (c["passed"].get<bool>() ? "pass" : "FAIL");
            os << "  [" << verdict << "] " << c["name"].get<std::string>() << "\n";
        }
    if (r.contains("verify"))
        os << "report reproduced: " << (r["verify"]["reproduced"].get<bool>() ? "yes" : "no") << "\n";
    return os.str();
}

inline bool is_builtin_name(const std::string& s) {
    return s == "example_3_10" || s == "example_1_4" || s == "example_2_1" || s == "robot_arm";
}

// {"coefficients": {"kind": "builtin", "name": ...}} from key=value pairs;
// n0, window, u, x0 and x1 go to the top level. Values are read as JSON
// where possible (alpha=0, M0=[[2]]), otherwise as strings (scheme=forward).
inline json builtin_problem(const std::string& name, const std::vector<std::string>& params) {
    json c = {{"kind", "builtin"}, {"name", name}};
    json root = json::object();
    for (const std::string& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("parameter '" + kv + "': expected key=value");
        const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        if (key == "n0" || key == "window" || key == "u" || key == "x0" || key == "x1") root[key] = value;
        else c[key] = value;
    }
    root["coefficients"] = std::move(c);
    return root;
}

inline json load_input(const RunConfig& cfg) {
    if (is_builtin_name(cfg.input) && !std::ifstream(cfg.input)) return builtin_problem(cfg.input, cfg.params);
    if (!cfg.params.empty()) throw InputError("key=value parameters are only accepted with a builtin name");
    return read_json_file(cfg.input);
}

// Loads the input, runs the command and writes the output; returns the exit status.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    RunResult res;
    try {
        if (cfg.window && *cfg.window < 2) throw InputError("--window must be at least 2");
        if (cfg.max_level < 0) throw InputError("--max-level must be non-negative");
        if (cfg.max_index < -1) throw InputError("--max-index must be non-negative");
        const json input = load_input(cfg);
        res = execute(cfg, input);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    }
    std::string format = cfg.format;
    if (format == "auto") format = (cfg.command == "solve" && res.report.contains("trajectory")) ? "csv" : "json";
    std::string body;
    if (format == "json") body = res.report.dump(2) + "\n";
    else if (format == "text") body = text_summary(res.report);
    else if (format == "csv") {
        if (!res.report.contains("trajectory")) body = res.report.dump(2) + "\n";
        else body = trajectory_csv(res.report);
    } else {
        err << "error: unknown format '" << format << "' (expected json, text or csv)\n";
        return exit_input;
    }
    if (res.report.contains("error")) {
        err << "error: " << res.report["error"].get<std::string>();
        if (res.report.contains("residual")) err << " (residual " << res.report["residual"].get<double>() << ")";
        err << "\n";
    }
    if (cfg.out.empty()) {
        out << body;
    } else {
        std::ofstream f(cfg.out);
        if (!f) {
            err << "error: cannot write " << cfg.out << "\n";
            return exit_input;
        }
        f << body;
    }
    return res.status;
}

} // namespace side
