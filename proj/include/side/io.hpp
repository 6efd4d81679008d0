#pragma once

// Problem files and JSON encoding of results.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "side/builtins.hpp"

namespace side {

using json = nlohmann::json;

struct Problem {
    json source;
    std::string name = "explicit";
    SecondOrderSystem system;
    InputFunction input;  // empty when p = 0
    bool input_given = false;
    std::optional<Vec> x0;
    std::optional<Vec> x1;
};

namespace detail {

inline std::string field_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

inline double parse_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw InputError(path + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(path + ": non-finite value");
    return v;
}

inline Index parse_count(const json& obj, const char* key, const std::string& path) {
    const json& j = obj.at(key);
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw InputError(path + "." + key + ": expected a non-negative integer");
    return j.get<Index>();
}

// A scalar is accepted for a 1x1 matrix; [] is an empty matrix.
inline Mat parse_matrix(const json& j, Index rows, Index cols, const std::string& path) {
    if (j.is_number()) {
        if (rows != 1 || cols != 1)
            throw InputError(path + ": scalar given, expected " + std::to_string(rows) + "x" + std::to_string(cols));
        return Mat::Constant(1, 1, parse_number(j, path));
    }
    if (!j.is_array()) throw InputError(path + ": expected a matrix (array of rows)");
    if (rows == 0 || cols == 0) {
        bool empty = j.empty();
        if (!empty) {
            empty = true;
            for (const auto& r : j)
                if (!r.is_array() || !r.empty()) empty = false;
            if (static_cast<Index>(j.size()) != rows) empty = false;
        }
        if (!empty)
            throw InputError(path + ": expected an empty " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " matrix");
        return Mat::Zero(rows, cols);
    }
    if (static_cast<Index>(j.size()) != rows)
        throw InputError(path + ": has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const json& r = j[static_cast<std::size_t>(i)];
        const std::string rp = field_path(path, static_cast<std::size_t>(i));
        if (!r.is_array() || static_cast<Index>(r.size()) != cols)
            throw InputError(rp + ": expected a row of " + std::to_string(cols) + " numbers");
        for (Index k = 0; k < cols; ++k)
            m(i, k) = parse_number(r[static_cast<std::size_t>(k)], field_path(rp, static_cast<std::size_t>(k)));
    }
    return m;
}

// Square parameter matrix of unknown size; a scalar means 1x1.
inline Mat parse_any_matrix(const json& j, const std::string& path) {
    if (j.is_number()) return Mat::Constant(1, 1, parse_number(j, path));
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw InputError(path + ": expected a matrix");
    return parse_matrix(j, static_cast<Index>(j.size()), static_cast<Index>(j[0].size()), path);
}

inline Vec parse_vector(const json& j, Index n, const std::string& path) {
    if (j.is_number() && n == 1) return Vec::Constant(1, parse_number(j, path));
    if (!j.is_array() || static_cast<Index>(j.size()) != n)
        throw InputError(path + ": expected a vector of length " + std::to_string(n));
    Vec v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = parse_number(j[static_cast<std::size_t>(i)], field_path(path, static_cast<std::size_t>(i)));
    return v;
}

inline bool is_number_list(const json& j) { return j.is_array() && !j.empty() && j[0].is_number(); }

// Per-step list of matrices, or one matrix used for every step. A list of
// numbers is a series of 1x1 matrices.
inline std::vector<Mat> parse_matrix_series(const json& j, Index rows, Index cols, const std::string& path) {
    if (!j.is_array()) throw InputError(path + ": expected a list of matrices");
    const bool single = j.empty() || (j[0].is_array() && (j[0].empty() || !j[0][0].is_array()));
    if (single) return {parse_matrix(j, rows, cols, path)};
    std::vector<Mat> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_matrix(j[i], rows, cols, field_path(path, i)));
    return out;
}

inline std::vector<Vec> parse_vector_series(const json& j, Index n, const std::string& path) {
    if (!j.is_array()) throw InputError(path + ": expected a list of vectors");
    if (n == 0 || (is_number_list(j) && (n != 1 || j.size() == 1))) return {parse_vector(j, n, path)};
    std::vector<Vec> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_vector(j[i], n, field_path(path, i)));
    return out;
}

template <class T>
const T& series_at(const std::vector<T>& s, Time n, Time n0) {
    return s.size() == 1 ? s.front() : s.at(static_cast<std::size_t>(n - n0));
}

inline std::size_t series_length(std::size_t len, Index window, const std::string& path) {
    if (len != 1 && static_cast<Index>(len) < window + 1)
        throw InputError(path + ": " + std::to_string(len) + " entries cover fewer than window + 1 = " +
                         std::to_string(window + 1) + " steps");
    return len;
}

// "default", "zero" or explicit data.
inline RhsFunction parse_rhs(const json* j, Index m, Time n0, Index window, RhsFunction fallback,
                             const std::string& path) {
    if (!j) return fallback;
    if (j->is_string()) {
        const std::string s = j->get<std::string>();
        if (s == "default") return default_rhs(m);
        if (s == "zero") return zero_rhs(m);
        throw InputError(path + ": unknown right-hand side '" + s + "' (expected default, zero or data)");
    }
    auto series = parse_vector_series(*j, m, path);
    series_length(series.size(), window, path);
    return [series, n0](Time n) {
        if (series.size() != 1 && (n < n0 || n - n0 >= static_cast<Time>(series.size())))
            throw HorizonError(n, n0 + static_cast<Time>(series.size()) - 1, "right-hand side data ends");
        return series_at(series, n, n0);
    };
}

inline InputFunction parse_input(const json* j, Index p, Time n0, Index window, const std::string& path) {
    if (!j) return default_input(p);
    if (j->is_string()) {
        const std::string s = j->get<std::string>();
        if (s == "default") return default_input(p);
        if (s == "zero") return [p](Time) { return Vec(Vec::Zero(p)); };
        throw InputError(path + ": unknown input '" + s + "'");
    }
    auto series = parse_vector_series(*j, p, path);
    series_length(series.size(), window, path);
    return [series, n0](Time n) {
        if (series.size() != 1 && (n < n0 || n - n0 >= static_cast<Time>(series.size())))
            throw HorizonError(n, n0 + static_cast<Time>(series.size()) - 1, "input data ends");
        return series_at(series, n, n0);
    };
}

inline const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline void check_dim(const json& root, const char* key, Index actual) {
    if (const json* j = find(root, key)) {
        if (!j->is_number_integer() || j->get<Index>() != actual)
            throw InputError(std::string(key) + ": builtin has " + key + " = " + std::to_string(actual));
    }
}

inline SecondOrderSystem explicit_system(const json& root, const json& c, Time n0,
                                         std::optional<Index> window_override) {
    const Index m = parse_count(root, "m", "problem");
    const Index d = parse_count(root, "d", "problem");
    const Index p = find(root, "p") ? parse_count(root, "p", "problem") : 0;
    for (const char* k : {"A", "B", "C", "f"})
        if (!find(c, k)) throw InputError(std::string("coefficients.") + k + ": missing");
    auto a = parse_matrix_series(c.at("A"), m, d, "coefficients.A");
    auto b = parse_matrix_series(c.at("B"), m, d, "coefficients.B");
    auto cc = parse_matrix_series(c.at("C"), m, d, "coefficients.C");
    std::vector<Mat> dd{Mat::Zero(m, p)};
    if (const json* dj = find(c, "D")) dd = parse_matrix_series(*dj, m, p, "coefficients.D");
    else if (p > 0) throw InputError("coefficients.D: missing although p > 0");
    auto f = parse_vector_series(c.at("f"), m, "coefficients.f");
    std::size_t longest = 1;
    for (std::size_t len : {a.size(), b.size(), cc.size(), dd.size(), f.size()}) longest = std::max(longest, len);
    Index window = 0;
    if (window_override) window = *window_override;
    else if (find(root, "window")) window = parse_count(root, "window", "problem");
    else if (longest > 1) window = static_cast<Index>(longest) - 1;
    else throw InputError("window: missing and not implied by the coefficient lists");
    series_length(a.size(), window, "coefficients.A");
    series_length(b.size(), window, "coefficients.B");
    series_length(cc.size(), window, "coefficients.C");
    series_length(dd.size(), window, "coefficients.D");
    series_length(f.size(), window, "coefficients.f");
    CoefficientProvider provider = [a, b, cc, dd, f, n0](Time n) {
        return Coefficients{series_at(a, n, n0), series_at(b, n, n0), series_at(cc, n, n0), series_at(dd, n, n0),
                            series_at(f, n, n0)};
    };
    return {m, d, p, n0, window, std::move(provider)};
}

} // namespace detail

inline Problem parse_problem(const json& root, std::optional<Index> window_override = {}) {
    using namespace detail;
    if (!root.is_object()) throw InputError("problem: expected a JSON object");
    const json* c = find(root, "coefficients");
    if (!c || !c->is_object()) throw InputError("coefficients: missing or not an object");
    const json* kind = find(*c, "kind");
    if (!kind || !kind->is_string()) throw InputError("coefficients.kind: expected \"explicit\" or \"builtin\"");
    Time n0 = 0;
    if (const json* j = find(root, "n0")) {
        if (!j->is_number_integer()) throw InputError("n0: expected an integer");
        n0 = j->get<Time>();
    }
    std::optional<Index> window = window_override;
    if (!window)
        if (const json* j = find(root, "window")) window = parse_count(root, "window", "problem");

    std::optional<SecondOrderSystem> sys;
    std::string name = "explicit";
    const std::string k = kind->get<std::string>();
    if (k == "explicit") {
        sys = explicit_system(root, *c, n0, window);
    } else if (k == "builtin") {
        const json* nj = find(*c, "name");
        if (!nj || !nj->is_string()) throw InputError("coefficients.name: expected a builtin name");
        name = nj->get<std::string>();
        const json* fj = find(*c, "f");
        if (name == "example_3_10") {
            double alpha = 1.0;
            if (const json* aj = find(*c, "alpha")) alpha = parse_number(*aj, "coefficients.alpha");
            const Index w = window.value_or(16);
            sys = example_3_10(alpha, n0, w, parse_rhs(fj, 3, n0, w, default_rhs(3), "coefficients.f"));
        } else if (name == "example_1_4" || name == "example_2_1") {
            const Index w = window.value_or(24);
            sys = example_1_4(n0, w, parse_rhs(fj, 2, n0, w, default_rhs(2), "coefficients.f"));
        } else if (name == "robot_arm") {
            RobotArm arm;
            if (const json* j = find(*c, "h")) arm.h = parse_number(*j, "coefficients.h");
            const std::pair<const char*, Mat*> mats[] = {{"M0", &arm.m0}, {"G0", &arm.g0}, {"K0", &arm.k0},
                                                         {"H0", &arm.h0}, {"B0", &arm.b0}};
            for (const auto& [key, dst] : mats)
                if (const json* j = find(*c, key)) *dst = parse_any_matrix(*j, std::string("coefficients.") + key);
            if (const json* j = find(*c, "scheme")) {
                if (!j->is_string()) throw InputError("coefficients.scheme: expected a string");
                arm.scheme = parse_scheme(j->get<std::string>());
            }
            const Index w = window.value_or(16);
            const Index dd = arm.m0.rows() + arm.h0.rows();
            sys = robot_arm(arm, n0, w, parse_rhs(fj, dd, n0, w, zero_rhs(dd), "coefficients.f"));
        } else {
            throw InputError("coefficients.name: unknown builtin '" + name +
                             "' (expected example_3_10, example_1_4, example_2_1 or robot_arm)");
        }
        check_dim(root, "m", sys->m());
        check_dim(root, "d", sys->d());
        check_dim(root, "p", sys->p());
    } else {
        throw InputError("coefficients.kind: unknown kind '" + k + "'");
    }
    if (sys->window() < 2) throw InputError("window: must be at least 2");

    Problem pr{root, name, *sys, {}, false, {}, {}};
    if (sys->p() > 0) {
        const json* uj = find(root, "u");
        pr.input_given = uj != nullptr;
        pr.input = parse_input(uj, sys->p(), n0, sys->window(), "u");
    }
    if (const json* j = find(root, "x0")) pr.x0 = parse_vector(*j, sys->d(), "x0");
    if (const json* j = find(root, "x1")) pr.x1 = parse_vector(*j, sys->d(), "x1");
    if (pr.x0.has_value() != pr.x1.has_value()) throw InputError("x0/x1: give both initial values or neither");
    return pr;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t at = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < at; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw InputError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                         e.what() + ")");
    }
}

// --- Encoding -----------------------------------------------------------------

inline json to_json(const Mat& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline json to_json(const Vec& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline json to_json(const ShiftCombination& s) {
    json out = json::array();
    for (const auto& [k, c] : s.terms()) out.push_back({{"offset", k}, {"coefficient", to_json(c)}});
    return out;
}

inline json to_json(const Invariants& inv) {
    return {{"r2", inv.r2}, {"r1", inv.r1}, {"r0", inv.r0}, {"phi1", inv.phi1}, {"phi0", inv.phi0},
            {"v", inv.v}, {"upper_rank", inv.upper_rank()}};
}

inline json to_json(const RowBlock& r) {
    json out = {{"A", to_json(r.a)}, {"B", to_json(r.b)}, {"C", to_json(r.c)}, {"rhs", to_json(r.rhs)}};
    if (r.inputs() > 0) out["D"] = to_json(r.d);
    return out;
}

inline json to_json(const RowSequence& seq) {
    json out = json::array();
    for (Time n = seq.n0; n <= seq.last(); ++n) {
        json b = to_json(seq.at(n));
        b["n"] = n;
        out.push_back(std::move(b));
    }
    return out;
}

inline json to_json(const RankTolerance& t) {
    json out = {{"absolute", t.absolute}};
    out["relative"] = t.relative ? json(*t.relative) : json(nullptr);
    return out;
}

} // namespace side
