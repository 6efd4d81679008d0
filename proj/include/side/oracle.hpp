#pragma once

// Brute-force reference: all equations of a finite window are stacked into
// one linear system over x(n0), ..., x(T+2) (and optionally the inputs) and
// solved by SVD least squares.

#include <optional>
#include <string>
#include <vector>

#include "side/system.hpp"

namespace side {

struct WindowSystem {
    Time n0 = 0;
    Time last_equation = 0;
    Index d = 0;
    Index p = 0;             // inputs kept as unknowns, 0 if they were fixed
    Mat matrix;
    Vec rhs;

    Index state_unknowns() const { return (last_equation - n0 + 3) * d; }
    Index unknowns() const { return matrix.cols(); }
    Index state_offset(Time n) const { return (n - n0) * d; }
    Index input_offset(Time n) const { return state_unknowns() + (n - n0) * p; }
};

// Equations for n in [seq.n0, last]. A given input is substituted, otherwise
// u(n0..last) become unknowns after the states.
inline WindowSystem build_window(const RowSequence& seq, const RhsFunction& f, std::optional<Time> last = {},
                                 const InputFunction& u = {}) {
    WindowSystem w;
    w.n0 = seq.n0;
    w.last_equation = last ? *last : seq.last();
    if (w.last_equation < w.n0) throw InputError("build_window: empty window");
    if (w.last_equation > seq.last()) throw HorizonError(w.last_equation, seq.last(), "build_window");
    w.d = seq.at(w.n0).dim();
    const Index pin = seq.at(w.n0).inputs();
    bool has_input = false;
    for (Time n = w.n0; n <= w.last_equation; ++n)
        if (seq.at(n).d.size() > 0 && !seq.at(n).d.isZero(0.0)) has_input = true;
    w.p = (has_input && !u) ? pin : 0;
    Index rows = 0;
    for (Time n = w.n0; n <= w.last_equation; ++n) rows += seq.at(n).rows();
    const Index steps = w.last_equation - w.n0 + 1;
    w.matrix = Mat::Zero(rows, w.state_unknowns() + steps * w.p);
    w.rhs = Vec::Zero(rows);
    Index at = 0;
    for (Time n = w.n0; n <= w.last_equation; ++n) {
        const RowBlock& r = seq.at(n);
        const Index k = r.rows();
        w.matrix.block(at, w.state_offset(n), k, w.d) = r.c;
        w.matrix.block(at, w.state_offset(n + 1), k, w.d) = r.b;
        w.matrix.block(at, w.state_offset(n + 2), k, w.d) = r.a;
        Vec g = r.rhs.evaluate(f, n);
        if (has_input) {
            if (u) g -= r.d * u(n);
            else w.matrix.block(at, w.input_offset(n), k, w.p) = r.d;
        }
        w.rhs.segment(at, k) = g;
        at += k;
    }
    return w;
}

inline WindowSystem build_window(const SecondOrderSystem& sys, std::optional<Time> last = {},
                                 const InputFunction& u = {}) {
    return build_window(sample(sys), sys.rhs_function(), last, u);
}

// Appends x(n0) = x0 and x(n0+1) = x1.
inline void add_initial_conditions(WindowSystem& w, const Vec& x0, const Vec& x1) {
    const Index r = w.matrix.rows();
    Mat m = Mat::Zero(r + 2 * w.d, w.unknowns());
    m.topRows(r) = w.matrix;
    m.block(r, 0, 2 * w.d, 2 * w.d).setIdentity();
    Vec b(r + 2 * w.d);
    b << w.rhs, x0, x1;
    w.matrix = std::move(m);
    w.rhs = std::move(b);
}

struct WindowSolution {
    bool feasible = false;
    Vec x;          // minimum-norm least-squares solution
    Mat null_basis; // orthonormal basis of the kernel
    double residual = 0.0;
    Index rank = 0;
    double condition = 1.0;  // sigma_max over the smallest retained singular value

    Index nullity() const { return null_basis.cols(); }
};

struct OracleTolerance {
    double rank_relative = 1e-10;
    double feasibility_relative = 1e-9;
    double comparison_relative = 1e-7;
};

inline WindowSolution window_solve(const WindowSystem& w, const OracleTolerance& tol = {}) {
    WindowSolution s;
    const Svd svd = full_svd(w.matrix);
    const double smax = svd.sigma.size() ? svd.sigma(0) : 0.0;
    s.rank = count_above(svd.sigma, std::max(tol.rank_relative * smax, 1e-300));
    const Mat ur = svd.u.leftCols(s.rank);
    const Mat vr = svd.v.leftCols(s.rank);
    const Vec coeff = ur.transpose() * w.rhs;
    s.x = vr * coeff.cwiseQuotient(svd.sigma.head(s.rank));
    if (s.rank > 0) s.condition = smax / svd.sigma(s.rank - 1);
    s.null_basis = svd.v.rightCols(w.unknowns() - s.rank);
    const Vec r = w.matrix * s.x - w.rhs;
    s.residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    const double scale = 1.0 + (w.rhs.size() ? w.rhs.cwiseAbs().maxCoeff() : 0.0) +
                         smax * (s.x.size() ? s.x.cwiseAbs().maxCoeff() : 0.0);
    s.feasible = s.residual <= tol.feasibility_relative * scale;
    return s;
}

// Affine solution set restricted to the states x(n0..last_observed).
struct ProjectedSolutionSet {
    bool feasible = false;
    Vec point;
    Mat directions;  // orthonormal

    Index dimension() const { return directions.cols(); }
};

inline ProjectedSolutionSet project(const WindowSystem& w, const WindowSolution& s, Time last_observed,
                                    const OracleTolerance& tol = {}) {
    if (last_observed < w.n0 || last_observed > w.last_equation + 2)
        throw InputError("project: observed range outside the window");
    const Index k = (last_observed - w.n0 + 1) * w.d;
    ProjectedSolutionSet out;
    out.feasible = s.feasible;
    out.point = s.x.head(k);
    const Mat pn = s.null_basis.topRows(k);
    const Svd svd = full_svd(pn);
    const Index r = count_above(svd.sigma, tol.rank_relative * std::max(1.0, svd.sigma.size() ? svd.sigma(0) : 0.0));
    out.directions = svd.u.leftCols(r);
    return out;
}

struct SetComparison {
    bool equal = false;
    bool feasibility_matches = false;
    bool dimensions_match = false;
    double direction_gap = 0.0;  // largest sine between the direction spaces
    double point_gap = 0.0;      // relative distance of the particular points modulo directions
    std::string reason;
};

namespace detail {

inline double outside(const Mat& basis, const Mat& vecs) {
    if (vecs.cols() == 0) return 0.0;
    const Mat rest = vecs - basis * (basis.transpose() * vecs);
    return rest.cwiseAbs().maxCoeff();
}

} // namespace detail

// a subset of b as affine sets (both projected to the same coordinates).
inline bool contained_in(const ProjectedSolutionSet& a, const ProjectedSolutionSet& b, double rel,
                         double* gap = nullptr) {
    if (!a.feasible) return true;
    if (!b.feasible) return false;
    const double scale = 1.0 + std::max(a.point.cwiseAbs().maxCoeff(), b.point.cwiseAbs().maxCoeff());
    const double dg = detail::outside(b.directions, a.directions);
    const Vec diff = a.point - b.point;
    const double pg = diff.size() ? detail::outside(b.directions, diff) / scale : 0.0;
    if (gap) *gap = std::max(dg, pg);
    return dg <= rel && pg <= rel;
}

// Four conditions: equal feasibility, equal dimension, mutually contained
// direction spaces, particular points differing by a direction.
inline SetComparison compare(const ProjectedSolutionSet& a, const ProjectedSolutionSet& b,
                             const OracleTolerance& tol = {}) {
    SetComparison c;
    c.feasibility_matches = a.feasible == b.feasible;
    if (!c.feasibility_matches) {
        c.reason = a.feasible ? "second system infeasible" : "first system infeasible";
        return c;
    }
    if (!a.feasible) {
        c.dimensions_match = true;
        c.equal = true;
        return c;
    }
    c.dimensions_match = a.dimension() == b.dimension();
    c.direction_gap = std::max(detail::outside(b.directions, a.directions),
                               detail::outside(a.directions, b.directions));
    const double scale = 1.0 + std::max(a.point.cwiseAbs().maxCoeff(), b.point.cwiseAbs().maxCoeff());
    const Vec diff = a.point - b.point;
    c.point_gap = diff.size() ? detail::outside(a.directions, diff) / scale : 0.0;
    if (!c.dimensions_match)
        c.reason = "solution set dimensions " + std::to_string(a.dimension()) + " and " +
                   std::to_string(b.dimension());
    else if (c.direction_gap > tol.comparison_relative)
        c.reason = "direction spaces differ";
    else if (c.point_gap > tol.comparison_relative)
        c.reason = "particular solutions differ";
    c.equal = c.reason.empty();
    return c;
}

// One side of a comparison: equations n0..last of `rows`.
struct WindowSpec {
    const RowSequence& rows;
    const RhsFunction& f;
    Time last;
};

inline ProjectedSolutionSet projected_solutions(const WindowSpec& s, Time observed, const OracleTolerance& tol,
                                                const InputFunction& u) {
    const WindowSystem w = build_window(s.rows, s.f, s.last, u);
    return project(w, window_solve(w, tol), observed, tol);
}

// Compares the solution sets of two systems observed on x(n0..observed).
// A system whose equations draw on later data (shifted rows) is compared
// against the other one with enough additional equations.
inline SetComparison same_solution_set(const WindowSpec& a, const WindowSpec& b, Time observed,
                                       const OracleTolerance& tol = {}, const InputFunction& u = {}) {
    if (a.rows.n0 != b.rows.n0) throw InputError("same_solution_set: windows start at different times");
    return compare(projected_solutions(a, observed, tol, u), projected_solutions(b, observed, tol, u), tol);
}

inline SetComparison same_solution_set(const RowSequence& a, const RhsFunction& fa, const RowSequence& b,
                                       const RhsFunction& fb, Time last, const OracleTolerance& tol = {},
                                       const InputFunction& u = {}) {
    return same_solution_set({a, fa, last}, {b, fb, last}, last, tol, u);
}

// Every solution of a satisfies b, observed on x(n0..observed).
inline bool solutions_satisfy(const WindowSpec& a, const WindowSpec& b, Time observed,
                              const OracleTolerance& tol = {}, const InputFunction& u = {}) {
    return contained_in(projected_solutions(a, observed, tol, u), projected_solutions(b, observed, tol, u),
                        tol.comparison_relative);
}

} // namespace side
