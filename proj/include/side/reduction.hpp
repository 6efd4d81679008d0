#pragma once

// Block-triangular forms, index reduction and the analysis of the resulting
// strangeness-free system.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "side/system.hpp"

namespace side {

// Row group sizes of a (condensed) block form. phi1/phi0 count the rows that
// carry an input and are only used by the descriptor path.
struct Invariants {
    Index r2 = 0;
    Index r1 = 0;
    Index r0 = 0;
    Index phi1 = 0;
    Index phi0 = 0;
    Index v = 0;

    Index upper_rank() const { return 3 * r2 + 2 * r1 + r0; }
    Index upper_rows() const { return r2 + r1 + r0; }
    Index rows() const { return r2 + r1 + r0 + phi1 + phi0 + v; }
    bool operator==(const Invariants&) const = default;
};

enum class Group { a, b, c, b4, c5, v };

// rows = u * (original rows), grouped as [A; B; C; B4; C5; v]:
//   A:  A1 x(n+2) + B1 x(n+1) + C1 x(n)
//   B:             B2 x(n+1) + C2 x(n)
//   C:                         C3 x(n)
// with A1, B2, C3 of full row rank and exact zeros below the diagonal blocks.
struct BlockForm {
    RowBlock rows;
    Invariants inv;
    Mat u;

    Index offset(Group g) const {
        switch (g) {
        case Group::a: return 0;
        case Group::b: return inv.r2;
        case Group::c: return inv.r2 + inv.r1;
        case Group::b4: return inv.upper_rows();
        case Group::c5: return inv.upper_rows() + inv.phi1;
        case Group::v: return inv.upper_rows() + inv.phi1 + inv.phi0;
        }
        return 0;
    }

    Index size(Group g) const {
        switch (g) {
        case Group::a: return inv.r2;
        case Group::b: return inv.r1;
        case Group::c: return inv.r0;
        case Group::b4: return inv.phi1;
        case Group::c5: return inv.phi0;
        case Group::v: return inv.v;
        }
        return 0;
    }

    RowBlock group(Group g) const { return rows.select(offset(g), size(g)); }

    Mat a1() const { return rows.a.topRows(inv.r2); }
    Mat b1() const { return rows.b.topRows(inv.r2); }
    Mat c1() const { return rows.c.topRows(inv.r2); }
    Mat b2() const { return rows.b.middleRows(inv.r2, inv.r1); }
    Mat c2() const { return rows.c.middleRows(inv.r2, inv.r1); }
    Mat c3() const { return rows.c.middleRows(inv.r2 + inv.r1, inv.r0); }
};

struct FormSequence {
    Time n0 = 0;
    std::vector<BlockForm> forms;

    Time last() const { return n0 + static_cast<Time>(forms.size()) - 1; }
    bool contains(Time n) const { return n >= n0 && n <= last(); }

    const BlockForm& at(Time n) const {
        if (!contains(n)) throw HorizonError(n, last(), "block form access outside the window");
        return forms[static_cast<std::size_t>(n - n0)];
    }
};

namespace detail {

inline void zero_structure(RowBlock& r, Index r2, Index r1, Index r0) {
    const Index m = r.rows();
    r.a.bottomRows(m - r2).setZero();
    r.b.bottomRows(m - r2 - r1).setZero();
    r.c.bottomRows(m - r2 - r1 - r0).setZero();
}

// Rows already sorted by their leading block only need a permutation.
inline std::optional<BlockForm> structured_form(const RowBlock& row, const RankTolerance& t) {
    const Index m = row.rows();
    const double thr = t.absolute;
    std::vector<Index> ga, gb, gc, gv;
    for (Index i = 0; i < m; ++i) {
        if (row.a.row(i).norm() > thr) ga.push_back(i);
        else if (row.b.row(i).norm() > thr) gb.push_back(i);
        else if (row.c.row(i).norm() > thr) gc.push_back(i);
        else gv.push_back(i);
    }
    Mat u = Mat::Zero(m, m);
    Index k = 0;
    for (const auto* g : {&ga, &gb, &gc, &gv})
        for (Index i : *g) u(k++, i) = 1.0;

    BlockForm f;
    f.inv.r2 = static_cast<Index>(ga.size());
    f.inv.r1 = static_cast<Index>(gb.size());
    f.inv.r0 = static_cast<Index>(gc.size());
    f.inv.v = static_cast<Index>(gv.size());
    f.rows = u * row;
    zero_structure(f.rows, f.inv.r2, f.inv.r1, f.inv.r0);
    if (numerical_rank(f.a1(), t) != f.inv.r2 || numerical_rank(f.b2(), t) != f.inv.r1 ||
        numerical_rank(f.c3(), t) != f.inv.r0)
        return std::nullopt;
    f.u = std::move(u);
    return f;
}

inline BlockForm compressed_form(const RowBlock& row, const RankTolerance& t) {
    const Compression ca = compress(row.a, t);
    const Mat t0a = ca.t_zero;
    const Compression cb = compress(Mat(t0a.transpose() * row.b), t);
    const Mat t0ab = t0a * cb.t_zero;
    const Compression cc = compress(Mat(t0ab.transpose() * row.c), t);

    const Mat ua = ca.t_perp.transpose();
    const Mat ub = (t0a * cb.t_perp).transpose();
    const Mat uc = (t0ab * cc.t_perp).transpose();
    const Mat uv = (t0ab * cc.t_zero).transpose();

    BlockForm f;
    f.inv.r2 = ca.rank;
    f.inv.r1 = cb.rank;
    f.inv.r0 = cc.rank;
    f.inv.v = row.rows() - ca.rank - cb.rank - cc.rank;
    f.u = vstack({&ua, &ub, &uc, &uv});
    f.rows = f.u * row;
    zero_structure(f.rows, f.inv.r2, f.inv.r1, f.inv.r0);
    return f;
}

} // namespace detail

// Brings one time slice into block upper triangular form. The rank decisions
// for all sub-blocks share one threshold anchored at [A B C].
inline BlockForm block_triangularize(const RowBlock& row, const RankTolerance& tol = {}) {
    const RankTolerance t = tol.anchored(row.behavior());
    if (auto f = detail::structured_form(row, t)) return *std::move(f);
    return detail::compressed_form(row, t);
}

inline BlockForm block_triangularize(const BehaviorRow& row, const RankTolerance& tol = {}) {
    const Index m = row.a.rows();
    return block_triangularize(
        RowBlock{row.a, row.b, row.c, Mat(m, 0), ShiftCombination::identity(m)}, tol);
}

inline FormSequence triangularize(const RowSequence& seq, const RankTolerance& tol = {}) {
    FormSequence out;
    out.n0 = seq.n0;
    out.forms.reserve(seq.blocks.size());
    for (const auto& b : seq.blocks) out.forms.push_back(block_triangularize(b, tol));
    return out;
}

// --- Constant-rank hypothesis -------------------------------------------

inline constexpr std::array<const char*, 7> kAssumptionRanks = {
    "rank(A)",          "rank([A B])",        "rank([A B C])", "rank(T0(A)^T B)",
    "rank(T0([A B])^T C)", "rank([A1; B2; C3])", "rank([B2; C3])"};

struct RankProfile {
    Time n = 0;
    std::array<Index, 7> ranks{};
};

struct AssumptionCheck {
    bool satisfied = true;
    std::optional<Time> first_violation;
    std::string condition;
    std::vector<RankProfile> per_n;
};

inline RankProfile rank_profile(const RowBlock& row, Time n, const RankTolerance& tol = {}) {
    const RankTolerance t = tol.anchored(row.behavior());
    RankProfile p;
    p.n = n;
    const Mat ab = hstack(row.a, row.b);
    const Mat t0a = compress(row.a, t).t_zero;
    const Mat t0ab = compress(ab, t).t_zero;
    const BlockForm f = block_triangularize(row, tol);
    p.ranks[0] = numerical_rank(row.a, t);
    p.ranks[1] = numerical_rank(ab, t);
    p.ranks[2] = numerical_rank(row.behavior(), t);
    p.ranks[3] = numerical_rank(Mat(t0a.transpose() * row.b), t);
    p.ranks[4] = numerical_rank(Mat(t0ab.transpose() * row.c), t);
    p.ranks[5] = numerical_rank(vstack(f.a1(), f.b2(), f.c3()), t);
    p.ranks[6] = numerical_rank(vstack(f.b2(), f.c3()), t);
    return p;
}

inline AssumptionCheck check_assumption1(const RowSequence& seq, const RankTolerance& tol = {}) {
    if (seq.blocks.size() < 3)
        throw HorizonError(seq.n0 + 2, seq.last(), "constant-rank check needs a window of at least 2");
    AssumptionCheck out;
    for (Time n = seq.n0; n <= seq.last(); ++n) {
        out.per_n.push_back(rank_profile(seq.at(n), n, tol));
        if (!out.satisfied) continue;
        const auto& first = out.per_n.front().ranks;
        const auto& cur = out.per_n.back().ranks;
        for (std::size_t k = 0; k < cur.size(); ++k) {
            if (cur[k] != first[k]) {
                out.satisfied = false;
                out.first_violation = n;
                out.condition = kAssumptionRanks[k];
                break;
            }
        }
    }
    return out;
}

inline AssumptionCheck check_assumption1(const SecondOrderSystem& sys, const RankTolerance& tol = {}) {
    return check_assumption1(sample(sys), tol);
}

// --- One index reduction step -------------------------------------------

struct StepMatrices {
    Mat s1, z1, z3;
    Mat s2, z2, z4, z5;
};

struct ReductionStep {
    int index = 0;
    Invariants before;
    Index d2 = 0;  // kept second-order rows
    Index s2 = 0;  // second-order rows turned first-order
    Index d1 = 0;  // kept first-order rows
    Index s1 = 0;  // first-order rows turned algebraic
    Index upper_before = 0;
    Index upper_nominal = 0;
    Time first = 0;
    Time last = 0;
    std::vector<StepMatrices> per_n;
};

struct StepResult {
    ReductionStep step;
    RowSequence output;
};

namespace detail {

inline RankTolerance step_tolerance(const FormSequence& forms, Time n, const RankTolerance& tol) {
    double smax = 0.0;
    Index rows = 0, cols = 0;
    for (Time k = n; k <= n + 2; ++k) {
        const Mat m = forms.at(k).rows.behavior();
        smax = std::max(smax, sigma_max(m));
        rows = std::max(rows, m.rows());
        cols = std::max(cols, m.cols());
    }
    return tol.anchored(smax, rows, cols);
}

inline void require_same_invariants(const FormSequence& forms, Time n, int step) {
    for (Time k = n + 1; k <= n + 2; ++k) {
        if (!(forms.at(k).inv == forms.at(n).inv))
            throw AssumptionError("local characteristic invariants change with n", k, step);
    }
}

} // namespace detail

// Transforms the upper three row groups at every n with n + 2 in the window.
// Rows after the upper groups (inputs, redundant rows) are carried unchanged.
inline StepResult reduction_step(const FormSequence& forms, const RankTolerance& tol = {}, int index = 1) {
    if (forms.last() - forms.n0 < 2)
        throw HorizonError(forms.n0 + 2, forms.last(), "index reduction step");
    StepResult res;
    ReductionStep& st = res.step;
    st.index = index;
    st.before = forms.at(forms.n0).inv;
    st.upper_before = st.before.upper_rank();
    st.first = forms.n0;
    st.last = forms.last() - 2;
    res.output.n0 = forms.n0;

    for (Time n = st.first; n <= st.last; ++n) {
        detail::require_same_invariants(forms, n, index);
        const RankTolerance t = detail::step_tolerance(forms, n, tol);
        const BlockForm& f0 = forms.at(n);
        const RowBlock ga = f0.group(Group::a);
        const RowBlock gb = f0.group(Group::b);
        const RowBlock gc = f0.group(Group::c);
        const RowBlock sb1 = shift(forms.at(n + 1).group(Group::b), 1);
        const RowBlock sc1 = shift(forms.at(n + 1).group(Group::c), 1);
        const RowBlock sc2 = shift(forms.at(n + 2).group(Group::c), 2);

        const RedundancyRemoval rr1 = remove_redundancy(gb.b, sc1.b, t);
        const RedundancyRemoval rr2 = remove_redundancy(ga.a, vstack(sb1.a, sc2.a), t);

        StepMatrices sm;
        sm.s1 = rr1.s;
        sm.z1 = rr1.z1;
        sm.z3 = rr1.z2;
        sm.s2 = rr2.s;
        sm.z2 = rr2.z1;
        sm.z4 = rr2.z2.leftCols(sb1.rows());
        sm.z5 = rr2.z2.rightCols(sc2.rows());

        const Index d2 = sm.s2.rows(), s2 = sm.z2.rows(), d1 = sm.s1.rows(), s1 = sm.z1.rows();
        if (n == st.first) {
            st.d2 = d2;
            st.s2 = s2;
            st.d1 = d1;
            st.s1 = s1;
        } else if (d2 != st.d2 || d1 != st.d1) {
            throw AssumptionError("redundancy counts change with n", n, index);
        }

        const RowBlock r_s2 = sm.s2 * ga;
        RowBlock r_z2 = sm.z2 * ga + sm.z4 * sb1 + sm.z5 * sc2;
        r_z2.a.setZero();
        const RowBlock r_s1 = sm.s1 * gb;
        RowBlock r_z1 = sm.z1 * gb + sm.z3 * sc1;
        r_z1.a.setZero();
        r_z1.b.setZero();
        const Index upper = f0.inv.upper_rows();
        const RowBlock rest = f0.rows.select(upper, f0.rows.rows() - upper);

        res.output.blocks.push_back(RowBlock::vstack({&r_s2, &r_z2, &r_s1, &r_z1, &gc, &rest}));
        st.per_n.push_back(std::move(sm));
    }
    st.upper_nominal = 3 * st.d2 + 2 * (st.s2 + st.d1) + (st.s1 + st.before.r0);
    return res;
}

// --- Strangeness-free result and the reduction loop -----------------------

struct StrangenessFreeSystem {
    FormSequence forms;
    Invariants inv;
    int mu = 0;

    Time n0() const { return forms.n0; }
    Time last() const { return forms.last(); }
    // Last n at which the stacked leading matrix can be evaluated.
    Time certified_last() const { return forms.last() - 2; }
    Index dim() const { return forms.forms.front().rows.dim(); }
    Index equations() const { return inv.rows(); }
    const BlockForm& at(Time n) const { return forms.at(n); }

    Mat stacked_leading(Time n) const {
        return vstack(forms.at(n).a1(), forms.at(n + 1).b2(), forms.at(n + 2).c3());
    }

    int max_shift() const {
        int best = -1;
        for (const auto& f : forms.forms) best = std::max(best, f.rows.rhs.max_offset());
        return best;
    }
};

struct Algorithm1Result {
    int mu = 0;
    StrangenessFreeSystem sfs;
    std::vector<ReductionStep> steps;
    std::vector<Invariants> invariants;  // before each step and at termination
    std::vector<RowSequence> stage_outputs;
};

inline bool certify_strangeness_free(const StrangenessFreeSystem& sfs, const RankTolerance& tol = {}) {
    for (Time n = sfs.n0(); n <= sfs.certified_last(); ++n) {
        const Mat s = sfs.stacked_leading(n);
        if (!has_full_row_rank(s, tol)) return false;
    }
    return true;
}

namespace detail {

inline void require_consistent_forms(const FormSequence& forms, int step, const RankTolerance& tol) {
    const BlockForm& first = forms.forms.front();
    const Index rs = numerical_rank(vstack(first.a1(), first.b2(), first.c3()), tol);
    const Index rb = numerical_rank(vstack(first.b2(), first.c3()), tol);
    for (Time n = forms.n0; n <= forms.last(); ++n) {
        const BlockForm& f = forms.at(n);
        if (!(f.inv == first.inv))
            throw AssumptionError("local characteristic invariants change with n", n, step);
        const RankTolerance t = tol.anchored(f.rows.behavior());
        if (numerical_rank(vstack(f.a1(), f.b2(), f.c3()), t) != rs ||
            numerical_rank(vstack(f.b2(), f.c3()), t) != rb)
            throw AssumptionError("rank of the stacked diagonal blocks changes with n", n, step);
    }
}

inline bool has_input(const RowSequence& seq) {
    for (const auto& b : seq.blocks)
        if (b.d.size() > 0 && !b.d.isZero(0.0)) return true;
    return false;
}

} // namespace detail

// Repeats index reduction steps until neither pair has hidden redundancy.
// max_iter < 0 uses the initial upper rank, which bounds mu.
inline Algorithm1Result algorithm1(const RowSequence& input, const RankTolerance& tol = {}, int max_iter = -1) {
    if (detail::has_input(input))
        throw InputError("algorithm1: the system carries an input; fold it in or use the descriptor path");
    Algorithm1Result res;
    RowSequence seq = input;
    for (int i = 0;; ++i) {
        FormSequence forms = triangularize(seq, tol);
        detail::require_consistent_forms(forms, i, tol);
        const Invariants inv = forms.forms.front().inv;
        res.invariants.push_back(inv);
        if (i == 0 && max_iter < 0) max_iter = static_cast<int>(inv.upper_rank());
        if (i > 0) {
            const ReductionStep& prev = res.steps.back();
            if (inv.upper_rank() > prev.upper_before - (prev.s1 + prev.s2))
                throw NumericalError("upper rank did not decrease by s1 + s2 in step " +
                                     std::to_string(prev.index));
        }
        StepResult step = reduction_step(forms, tol, i + 1);
        if (step.step.s1 == 0 && step.step.s2 == 0) {
            res.mu = i;
            res.sfs.forms = std::move(forms);
            res.sfs.inv = inv;
            res.sfs.mu = i;
            if (!certify_strangeness_free(res.sfs, tol))
                throw NumericalError("strangeness-free certificate failed at termination");
            return res;
        }
        if (i >= max_iter)
            throw NumericalError("algorithm1: iteration limit " + std::to_string(max_iter) + " reached");
        res.steps.push_back(step.step);
        res.stage_outputs.push_back(step.output);
        seq = std::move(step.output);
    }
}

inline Algorithm1Result algorithm1(const SecondOrderSystem& sys, const RankTolerance& tol = {}, int max_iter = -1) {
    return algorithm1(sample(sys), tol, max_iter);
}

// --- Solvability, consistency and the IVP --------------------------------

struct VerdictTolerance {
    double relative = 1e-9;
    double absolute = 1e-12;

    double bound(double scale) const { return absolute + relative * scale; }
};

struct SolvabilityVerdict {
    bool solvable = true;
    bool unique = false;
    Index v = 0;
    std::optional<Time> violating_n;
    double max_residual = 0.0;
};

namespace detail {

inline double rhs_scale(const RhsFunction& f, Time first, Time last) {
    double s = 0.0;
    for (Time n = first; n <= last; ++n) {
        const Vec x = f(n);
        if (x.size()) s = std::max(s, x.cwiseAbs().maxCoeff());
    }
    return s;
}

inline Time latest_access(const StrangenessFreeSystem& sfs) {
    return sfs.last() + std::max(0, sfs.max_shift());
}

} // namespace detail

// Verdict certified for n in the system's window only.
inline SolvabilityVerdict solvability(const StrangenessFreeSystem& sfs, const RhsFunction& f,
                                      const VerdictTolerance& vt = {}) {
    SolvabilityVerdict out;
    out.v = sfs.inv.v;
    out.unique = sfs.dim() == sfs.equations() - sfs.inv.v;
    if (sfs.inv.v == 0) return out;
    const double bound = vt.bound(detail::rhs_scale(f, sfs.n0(), detail::latest_access(sfs)));
    for (Time n = sfs.n0(); n <= sfs.last(); ++n) {
        const double r = sfs.at(n).group(Group::v).rhs.evaluate(f, n).cwiseAbs().maxCoeff();
        out.max_residual = std::max(out.max_residual, r);
        if (r > bound && out.solvable) {
            out.solvable = false;
            out.violating_n = n;
        }
    }
    if (!out.solvable) out.unique = false;
    return out;
}

// Linear conditions on [x0; x1]:
//   B2(n0) x1 + C2(n0) x0 = g2(n0),  C3(n0) x0 = g3(n0),  C3(n0+1) x1 = g3(n0+1).
struct ConsistencySystem {
    Mat lhs;  // rows x 2d, acting on [x0; x1]
    Vec rhs;
};

inline ConsistencySystem consistency_system(const StrangenessFreeSystem& sfs, const RhsFunction& f) {
    const Index d = sfs.dim();
    const Time n0 = sfs.n0();
    const BlockForm& f0 = sfs.at(n0);
    const BlockForm& f1 = sfs.at(n0 + 1);
    const Index r1 = f0.inv.r1, r0 = f0.inv.r0;
    ConsistencySystem cs;
    cs.lhs = Mat::Zero(r1 + 2 * r0, 2 * d);
    cs.rhs = Vec::Zero(r1 + 2 * r0);
    cs.lhs.block(0, 0, r1, d) = f0.c2();
    cs.lhs.block(0, d, r1, d) = f0.b2();
    cs.rhs.head(r1) = f0.group(Group::b).rhs.evaluate(f, n0);
    cs.lhs.block(r1, 0, r0, d) = f0.c3();
    cs.rhs.segment(r1, r0) = f0.group(Group::c).rhs.evaluate(f, n0);
    cs.lhs.block(r1 + r0, d, r0, d) = f1.c3();
    cs.rhs.tail(r0) = f1.group(Group::c).rhs.evaluate(f, n0 + 1);
    return cs;
}

struct ConsistencyVerdict {
    bool consistent = true;
    double residual_first_order = 0.0;  // B2 x1 + C2 x0 - g2 at n0
    double residual_algebraic = 0.0;    // C3 x0 - g3 at n0
    double residual_next = 0.0;         // C3 x1 - g3 at n0 + 1
    double bound = 0.0;

    double max_residual() const {
        return std::max({residual_first_order, residual_algebraic, residual_next});
    }
};

inline ConsistencyVerdict consistency(const StrangenessFreeSystem& sfs, const RhsFunction& f, const Vec& x0,
                                      const Vec& x1, const VerdictTolerance& vt = {}) {
    const Index d = sfs.dim();
    if (x0.size() != d || x1.size() != d) throw InputError("consistency: initial values must have length d");
    const ConsistencySystem cs = consistency_system(sfs, f);
    Vec z(2 * d);
    z << x0, x1;
    const Vec r = cs.lhs * z - cs.rhs;
    const Index r1 = sfs.inv.r1, r0 = sfs.inv.r0;
    auto amax = [](const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
    ConsistencyVerdict out;
    out.residual_first_order = amax(r.head(r1));
    out.residual_algebraic = amax(r.segment(r1, r0));
    out.residual_next = amax(r.tail(r0));
    const double scale = std::max(amax(cs.rhs), norm2(cs.lhs) * std::max(amax(x0), amax(x1)));
    out.bound = vt.bound(scale);
    out.consistent = out.max_residual() <= out.bound;
    return out;
}

// Minimum-norm [x0; x1] satisfying the consistency conditions.
inline std::pair<Vec, Vec> consistent_initial_values(const StrangenessFreeSystem& sfs, const RhsFunction& f,
                                                     const VerdictTolerance& vt = {}) {
    const Index d = sfs.dim();
    const ConsistencySystem cs = consistency_system(sfs, f);
    const Vec z = cs.lhs.rows() ? Vec(pseudo_inverse(cs.lhs, RankTolerance{1e-12, 0.0}) * cs.rhs)
                                : Vec(Vec::Zero(2 * d));
    const Vec x0 = z.head(d), x1 = z.tail(d);
    const ConsistencyVerdict c = consistency(sfs, f, x0, x1, vt);
    if (!c.consistent)
        throw SolvabilityError("initial conditions cannot satisfy the consistency conditions",
                               c.max_residual());
    return {x0, x1};
}

// Leading [A1(n); B2(n+1); C3(n+2)] x(n+2) + middle x(n+1) + trailing x(n) = rhs(n).
struct InherentRegular {
    Mat leading;
    Mat middle;
    Mat trailing;
    ShiftCombination rhs;
};

inline InherentRegular inherent_regular(const StrangenessFreeSystem& sfs, Time n) {
    const Index d = sfs.dim();
    if (d != sfs.equations() - sfs.inv.v)
        throw InputError("inherent_regular: system is not square (d != m - v)");
    const BlockForm& f0 = sfs.at(n);
    const RowBlock g1 = f0.group(Group::a);
    const RowBlock g2 = shift(sfs.at(n + 1).group(Group::b), 1);
    const RowBlock g3 = shift(sfs.at(n + 2).group(Group::c), 2);
    const RowBlock all = RowBlock::vstack({&g1, &g2, &g3});
    InherentRegular ir{all.a, all.b, all.c, all.rhs};
    const Vec s = singular_values(ir.leading);
    if (s.size() == 0 || s(s.size() - 1) <= RankTolerance{}.threshold(s(0), d, d))
        throw NumericalError("leading matrix of the inherent regular equation is singular at n = " +
                             std::to_string(n) + ", contradicting the strangeness-free certificate");
    return ir;
}

struct Trajectory {
    Time n0 = 0;
    std::vector<Vec> x;
    double max_residual = 0.0;

    Time last() const { return n0 + static_cast<Time>(x.size()) - 1; }
    const Vec& at(Time n) const { return x.at(static_cast<std::size_t>(n - n0)); }
};

// Residual of the original system along a trajectory, max over n with n + 2
// on the trajectory.
inline double original_residual(const SecondOrderSystem& sys, const Trajectory& tr, const InputFunction& u = {}) {
    double worst = 0.0;
    for (Time n = tr.n0; n + 2 <= tr.last(); ++n) {
        const Coefficients c = sys.coefficients(n);
        Vec r = c.a * tr.at(n + 2) + c.b * tr.at(n + 1) + c.c * tr.at(n) - c.f;
        if (sys.p() > 0 && u) r += c.d * u(n);
        const double scale = 1.0 + c.f.cwiseAbs().maxCoeff() +
                             norm2(hstack(c.a, c.b, c.c)) *
                                 std::max({tr.at(n).cwiseAbs().maxCoeff(), tr.at(n + 1).cwiseAbs().maxCoeff(),
                                           tr.at(n + 2).cwiseAbs().maxCoeff()});
        worst = std::max(worst, r.cwiseAbs().maxCoeff() / scale);
    }
    return worst;
}

// Forward recursion on the inherent regular equation for x(n0..n0+horizon).
inline Trajectory solve_ivp(const StrangenessFreeSystem& sfs, const RhsFunction& f, const Vec& x0, const Vec& x1,
                            Index horizon, const VerdictTolerance& vt = {},
                            const SecondOrderSystem* original = nullptr) {
    const Index d = sfs.dim();
    if (horizon < 1) throw InputError("solve_ivp: horizon must be at least 1");
    if (sfs.n0() + horizon > sfs.last())
        throw HorizonError(sfs.n0() + horizon, sfs.last(), "solve_ivp horizon exceeds window - 2 mu");
    const SolvabilityVerdict sv = solvability(sfs, f, vt);
    if (!sv.solvable)
        throw SolvabilityError("system is not solvable: redundant equation violated at n = " +
                                   std::to_string(*sv.violating_n),
                               sv.max_residual);
    if (!sv.unique) throw SolvabilityError("system is solvable but not uniquely; refusing to select", 0.0);
    const ConsistencyVerdict cv = consistency(sfs, f, x0, x1, vt);
    if (!cv.consistent) throw SolvabilityError("inconsistent initial values", cv.max_residual());

    Trajectory tr;
    tr.n0 = sfs.n0();
    tr.x.reserve(static_cast<std::size_t>(horizon + 1));
    tr.x.push_back(x0);
    tr.x.push_back(x1);
    for (Time n = sfs.n0(); n + 2 <= sfs.n0() + horizon; ++n) {
        const InherentRegular ir = inherent_regular(sfs, n);
        const Vec rhs = ir.rhs.evaluate(f, n) - ir.middle * tr.at(n + 1) - ir.trailing * tr.at(n);
        Vec next = ir.leading.fullPivLu().solve(rhs);
        if (next.size() != d) throw NumericalError("solve_ivp: dimension mismatch");
        tr.x.push_back(std::move(next));
    }
    if (original) {
        tr.max_residual = original_residual(*original, tr);
        if (tr.max_residual > vt.bound(1.0))
            throw NumericalError("solve_ivp: residual of the original system is " +
                                 std::to_string(tr.max_residual));
    }
    return tr;
}

} // namespace side
