#pragma once

// Descriptor systems: the condensed form with separated input columns,
// regularizing first-order feedback and index reduction that never shifts an
// equation carrying an input.

#include <string>
#include <vector>

#include "side/reduction.hpp"

namespace side {

// form.rows holds U [A B C] and U D V grouped as [A; B; C; B4; C5; v], with
// the transformed input v = [v1; v2; v3] split as (p - phi1 - phi0, phi1, phi0):
//   D-part = [D11 0 0; 0; 0; 0 Sigma1 0; 0 0 Sigma0; 0].
// u(n) = V v(n) with V orthogonal.
struct DescriptorCondensedForm {
    BlockForm form;
    Mat v;
    Vec sigma1;
    Vec sigma0;

    Index inputs() const { return v.rows(); }
    Index free_inputs() const { return inputs() - form.inv.phi1 - form.inv.phi0; }

    // The same rows with the input part mapped back to u coordinates.
    RowBlock rows_in_input_coordinates() const {
        RowBlock r = form.rows;
        r.d = form.rows.d * v.transpose();
        return r;
    }

    Mat d1() const { return form.rows.d.topRows(form.inv.r2); }
};

inline DescriptorCondensedForm condense_descriptor(const RowBlock& row, const RankTolerance& tol = {}) {
    const Index m = row.rows();
    const Index p = row.inputs();
    const RankTolerance t = tol.anchored(hstack(row.behavior(), row.d));

    const Compression c1 = compress(row.a, t);
    const Mat t1 = c1.t_zero;
    const Compression cw = compress(Mat(t1.transpose() * row.d), t);
    const Mat w1 = cw.t_zero;
    const Mat w1p = cw.t_perp;
    const Index q = cw.rank;

    if (q == 0) {
        BlockForm f = block_triangularize(row, tol);
        f.rows.d.bottomRows(m - f.inv.r2).setZero();
        return {std::move(f), Mat::Identity(p, p), Vec(0), Vec(0)};
    }

    const Mat jb1 = w1.transpose() * t1.transpose() * row.b;
    const Mat jb2 = w1p.transpose() * t1.transpose() * row.b;
    const Mat jc1 = w1.transpose() * t1.transpose() * row.c;
    const Compression c2 = compress(jb1, t);
    const Compression c3 = compress(jb2, t);
    const Compression c4 = compress(Mat(c2.t_zero.transpose() * jc1), t);

    const Mat up_a = c1.t_perp.transpose();
    const Mat up_b = (t1 * w1 * c2.t_perp).transpose();
    const Mat up_c = (t1 * w1 * c2.t_zero * c4.t_perp).transpose();
    const Mat up_v = (t1 * w1 * c2.t_zero * c4.t_zero).transpose();
    const Mat up_b4 = (t1 * w1p * c3.t_perp).transpose();
    const Mat up_c5 = (t1 * w1p * c3.t_zero).transpose();

    Invariants inv;
    inv.r2 = c1.rank;
    inv.r1 = c2.rank;
    inv.r0 = c4.rank;
    inv.phi1 = c3.rank;
    inv.phi0 = q - c3.rank;
    inv.v = m - inv.r2 - inv.r1 - inv.r0 - q;

    Mat u = vstack({&up_a, &up_b, &up_c, &up_b4, &up_c5, &up_v});
    RowBlock r = u * row;

    const Index o4 = inv.upper_rows();
    const Index o5 = o4 + inv.phi1;
    const Mat d4 = r.d.middleRows(o4, inv.phi1);
    const Mat d5 = r.d.middleRows(o5, inv.phi0);

    // Sigma0 from the C5 rows, Sigma1 from the B4 rows restricted to the
    // complement of row(D5).
    const Svd s5 = full_svd(d5);
    const Mat v0 = s5.v.leftCols(inv.phi0);
    const Mat n0 = s5.v.rightCols(p - inv.phi0);
    const Svd s4 = full_svd(Mat(d4 * n0));
    const Mat v1 = n0 * s4.v.leftCols(inv.phi1);
    const Mat vk = n0 * s4.v.rightCols(p - inv.phi0 - inv.phi1);
    const Mat vt = hstack(vk, v1, v0);

    Mat rot = Mat::Identity(m, m);
    rot.block(o4, o4, inv.phi1, inv.phi1) = s4.u.transpose();
    rot.block(o5, o5, inv.phi0, inv.phi0) = s5.u.transpose();
    u = rot * u;
    r = rot * r;
    r.d = r.d * vt;

    const Index pk = p - inv.phi1 - inv.phi0;
    const Vec sig1 = s4.sigma.head(inv.phi1);
    const Vec sig0 = s5.sigma.head(inv.phi0);
    if ((inv.phi1 && sig1.minCoeff() <= t.absolute) || (inv.phi0 && sig0.minCoeff() <= t.absolute))
        throw NumericalError("condense_descriptor: input pivot below tolerance");

    // Eliminate the remaining entries of the Sigma columns with the pivots.
    Mat elim = Mat::Identity(m, m);
    for (Index j = 0; j < inv.phi0; ++j) {
        const Index col = pk + inv.phi1 + j;
        const Index piv = o5 + j;
        for (Index i = 0; i < o5; ++i) elim(i, piv) = -r.d(i, col) / sig0(j);
    }
    u = elim * u;
    r = elim * r;
    Mat elim2 = Mat::Identity(m, m);
    for (Index j = 0; j < inv.phi1; ++j) {
        const Index col = pk + j;
        const Index piv = o4 + j;
        for (Index i = 0; i < inv.r2; ++i) elim2(i, piv) = -r.d(i, col) / sig1(j);
    }
    u = elim2 * u;
    r = elim2 * r;

    // Exact structure.
    r.a.bottomRows(m - inv.r2).setZero();
    r.b.middleRows(inv.r2 + inv.r1, inv.r0).setZero();
    r.b.middleRows(o5, inv.phi0 + inv.v).setZero();
    r.c.bottomRows(inv.v).setZero();
    r.d.rightCols(inv.phi1 + inv.phi0).topRows(inv.r2).setZero();
    r.d.middleRows(inv.r2, inv.r1 + inv.r0).setZero();
    r.d.middleRows(o4, inv.phi1).setZero();
    r.d.middleRows(o5, inv.phi0).setZero();
    for (Index j = 0; j < inv.phi1; ++j) r.d(o4 + j, pk + j) = sig1(j);
    for (Index j = 0; j < inv.phi0; ++j) r.d(o5 + j, pk + inv.phi1 + j) = sig0(j);
    r.d.bottomRows(inv.v).setZero();

    BlockForm f;
    f.rows = std::move(r);
    f.inv = inv;
    f.u = std::move(u);
    return {std::move(f), vt, sig1, sig0};
}

struct DescriptorSequence {
    Time n0 = 0;
    std::vector<DescriptorCondensedForm> forms;

    Time last() const { return n0 + static_cast<Time>(forms.size()) - 1; }
    const DescriptorCondensedForm& at(Time n) const {
        if (n < n0 || n > last()) throw HorizonError(n, last(), "condensed form access outside the window");
        return forms[static_cast<std::size_t>(n - n0)];
    }

    FormSequence in_input_coordinates() const {
        FormSequence fs;
        fs.n0 = n0;
        for (const auto& c : forms) {
            BlockForm f = c.form;
            f.rows = c.rows_in_input_coordinates();
            fs.forms.push_back(std::move(f));
        }
        return fs;
    }
};

inline DescriptorSequence condense(const RowSequence& seq, const RankTolerance& tol = {}) {
    DescriptorSequence out;
    out.n0 = seq.n0;
    for (const auto& b : seq.blocks) out.forms.push_back(condense_descriptor(b, tol));
    return out;
}

namespace detail {

inline void require_constant(const DescriptorSequence& ds, int step) {
    const Invariants& first = ds.forms.front().form.inv;
    for (Time n = ds.n0; n <= ds.last(); ++n)
        if (!(ds.at(n).form.inv == first))
            throw AssumptionError("descriptor invariants change with n", n, step);
}

} // namespace detail

// --- Strangeness-free descriptor system ------------------------------------

struct StrangenessFreeDescriptor {
    DescriptorSequence cond;
    Invariants inv;
    int mu = 0;

    Time n0() const { return cond.n0; }
    Time last() const { return cond.last(); }
    Time certified_last() const { return cond.last() - 2; }
    Index dim() const { return cond.forms.front().form.rows.dim(); }

    // Rows with D-hat = (U D V) V^T: the system that shares the solution set
    // of the original for every fixed input.
    RowSequence rows() const {
        RowSequence s;
        s.n0 = cond.n0;
        for (const auto& c : cond.forms) s.blocks.push_back(c.rows_in_input_coordinates());
        return s;
    }

    Mat stacked_leading(Time n) const {
        return vstack(cond.at(n).form.a1(), cond.at(n + 1).form.b2(), cond.at(n + 2).form.c3());
    }

    Mat input_block(Time n) const {
        const auto& c = cond.at(n);
        const Mat dh = c.rows_in_input_coordinates().d;
        return dh.middleRows(c.form.inv.upper_rows(), c.form.inv.phi1 + c.form.inv.phi0);
    }
};

struct DescriptorResult {
    int mu = 0;
    StrangenessFreeDescriptor sfd;
    std::vector<ReductionStep> steps;
    std::vector<Invariants> invariants;  // actual, after each condensation
    std::vector<Invariants> nominal;     // predicted from the step counts
};

inline bool certify_descriptor(const StrangenessFreeDescriptor& sfd, const RankTolerance& tol = {}) {
    for (Time n = sfd.n0(); n <= sfd.certified_last(); ++n)
        if (!has_full_row_rank(sfd.stacked_leading(n), tol)) return false;
    for (Time n = sfd.n0(); n <= sfd.last(); ++n)
        if (!has_full_row_rank(sfd.input_block(n), tol)) return false;
    return true;
}

// One reduction step applied to the upper three row groups; the input rows
// and redundant rows are carried over unchanged. Output is in u coordinates.
inline StepResult descriptor_reduction_step(const DescriptorSequence& ds, const RankTolerance& tol = {},
                                            int index = 1) {
    StepResult res = reduction_step(ds.in_input_coordinates(), tol, index);
    if (res.step.s1 == 0 && res.step.s2 == 0)
        throw InputError("descriptor_reduction_step: upper part is already strangeness-free");
    return res;
}

inline DescriptorResult algorithm1_descriptor(const RowSequence& input, const RankTolerance& tol = {},
                                              int max_iter = -1) {
    DescriptorResult res;
    RowSequence seq = input;
    for (int i = 0;; ++i) {
        DescriptorSequence ds = condense(seq, tol);
        detail::require_constant(ds, i);
        const Invariants inv = ds.forms.front().form.inv;
        res.invariants.push_back(inv);
        if (i == 0 && max_iter < 0) max_iter = static_cast<int>(inv.upper_rank());
        StepResult step = reduction_step(ds.in_input_coordinates(), tol, i + 1);
        if (step.step.s1 == 0 && step.step.s2 == 0) {
            res.mu = i;
            res.sfd.cond = std::move(ds);
            res.sfd.inv = inv;
            res.sfd.mu = i;
            if (!certify_descriptor(res.sfd, tol))
                throw NumericalError("strangeness-free descriptor certificate failed at termination");
            return res;
        }
        if (i >= max_iter)
            throw NumericalError("algorithm1_descriptor: iteration limit " + std::to_string(max_iter) + " reached");
        Invariants nom = inv;
        nom.r2 = inv.r2 - step.step.s2;
        nom.r1 = inv.r1 + step.step.s2 - step.step.s1;
        nom.r0 = inv.r0 + step.step.s1;
        res.nominal.push_back(nom);
        res.steps.push_back(step.step);
        seq = std::move(step.output);
    }
}

inline DescriptorResult algorithm1_descriptor(const SecondOrderSystem& sys, const RankTolerance& tol = {},
                                              int max_iter = -1) {
    return algorithm1_descriptor(sample(sys), tol, max_iter);
}

// Closed-loop solvability for the strangeness-free descriptor system.
inline SolvabilityVerdict descriptor_solvability(const StrangenessFreeDescriptor& sfd, const RhsFunction& f,
                                                 const VerdictTolerance& vt = {}) {
    SolvabilityVerdict out;
    out.v = sfd.inv.v;
    out.unique = sfd.dim() == sfd.inv.rows() - sfd.inv.v;
    if (sfd.inv.v == 0) return out;
    int shift = 0;
    for (const auto& c : sfd.cond.forms) shift = std::max(shift, c.form.rows.rhs.max_offset());
    const double bound = vt.bound(detail::rhs_scale(f, sfd.n0(), sfd.last() + shift));
    for (Time n = sfd.n0(); n <= sfd.last(); ++n) {
        const double r = sfd.cond.at(n).form.group(Group::v).rhs.evaluate(f, n).cwiseAbs().maxCoeff();
        out.max_residual = std::max(out.max_residual, r);
        if (r > bound && out.solvable) {
            out.solvable = false;
            out.violating_n = n;
        }
    }
    if (!out.solvable) out.unique = false;
    return out;
}

// --- Regularizing feedback ---------------------------------------------------

// v(n) = F1(n) x(n+1) + F0(n) x(n) in transformed coordinates and
// u(n) = K1(n) x(n+1) + K0(n) x(n) with K = V_n F in the original ones.
struct Feedback {
    Time n0 = 0;
    std::vector<Mat> f1, f0, v, k1, k0;
    double eta = 0.0;

    Time last() const { return n0 + static_cast<Time>(k1.size()) - 1; }
    const Mat& k1_at(Time n) const { return k1.at(static_cast<std::size_t>(n - n0)); }
    const Mat& k0_at(Time n) const { return k0.at(static_cast<std::size_t>(n - n0)); }
};

namespace detail {

// Fills the Sigma rows of F1(t1) and F0(t0) so that [P; G + H] has full row
// rank, where H is free in its first q rows.
inline double place_gains(const Mat& p, const Mat& g, const Vec* sig1, Mat* f1, const Vec* sig0, Mat* f0,
                          Index off1, Index off0, const RankTolerance& tol) {
    const Index d = g.cols();
    const Index q = g.rows();
    if (q == 0) return 0.0;
    if (p.rows() + q > d)
        throw SolvabilityError("no regularizing feedback: " + std::to_string(p.rows()) + " dynamic rows and " +
                                   std::to_string(q) + " input rows exceed d = " + std::to_string(d),
                               0.0);
    Mat qsel = Mat::Zero(q, d);
    qsel.leftCols(q).setIdentity();
    const CompletedRank cr = complete_rank(p, qsel, g, tol);
    const Mat h = qsel * cr.f;
    Index at = 0;
    if (sig1) {
        for (Index j = 0; j < sig1->size(); ++j) f1->row(off1 + j) = h.row(at + j) / (*sig1)(j);
        at += sig1->size();
    }
    if (sig0) {
        for (Index j = 0; j < sig0->size(); ++j) f0->row(off0 + j) = h.row(at + j) / (*sig0)(j);
    }
    return cr.eta;
}

} // namespace detail

inline Feedback regularizing_feedback(const DescriptorSequence& ds, const RankTolerance& tol = {}) {
    const Time n0 = ds.n0;
    const Time last = ds.last();
    if (last - n0 < 2) throw HorizonError(n0 + 2, last, "regularizing_feedback");
    const Index d = ds.forms.front().form.rows.dim();
    const Index p = ds.forms.front().inputs();
    const Invariants inv = ds.forms.front().form.inv;
    const Index pk = p - inv.phi1 - inv.phi0;

    Feedback fb;
    fb.n0 = n0;
    const std::size_t count = static_cast<std::size_t>(last - n0);  // F on [n0, last - 1]
    std::vector<Mat> f1(count + 1, Mat::Zero(p, d)), f0(count + 1, Mat::Zero(p, d));
    auto idx = [&](Time t) { return static_cast<std::size_t>(t - n0); };

    for (Time n = n0; n <= last - 2; ++n) {
        const Mat pm = vstack(ds.at(n).form.a1(), ds.at(n + 1).form.b2(), ds.at(n + 2).form.c3());
        if (!has_full_row_rank(pm, tol))
            throw InputError("regularizing_feedback: upper part is not strangeness-free at n = " +
                             std::to_string(n) + "; reduce the index first");
        const Mat b4 = ds.at(n + 1).form.group(Group::b4).b;  // B4(n+1), acting on x(n+2)
        const Mat c5 = ds.at(n + 2).form.group(Group::c5).c;  // C5(n+2), acting on x(n+2)
        const Mat g = vstack(b4, c5);
        fb.eta = std::max(fb.eta, detail::place_gains(pm, g, &ds.at(n + 1).sigma1, &f1[idx(n + 1)],
                                                      &ds.at(n + 2).sigma0, &f0[idx(n + 2)], pk,
                                                      pk + inv.phi1, tol));
    }
    // Gains at the start of the window, from the shorter stacks that only
    // involve times n0 and n0 + 1.
    {
        const Mat pm = vstack(ds.at(n0).form.b2(), ds.at(n0 + 1).form.c3());
        const Mat g = vstack(ds.at(n0).form.group(Group::b4).b, ds.at(n0 + 1).form.group(Group::c5).c);
        fb.eta = std::max(fb.eta, detail::place_gains(pm, g, &ds.at(n0).sigma1, &f1[0], &ds.at(n0 + 1).sigma0,
                                                      &f0[1], pk, pk + inv.phi1, tol));
        const Mat pc = ds.at(n0).form.c3();
        const Mat gc = ds.at(n0).form.group(Group::c5).c;
        fb.eta = std::max(fb.eta, detail::place_gains(pc, gc, nullptr, nullptr, &ds.at(n0).sigma0, &f0[0], 0,
                                                      pk + inv.phi1, tol));
    }
    for (Time t = n0; t <= last - 1; ++t) {
        const Mat& vt = ds.at(t).v;
        fb.f1.push_back(f1[idx(t)]);
        fb.f0.push_back(f0[idx(t)]);
        fb.v.push_back(vt);
        fb.k1.push_back(vt * f1[idx(t)]);
        fb.k0.push_back(vt * f0[idx(t)]);
    }
    return fb;
}

// Substitutes u(n) = K1 x(n+1) + K0 x(n) into a row sequence (u coordinates).
inline RowSequence close_loop(const RowSequence& seq, const Feedback& fb) {
    RowSequence out;
    out.n0 = seq.n0;
    const Time last = std::min(seq.last(), fb.last());
    for (Time n = seq.n0; n <= last; ++n) {
        RowBlock r = seq.at(n);
        r.b += r.d * fb.k1_at(n);
        r.c += r.d * fb.k0_at(n);
        r.d = Mat(r.rows(), 0);
        out.blocks.push_back(std::move(r));
    }
    return out;
}

} // namespace side
