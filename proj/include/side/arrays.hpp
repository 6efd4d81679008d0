#pragma once

// Difference arrays: the inflated system and the extraction of a
// strangeness-free formulation from it.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "side/descriptor.hpp"

namespace side {

// Row block j holds C_{n+j}, B_{n+j}, A_{n+j} in column blocks j, j+1, j+2
// (unknowns x(n), ..., x(n+level+2)) and D_{n+j} in input block j.
struct InflatedSystem {
    Time n = 0;
    int level = 0;
    Index m = 0;
    Index d = 0;
    Index p = 0;
    Mat big_m;
    Mat big_n;
    ShiftCombination big_g;
};

inline InflatedSystem build_inflated(const RowSequence& seq, Time n, int level) {
    if (level < 0) throw InputError("build_inflated: level must be non-negative");
    if (n < seq.n0) throw HorizonError(n, seq.n0, "build_inflated: time precedes the window");
    if (n + level > seq.last()) throw HorizonError(n + level, seq.last(), "build_inflated");
    const RowBlock& first = seq.at(n);
    InflatedSystem inf;
    inf.n = n;
    inf.level = level;
    inf.m = first.rows();
    inf.d = first.dim();
    inf.p = first.inputs();
    const Index blocks = level + 1;
    inf.big_m = Mat::Zero(blocks * inf.m, (level + 3) * inf.d);
    inf.big_n = Mat::Zero(blocks * inf.m, blocks * inf.p);
    inf.big_g = ShiftCombination(0, first.rhs.source_dim());
    for (int j = 0; j < blocks; ++j) {
        const RowBlock& r = seq.at(n + j);
        if (r.rows() != inf.m) throw InputError("build_inflated: row count changes with n");
        inf.big_m.block(j * inf.m, j * inf.d, inf.m, inf.d) = r.c;
        inf.big_m.block(j * inf.m, (j + 1) * inf.d, inf.m, inf.d) = r.b;
        inf.big_m.block(j * inf.m, (j + 2) * inf.d, inf.m, inf.d) = r.a;
        inf.big_n.block(j * inf.m, j * inf.p, inf.m, inf.p) = r.d;
        const ShiftCombination g = r.rhs.shifted(j);
        inf.big_g = ShiftCombination::vstack({&inf.big_g, &g});
    }
    return inf;
}

inline InflatedSystem build_inflated(const SecondOrderSystem& sys, Time n, int level) {
    if (n + level > sys.last()) throw HorizonError(n + level, sys.last(), "build_inflated");
    RowSequence seq;
    seq.n0 = n;
    for (Time k = n; k <= n + level; ++k) seq.blocks.push_back(row_block(sys, k));
    return build_inflated(seq, n, level);
}

// Columns of the unknowns beyond x(n+2) and of the inputs beyond u(n).
inline Mat future_columns(const InflatedSystem& inf) {
    const Index xc = inf.level * inf.d;
    const Index uc = inf.level * inf.p;
    Mat w(inf.big_m.rows(), xc + uc);
    w.leftCols(xc) = inf.big_m.rightCols(xc);
    w.rightCols(uc) = inf.big_n.rightCols(uc);
    return w;
}

// The equations of the inflated system that involve only x(n..n+2), u(n),
// condensed into the descriptor form.
struct ArrayExtraction {
    Time n = 0;
    int level = 0;
    Mat u1;
    DescriptorCondensedForm check;
};

inline ArrayExtraction extract_candidate(const InflatedSystem& inf, const RankTolerance& tol = {}) {
    ArrayExtraction ex;
    ex.n = inf.n;
    ex.level = inf.level;
    const Mat w = future_columns(inf);
    ex.u1 = compress(w, tol).t_zero;
    const Mat ut = ex.u1.transpose();
    const Index d = inf.d;
    RowBlock rows{ut * inf.big_m.middleCols(2 * d, d), ut * inf.big_m.middleCols(d, d),
                  ut * inf.big_m.leftCols(d), ut * inf.big_n.leftCols(inf.p), ut * inf.big_g};
    ex.check = condense_descriptor(rows, tol);
    return ex;
}

struct RankCertificate {
    Index dynamic = 0;
    Index input = 0;
    Index target_d = 0;

    bool holds() const { return dynamic + input == target_d; }
};

inline RankCertificate rank_certificate(const ArrayExtraction& e0, const ArrayExtraction& e1,
                                        const ArrayExtraction& e2, const RankTolerance& tol = {}) {
    RankCertificate c;
    const BlockForm& f0 = e0.check.form;
    c.target_d = f0.rows.dim();
    c.dynamic = numerical_rank(vstack(f0.a1(), e1.check.form.b2(), e2.check.form.c3()), tol);
    const RowBlock ui = e0.check.rows_in_input_coordinates();
    c.input = numerical_rank(ui.d.middleRows(f0.inv.upper_rows(), f0.inv.phi1 + f0.inv.phi0), tol);
    return c;
}

// Strangeness-free rows at n: the hidden redundancies of the upper groups
// are removed against the shifted equations at n+1 and n+2, the remaining
// groups are kept. Output is in u coordinates.
inline std::pair<RowBlock, Invariants> assemble_extraction(const ArrayExtraction& e0, const ArrayExtraction& e1,
                                                           const ArrayExtraction& e2,
                                                           const RankTolerance& tol = {}) {
    FormSequence fs;
    fs.n0 = e0.n;
    for (const auto* e : {&e0, &e1, &e2}) {
        BlockForm f = e->check.form;
        f.rows = e->check.rows_in_input_coordinates();
        fs.forms.push_back(std::move(f));
    }
    const BlockForm& f0 = fs.forms.front();
    Invariants inv = f0.inv;
    const RankTolerance t = detail::step_tolerance(fs, e0.n, tol);
    const RowBlock ga = f0.group(Group::a);
    const RowBlock gb = f0.group(Group::b);
    const Mat b2n1 = fs.forms[1].b2();
    const Mat c3n1 = fs.forms[1].c3();
    const Mat c3n2 = fs.forms[2].c3();
    const RedundancyRemoval rr1 = remove_redundancy(gb.b, c3n1, t);
    const RedundancyRemoval rr2 = remove_redundancy(ga.a, vstack(b2n1, c3n2), t);
    const RowBlock ra = rr2.s * ga;
    const RowBlock rb = rr1.s * gb;
    const RowBlock rest = f0.rows.select(inv.r2 + inv.r1, f0.rows.rows() - inv.r2 - inv.r1);
    inv.r2 = rr2.s.rows();
    inv.r1 = rr1.s.rows();
    return {RowBlock::vstack({&ra, &rb, &rest}), inv};
}

struct Algorithm2Result {
    int level = 0;
    int nu = 0;
    std::map<Time, int> per_n_levels;
    RowSequence extracted;
    std::vector<Invariants> invariants;
    std::vector<RankCertificate> certificates;
    RankCertificate best;  // largest rank sum seen when no level succeeds
};

inline int shift_index(int level) { return (level + 1) / 2; }

// Literal level loop: at level l every n with n + l + 2 in the window is
// probed; the loop stops at the first level where the rank identity holds
// at all of them.
inline Algorithm2Result algorithm2(const RowSequence& seq, const RankTolerance& tol = {}, int max_level = 4) {
    if (max_level < 0) throw InputError("algorithm2: max_level must be non-negative");
    Algorithm2Result res;
    for (int level = 0; level <= max_level; ++level) {
        const Time last_n = seq.last() - 2 - level;
        if (last_n < seq.n0)
            throw HorizonError(seq.n0 + 2 + level, seq.last(), "algorithm2 at level " + std::to_string(level));
        std::vector<ArrayExtraction> ex;
        for (Time n = seq.n0; n <= last_n + 2; ++n)
            ex.push_back(extract_candidate(build_inflated(seq, n, level), tol));
        bool all = true;
        std::vector<RankCertificate> certs;
        for (Time n = seq.n0; n <= last_n; ++n) {
            const std::size_t i = static_cast<std::size_t>(n - seq.n0);
            const RankCertificate c = rank_certificate(ex[i], ex[i + 1], ex[i + 2], tol);
            certs.push_back(c);
            if (c.dynamic + c.input > res.best.dynamic + res.best.input) res.best = c;
            if (c.holds()) res.per_n_levels.try_emplace(n, level);
            else all = false;
        }
        if (!all) continue;
        res.level = level;
        res.nu = shift_index(level);
        res.certificates = std::move(certs);
        res.extracted.n0 = seq.n0;
        for (Time n = seq.n0; n <= last_n; ++n) {
            const std::size_t i = static_cast<std::size_t>(n - seq.n0);
            auto [rows, inv] = assemble_extraction(ex[i], ex[i + 1], ex[i + 2], tol);
            res.extracted.blocks.push_back(std::move(rows));
            res.invariants.push_back(inv);
        }
        for (auto it = res.per_n_levels.begin(); it != res.per_n_levels.end();)
            it = it->first > last_n ? res.per_n_levels.erase(it) : std::next(it);
        return res;
    }
    throw SolvabilityError("algorithm2: no level up to " + std::to_string(max_level) +
                               " satisfies the rank identity (best rank sum " +
                               std::to_string(res.best.dynamic + res.best.input) + " of " +
                               std::to_string(res.best.target_d) + ")",
                           0.0);
}

inline Algorithm2Result algorithm2(const SecondOrderSystem& sys, const RankTolerance& tol = {}, int max_level = 4) {
    return algorithm2(sample(sys), tol, max_level);
}

} // namespace side
