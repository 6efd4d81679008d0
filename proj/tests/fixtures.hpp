#pragma once

#include <vector>

#include "side/system.hpp"

namespace side::testing {

struct ReferenceRow {
    Mat b;    // 1 x 3
    Mat c;    // 1 x 3
    ShiftCombination rhs;  // 1 x 3
};

inline Mat row3(double x, double y, double z) {
    Mat r(1, 3);
    r << x, y, z;
    return r;
}

inline ShiftCombination rhs_row(std::initializer_list<std::pair<int, Mat>> terms) {
    ShiftCombination s(1, 3);
    for (const auto& [k, c] : terms) s.add_term(k, c);
    return s;
}

// Step-1 output for the 3x3 example with alpha != 0.
inline std::vector<ReferenceRow> first_step_rows(double alpha, Time t) {
    const double n = static_cast<double>(t);
    return {
        {row3(0, alpha, n + 2), row3(0, n + 1, 0),
         rhs_row({{0, row3(1, 0, 0)}, {1, row3(0, -1, 0)}, {2, row3(0, 0, -1)}})},
        {row3(1, n, 1), row3(0, 0, n), rhs_row({{0, row3(0, 1, 0)}})},
        {row3(0, 0, 0), row3(0, 0, n + 1), rhs_row({{0, row3(0, 0, 1)}})},
    };
}

// Strangeness-free form for alpha = 0.
inline std::vector<ReferenceRow> zero_alpha_rows(Time t) {
    const double n = static_cast<double>(t);
    return {
        {row3(1, n, 1), row3(0, 0, n), rhs_row({{0, row3(0, 1, 0)}})},
        {row3(0, 0, 0), row3(0, n + 1, 0),
         rhs_row({{0, row3(1, 0, 0)}, {1, row3(0, -1, -1)}, {2, row3(0, 0, -1)}})},
        {row3(0, 0, 0), row3(0, 0, n + 1), rhs_row({{0, row3(0, 0, 1)}})},
    };
}

inline RowBlock to_block(const std::vector<ReferenceRow>& rows) {
    RowBlock b{Mat::Zero(static_cast<Index>(rows.size()), 3), Mat(static_cast<Index>(rows.size()), 3),
               Mat(static_cast<Index>(rows.size()), 3), Mat(static_cast<Index>(rows.size()), 0),
               ShiftCombination(0, 3)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b.b.row(static_cast<Index>(i)) = rows[i].b;
        b.c.row(static_cast<Index>(i)) = rows[i].c;
        b.rhs = ShiftCombination::vstack({&b.rhs, &rows[i].rhs});
    }
    return b;
}

template <class Rows>
RowSequence reference_sequence(Rows rows_at, Time n0, Time last) {
    RowSequence s;
    s.n0 = n0;
    for (Time n = n0; n <= last; ++n) s.blocks.push_back(to_block(rows_at(n)));
    return s;
}

inline double row_gap(const RowBlock& actual, Index i, const ReferenceRow& ref, double sign) {
    double gap = (actual.a.row(i)).cwiseAbs().maxCoeff();
    gap = std::max(gap, (actual.b.row(i) - sign * ref.b).cwiseAbs().maxCoeff());
    gap = std::max(gap, (actual.c.row(i) - sign * ref.c).cwiseAbs().maxCoeff());
    int hi = std::max(actual.rhs.max_offset(), ref.rhs.max_offset());
    for (int k = 0; k <= hi; ++k)
        gap = std::max(gap, (actual.rhs.coefficient(k).row(i) - sign * ref.rhs.coefficient(k)).cwiseAbs().maxCoeff());
    return gap;
}

// Largest entry mismatch, rows compared in order.
inline double ordered_gap(const RowBlock& actual, const std::vector<ReferenceRow>& ref) {
    if (actual.rows() != static_cast<Index>(ref.size())) return 1e300;
    double gap = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) gap = std::max(gap, row_gap(actual, static_cast<Index>(i), ref[i], 1.0));
    return gap;
}

// Largest entry mismatch after matching each reference row to a distinct
// actual row up to sign.
inline double permuted_gap(const RowBlock& actual, const std::vector<ReferenceRow>& ref) {
    if (actual.rows() != static_cast<Index>(ref.size())) return 1e300;
    std::vector<bool> used(ref.size(), false);
    double gap = 0.0;
    for (const auto& r : ref) {
        double best = 1e300;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            if (used[i]) continue;
            for (double sgn : {1.0, -1.0}) {
                const double g = row_gap(actual, static_cast<Index>(i), r, sgn);
                if (g < best) {
                    best = g;
                    pick = i;
                }
            }
        }
        used[pick] = true;
        gap = std::max(gap, best);
    }
    return gap;
}

} // namespace side::testing
