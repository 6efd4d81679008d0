#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "side/arrays.hpp"
#include "side/builtins.hpp"
#include "side/oracle.hpp"

namespace side::testing {

inline RowSequence rows_of(const FormSequence& fs) {
    RowSequence s;
    s.n0 = fs.n0;
    for (const auto& f : fs.forms) s.blocks.push_back(f.rows);
    return s;
}

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Smooth time-varying matrix I + (scale / k) * sin(w n + phase), entrywise.
struct Wobble {
    Mat w, phase;
    double scale = 0.5;

    Wobble(Index k, std::mt19937& rng, double s = 0.5) : w(k, k), phase(k, k), scale(s) {
        std::uniform_real_distribution<double> u(0.1, 1.3), ph(0.0, 6.283);
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j) {
                w(i, j) = u(rng);
                phase(i, j) = ph(rng);
            }
    }

    Mat at(Time n) const {
        const Index k = w.rows();
        Mat m = Mat::Identity(k, k);
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j)
                m(i, j) += scale / static_cast<double>(k) * std::sin(w(i, j) * static_cast<double>(n) + phase(i, j));
        return m;
    }
};

inline double sgn_of(double x) { return x < 0 ? -1.0 : 1.0; }

enum class RowKind { second, first, algebraic, hidden1, hidden2, hidden_chain };

// A structured square system in coordinates y, one row per component, with
// rows whose leading part repeats an algebraic (or hidden algebraic)
// component; it is then disguised by x = T_n^{-1} y and left scaling P_n.
struct RandomSystem {
    Index d = 0;
    Index p = 0;
    std::vector<RowKind> kinds;
    Mat a, b, c, dm;  // template rows in y coordinates
};

inline RandomSystem random_template(std::mt19937& rng, Index max_dim = 8, Index inputs = 0) {
    std::uniform_int_distribution<int> dim(2, static_cast<int>(max_dim));
    std::uniform_real_distribution<double> coef(0.5, 1.5), small(-0.5, 0.5);
    std::bernoulli_distribution coin(0.5);
    RandomSystem t;
    t.d = dim(rng);
    t.p = inputs;
    const Index d = t.d;
    t.a = Mat::Zero(d, d);
    t.b = Mat::Zero(d, d);
    t.c = Mat::Zero(d, d);
    t.dm = Mat::Zero(d, inputs);
    std::vector<Index> algebraic, hidden;
    for (Index k = 0; k < d; ++k) {
        std::vector<RowKind> options = {RowKind::second, RowKind::first, RowKind::algebraic};
        if (!algebraic.empty()) {
            options.push_back(RowKind::hidden1);
            options.push_back(RowKind::hidden2);
        }
        if (!hidden.empty()) options.push_back(RowKind::hidden_chain);
        const RowKind kind = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
        t.kinds.push_back(kind);
        auto pick = [&](const std::vector<Index>& from) {
            return from[std::uniform_int_distribution<std::size_t>(0, from.size() - 1)(rng)];
        };
        const double sgn = coin(rng) ? 1.0 : -1.0;
        switch (kind) {
        case RowKind::second:
            t.a(k, k) = coef(rng);
            t.b(k, k) = small(rng);
            t.c(k, k) = small(rng);
            break;
        case RowKind::first:
            t.b(k, k) = coef(rng);
            t.c(k, k) = small(rng);
            break;
        case RowKind::algebraic:
            t.c(k, k) = sgn * coef(rng);
            algebraic.push_back(k);
            break;
        case RowKind::hidden1:
            t.b(k, pick(algebraic)) = coef(rng);
            t.c(k, k) = sgn * coef(rng);
            hidden.push_back(k);
            break;
        case RowKind::hidden2:
            t.a(k, pick(algebraic)) = coef(rng);
            t.b(k, k) = coef(rng);
            t.c(k, k) = small(rng);
            break;
        case RowKind::hidden_chain:
            t.a(k, pick(hidden)) = coef(rng);
            t.c(k, k) = sgn * coef(rng);
            break;
        }
        // Lower-triangular coupling through x(n) only keeps the structure.
        for (Index l = 0; l < k; ++l)
            if (coin(rng)) t.c(k, l) = small(rng);
    }
    if (inputs > 0) {
        std::vector<Index> rows;
        for (Index k = 0; k < d; ++k)
            if (t.kinds[static_cast<std::size_t>(k)] == RowKind::algebraic ||
                t.kinds[static_cast<std::size_t>(k)] == RowKind::first)
                rows.push_back(k);
        if (rows.empty()) rows.push_back(d - 1);
        for (Index j = 0; j < inputs; ++j) {
            const Index r = rows[static_cast<std::size_t>(j) % rows.size()];
            t.dm(r, j) = sgn_of(small(rng)) * coef(rng);
        }
    }
    return t;
}

inline SecondOrderSystem disguise(const RandomSystem& t, std::mt19937& rng, Index window = 12, Time n0 = 0) {
    const Wobble left(t.d, rng), right(t.d, rng);
    const Mat a = t.a, b = t.b, c = t.c, dm = t.dm;
    const Index d = t.d, p = t.p;
    const RhsFunction f = default_rhs(d);
    CoefficientProvider provider = [=](Time n) {
        const Mat pn = left.at(n);
        Coefficients k;
        k.a = pn * a * right.at(n + 2);
        k.b = pn * b * right.at(n + 1);
        k.c = pn * c * right.at(n);
        k.d = pn * dm;
        k.f = f(n);
        return k;
    };
    return {d, d, p, n0, window, std::move(provider)};
}

inline SecondOrderSystem random_system(unsigned seed, Index inputs = 0, Index window = 12) {
    std::mt19937 rng(seed);
    const RandomSystem t = random_template(rng, 8, inputs);
    return disguise(t, rng, window);
}

} // namespace side::testing
