#pragma once

// The system model
//     A_n x(n+2) + B_n x(n+1) + C_n x(n) + D_n u(n) = f(n),   n0 <= n <= n0 + N,
// its time-sampled row representation, left scaling and the shift operator.

#include <string>
#include <utility>
#include <vector>

#include "side/shift_combination.hpp"

namespace side {

struct Coefficients {
    Mat a;  // m x d
    Mat b;  // m x d
    Mat c;  // m x d
    Mat d;  // m x p
    Vec f;  // m
};

// Must be safe to call concurrently; returns the data at time n.
using CoefficientProvider = std::function<Coefficients(Time)>;
using InputFunction = std::function<Vec(Time)>;

// One evaluation of the behavior matrix M_n = [A_n B_n C_n].
struct BehaviorRow {
    Mat a;
    Mat b;
    Mat c;

    Mat matrix() const { return hstack(a, b, c); }
};

class SecondOrderSystem {
public:
    SecondOrderSystem(Index m, Index d, Index p, Time n0, Index window, CoefficientProvider provider)
        : m_(m), d_(d), p_(p), n0_(n0), window_(window), provider_(std::move(provider)) {
        if (m < 0 || d < 0 || p < 0) throw InputError("system dimensions must be non-negative");
        if (window < 0) throw InputError("window must be non-negative");
        if (!provider_) throw InputError("system needs a coefficient provider");
    }

    Index m() const { return m_; }
    Index d() const { return d_; }
    Index p() const { return p_; }
    Time n0() const { return n0_; }
    Index window() const { return window_; }
    Time last() const { return n0_ + window_; }

    bool contains(Time n) const { return n >= n0_ && n <= last(); }

    Coefficients coefficients(Time n) const {
        if (n < n0_) throw HorizonError(n, n0_, "time precedes the start of the system");
        if (n > last()) throw HorizonError(n, last(), "coefficient access beyond the window");
        Coefficients c = provider_(n);
        if (c.d.size() == 0 && c.d.rows() == 0) c.d = Mat::Zero(m_, p_);
        check_shape(c.a, m_, d_, "A", n);
        check_shape(c.b, m_, d_, "B", n);
        check_shape(c.c, m_, d_, "C", n);
        check_shape(c.d, m_, p_, "D", n);
        if (c.f.size() != m_)
            throw InputError("f(" + std::to_string(n) + ") has length " + std::to_string(c.f.size()) +
                             ", expected " + std::to_string(m_));
        if (!c.a.allFinite() || !c.b.allFinite() || !c.c.allFinite() || !c.d.allFinite() ||
            !c.f.allFinite())
            throw InputError("non-finite coefficient at n = " + std::to_string(n));
        return c;
    }

    BehaviorRow behavior_row(Time n) const {
        Coefficients c = coefficients(n);
        return {std::move(c.a), std::move(c.b), std::move(c.c)};
    }

    Vec rhs(Time n) const { return coefficients(n).f; }

    RhsFunction rhs_function() const {
        return [sys = *this](Time n) { return sys.rhs(n); };
    }

    const CoefficientProvider& provider() const { return provider_; }

    SecondOrderSystem with_window(Index window) const {
        return {m_, d_, p_, n0_, window, provider_};
    }

private:
    static void check_shape(const Mat& x, Index rows, Index cols, const char* name, Time n) {
        if (x.rows() != rows || x.cols() != cols)
            throw InputError(std::string(name) + "(" + std::to_string(n) + ") is " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols));
    }

    Index m_;
    Index d_;
    Index p_;
    Time n0_;
    Index window_;
    CoefficientProvider provider_;
};

// A group of scalar equations at one time instant,
//     a x(n+2) + b x(n+1) + c x(n) + d u(n) = rhs(n),
// where rhs is carried symbolically in terms of the original f.
struct RowBlock {
    Mat a;
    Mat b;
    Mat c;
    Mat d;
    ShiftCombination rhs;

    Index rows() const { return a.rows(); }
    Index dim() const { return a.cols(); }
    Index inputs() const { return d.cols(); }

    Mat behavior() const { return hstack(a, b, c); }

    static RowBlock empty(Index dim, Index inputs, Index source_dim) {
        return {Mat(0, dim), Mat(0, dim), Mat(0, dim), Mat(0, inputs), ShiftCombination(0, source_dim)};
    }

    RowBlock select(Index start, Index count) const {
        return {a.middleRows(start, count), b.middleRows(start, count), c.middleRows(start, count),
                d.middleRows(start, count), rhs.block(start, count)};
    }

    friend RowBlock operator*(const Mat& s, const RowBlock& r) {
        if (s.cols() != r.rows()) throw InputError("RowBlock: scaling shape mismatch");
        return {s * r.a, s * r.b, s * r.c, s * r.d, s * r.rhs};
    }

    static RowBlock vstack(std::initializer_list<const RowBlock*> parts) {
        Index dim = 0, inputs = 0, src = 0;
        bool first = true;
        Index rows = 0;
        for (const auto* p : parts) {
            if (first) {
                dim = p->dim();
                inputs = p->inputs();
                src = p->rhs.source_dim();
                first = false;
            }
            rows += p->rows();
        }
        RowBlock out{Mat(rows, dim), Mat(rows, dim), Mat(rows, dim), Mat(rows, inputs),
                     ShiftCombination(rows, src)};
        Index at = 0;
        std::vector<const ShiftCombination*> rhs;
        for (const auto* p : parts) {
            if (p->dim() != dim || p->inputs() != inputs)
                throw InputError("RowBlock: stacking shape mismatch");
            out.a.middleRows(at, p->rows()) = p->a;
            out.b.middleRows(at, p->rows()) = p->b;
            out.c.middleRows(at, p->rows()) = p->c;
            out.d.middleRows(at, p->rows()) = p->d;
            at += p->rows();
        }
        // ShiftCombination::vstack takes an initializer_list; accumulate pairwise.
        ShiftCombination acc(0, src);
        for (const auto* p : parts) acc = ShiftCombination::vstack({&acc, &p->rhs});
        out.rhs = std::move(acc);
        return out;
    }

    friend RowBlock operator+(const RowBlock& x, const RowBlock& y) {
        if (x.rows() != y.rows() || x.dim() != y.dim() || x.inputs() != y.inputs())
            throw InputError("RowBlock: sum shape mismatch");
        return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d, x.rhs + y.rhs};
    }

    // Residual a x2 + b x1 + c x0 + d u - rhs(n).
    Vec residual(const Vec& x2, const Vec& x1, const Vec& x0, const Vec& u, const RhsFunction& f,
                 Time n) const {
        Vec r = a * x2 + b * x1 + c * x0 - rhs.evaluate(f, n);
        if (d.cols() > 0) r += d * u;
        return r;
    }
};

// A finite time series of row blocks, one per n in [n0, n0 + size - 1].
struct RowSequence {
    Time n0 = 0;
    std::vector<RowBlock> blocks;

    Time last() const { return n0 + static_cast<Time>(blocks.size()) - 1; }
    bool contains(Time n) const { return n >= n0 && n <= last(); }

    const RowBlock& at(Time n) const {
        if (!contains(n))
            throw HorizonError(n, last(), "row sequence access outside the window");
        return blocks[static_cast<std::size_t>(n - n0)];
    }
};

inline RowBlock row_block(const SecondOrderSystem& sys, Time n) {
    Coefficients c = sys.coefficients(n);
    return {std::move(c.a), std::move(c.b), std::move(c.c), std::move(c.d),
            ShiftCombination::identity(sys.m())};
}

inline RowSequence sample(const SecondOrderSystem& sys) {
    RowSequence seq;
    seq.n0 = sys.n0();
    seq.blocks.reserve(static_cast<std::size_t>(sys.window() + 1));
    for (Time n = sys.n0(); n <= sys.last(); ++n) seq.blocks.push_back(row_block(sys, n));
    return seq;
}

// The shift operator: the equations of `seq` at time n + k, re-read as
// equations indexed by n. Coefficients move k slots towards x(n+2), so the
// shifted row may not reach beyond x(n+2). Equations that act on an input are
// never shifted.
inline RowBlock shift(const RowBlock& src, int k) {
    if (k < 0 || k > 2) throw InputError("shift: offset must be 0, 1 or 2");
    if (k == 0) return src;
    if (src.d.size() > 0 && !src.d.isZero(0.0))
        throw InputError("shift: refusing to shift equations that carry an input");
    if (!src.a.isZero(0.0) || (k == 2 && !src.b.isZero(0.0)))
        throw InputError("shift: equation order too high for the requested shift");
    const Index r = src.rows();
    const Index dim = src.dim();
    RowBlock out{Mat::Zero(r, dim), Mat::Zero(r, dim), Mat::Zero(r, dim), Mat::Zero(r, src.inputs()),
                 src.rhs.shifted(k)};
    if (k == 1) {
        out.a = src.b;
        out.b = src.c;
    } else {
        out.a = src.c;
    }
    return out;
}

inline RowBlock shift(const RowSequence& seq, Time n, int k) { return shift(seq.at(n + k), k); }

// Left equivalence: every equation at time n is scaled by the nonsingular P_n.
inline SecondOrderSystem scale_left(const SecondOrderSystem& sys, std::function<Mat(Time)> scaling,
                                    const RankTolerance& tol = {}) {
    for (Time n = sys.n0(); n <= sys.last(); ++n) {
        const Mat p = scaling(n);
        if (p.rows() != sys.m() || p.cols() != sys.m())
            throw InputError("scale_left: P_n must be m x m");
        const Vec s = singular_values(p);
        if (s.size() == 0) continue;
        if (s(s.size() - 1) <= tol.threshold(s(0), p.rows(), p.cols()))
            throw InputError("scale_left: P_" + std::to_string(n) + " is singular");
    }
    auto inner = sys.provider();
    CoefficientProvider provider = [inner, scaling](Time n) {
        Coefficients c = inner(n);
        const Mat p = scaling(n);
        c.a = p * c.a;
        c.b = p * c.b;
        c.c = p * c.c;
        if (c.d.size() > 0) c.d = p * c.d;
        c.f = p * c.f;
        return c;
    };
    return {sys.m(), sys.d(), sys.p(), sys.n0(), sys.window(), std::move(provider)};
}

// Substitutes a known input sequence: f(n) - D_n u(n) becomes the new
// right-hand side of an input-free system.
inline SecondOrderSystem fold_input(const SecondOrderSystem& sys, InputFunction u) {
    auto inner = sys.provider();
    const Index m = sys.m();
    const Index p = sys.p();
    CoefficientProvider provider = [inner, u, m, p](Time n) {
        Coefficients c = inner(n);
        if (p > 0) {
            const Vec un = u(n);
            if (un.size() != p) throw InputError("input u(" + std::to_string(n) + ") has wrong length");
            c.f -= c.d * un;
        }
        c.d = Mat::Zero(m, 0);
        return c;
    };
    return {m, sys.d(), 0, sys.n0(), sys.window(), std::move(provider)};
}

// Replaces the inputs by a feedback u(n) = K1_n x(n+1) + K0_n x(n).
inline SecondOrderSystem close_loop(const SecondOrderSystem& sys, std::function<Mat(Time)> k1,
                                    std::function<Mat(Time)> k0, Index window) {
    auto inner = sys.provider();
    const Index m = sys.m();
    CoefficientProvider provider = [inner, k1, k0, m](Time n) {
        Coefficients c = inner(n);
        c.b += c.d * k1(n);
        c.c += c.d * k0(n);
        c.d = Mat::Zero(m, 0);
        return c;
    };
    return {m, sys.d(), 0, sys.n0(), window, std::move(provider)};
}

} // namespace side
