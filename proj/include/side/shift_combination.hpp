#pragma once

#include <functional>
#include <map>

#include "side/linalg.hpp"

namespace side {

using Time = long long;

// Evaluates the original inhomogeneity f(n).
using RhsFunction = std::function<Vec(Time)>;

// A right-hand side expressed through shifts of the original inhomogeneity:
//   g(n) = sum_k coeff_k * f(n + k),  k >= 0.
// Each coefficient is rows x source_dim. Terms with identical offsets are
// merged, so offsets are distinct by construction.
class ShiftCombination {
public:
    ShiftCombination() = default;
    ShiftCombination(Index rows, Index source_dim) : rows_(rows), source_dim_(source_dim) {}

    static ShiftCombination identity(Index m) {
        ShiftCombination s(m, m);
        s.add_term(0, Mat::Identity(m, m));
        return s;
    }

    Index rows() const { return rows_; }
    Index source_dim() const { return source_dim_; }
    const std::map<int, Mat>& terms() const { return terms_; }

    void add_term(int offset, const Mat& coeff) {
        if (offset < 0) throw InputError("ShiftCombination: negative offset");
        if (coeff.rows() != rows_ || coeff.cols() != source_dim_)
            throw InputError("ShiftCombination: coefficient shape mismatch");
        if (coeff.size() == 0 || coeff.isZero(0.0)) return;
        auto [it, inserted] = terms_.try_emplace(offset, coeff);
        if (!inserted) it->second += coeff;
    }

    // Coefficient of f(n + offset); zero when absent.
    Mat coefficient(int offset) const {
        auto it = terms_.find(offset);
        return it == terms_.end() ? Mat::Zero(rows_, source_dim_) : it->second;
    }

    // Advances every offset by k (the equation at n + k read from time n).
    ShiftCombination shifted(int k) const {
        ShiftCombination out(rows_, source_dim_);
        for (const auto& [off, c] : terms_) out.add_term(off + k, c);
        return out;
    }

    ShiftCombination block(Index start, Index count) const {
        ShiftCombination out(count, source_dim_);
        for (const auto& [off, c] : terms_) out.add_term(off, c.middleRows(start, count));
        return out;
    }

    // Largest offset whose coefficient exceeds threshold in magnitude; -1 when
    // the combination is identically zero.
    int max_offset(double threshold = 0.0) const {
        int best = -1;
        for (const auto& [off, c] : terms_)
            if (c.size() && c.cwiseAbs().maxCoeff() > threshold) best = std::max(best, off);
        return best;
    }

    Vec evaluate(const RhsFunction& f, Time n) const {
        Vec out = Vec::Zero(rows_);
        for (const auto& [off, c] : terms_) out.noalias() += c * f(n + off);
        return out;
    }

    friend ShiftCombination operator*(const Mat& s, const ShiftCombination& g) {
        if (s.cols() != g.rows_) throw InputError("ShiftCombination: scaling shape mismatch");
        ShiftCombination out(s.rows(), g.source_dim_);
        for (const auto& [off, c] : g.terms_) out.add_term(off, s * c);
        return out;
    }

    friend ShiftCombination operator+(const ShiftCombination& a, const ShiftCombination& b) {
        if (a.rows_ != b.rows_ || a.source_dim_ != b.source_dim_)
            throw InputError("ShiftCombination: sum shape mismatch");
        ShiftCombination out = a;
        for (const auto& [off, c] : b.terms_) out.add_term(off, c);
        return out;
    }

    friend ShiftCombination operator-(const ShiftCombination& a, const ShiftCombination& b) {
        return a + (Mat(-Mat::Identity(b.rows_, b.rows_)) * b);
    }

    static ShiftCombination vstack(std::initializer_list<const ShiftCombination*> parts) {
        Index rows = 0;
        Index dim = -1;
        for (const auto* p : parts) {
            if (dim < 0) dim = p->source_dim_;
            if (p->source_dim_ != dim) throw InputError("ShiftCombination: stacking mismatch");
            rows += p->rows_;
        }
        ShiftCombination out(rows, std::max<Index>(dim, 0));
        std::map<int, Mat> acc;
        Index at = 0;
        for (const auto* p : parts) {
            for (const auto& [off, c] : p->terms_) {
                auto [it, inserted] = acc.try_emplace(off, Mat::Zero(rows, out.source_dim_));
                it->second.middleRows(at, p->rows_) = c;
            }
            at += p->rows_;
        }
        for (const auto& [off, c] : acc) out.add_term(off, c);
        return out;
    }

private:
    Index rows_ = 0;
    Index source_dim_ = 0;
    std::map<int, Mat> terms_;
};

} // namespace side
