#pragma once

// Rank decisions and the dense factorization primitives used throughout the
// library. Everything here is a pure function of its arguments; all orthogonal
// bases come from a single SVD per call.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "side/error.hpp"

namespace side {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Singular values above max(relative * sigma_max, absolute) count towards
// the rank. An unset relative threshold means max(rows, cols) * eps of the
// matrix being decided.
struct RankTolerance {
    std::optional<double> relative;
    double absolute = 0.0;

    double threshold(double sigma_max, Index rows, Index cols) const {
        const double rel = relative
            ? *relative
            : static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
        return std::max(rel * sigma_max, absolute);
    }

    // Freezes the threshold against a reference scale so that decisions on
    // sub-blocks are made relative to the enclosing matrix, not to the
    // (possibly round-off sized) sub-block itself.
    RankTolerance anchored(double sigma_max, Index rows, Index cols) const {
        return RankTolerance{0.0, threshold(sigma_max, rows, cols)};
    }

    RankTolerance anchored(const Mat& reference) const;
};

struct Svd {
    Mat u;      // rows x rows
    Vec sigma;  // min(rows, cols), descending
    Mat v;      // cols x cols
};

inline Svd full_svd(const Mat& m) {
    Svd out;
    if (m.rows() == 0 || m.cols() == 0) {
        out.u = Mat::Identity(m.rows(), m.rows());
        out.v = Mat::Identity(m.cols(), m.cols());
        out.sigma = Vec::Zero(0);
        return out;
    }
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.sigma = svd.singularValues();
    return out;
}

inline Vec singular_values(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return Vec::Zero(0);
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues();
}

inline double sigma_max(const Mat& m) {
    const Vec s = singular_values(m);
    return s.size() ? s(0) : 0.0;
}

inline double sigma_min(const Mat& m) {
    const Vec s = singular_values(m);
    return s.size() ? s(s.size() - 1) : 0.0;
}

inline RankTolerance RankTolerance::anchored(const Mat& reference) const {
    return anchored(sigma_max(reference), reference.rows(), reference.cols());
}

inline Index count_above(const Vec& sigma, double thr) {
    Index r = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma(i) > thr) ++r;
    return r;
}

inline Index numerical_rank(const Mat& m, const RankTolerance& tol = {}) {
    const Vec s = singular_values(m);
    if (s.size() == 0) return 0;
    return count_above(s, tol.threshold(s(0), m.rows(), m.cols()));
}

// Flips each column so that its entry of largest magnitude is positive. Bases
// are otherwise only defined up to sign, and reports should be reproducible.
inline void normalize_column_signs(Mat& basis) {
    for (Index j = 0; j < basis.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < basis.rows(); ++i) {
            const double a = std::abs(basis(i, j));
            if (a > best * (1.0 + 1e-12)) {
                best = a;
                arg = i;
            }
        }
        if (basis.rows() > 0 && basis(arg, j) < 0.0) basis.col(j) *= -1.0;
    }
}

struct Compression {
    Mat t_perp;  // orthonormal columns spanning range(M)
    Mat t_zero;  // orthonormal columns spanning the left null space of M
    Index rank = 0;
};

// [t_perp t_zero] is orthogonal, t_zero^T M = 0 and t_perp^T M has full row
// rank. Full-rank and zero matrices get identity bases so that already
// compressed rows pass through unchanged.
inline Compression compress(const Mat& m, const RankTolerance& tol = {}) {
    const Index rows = m.rows();
    Compression c;
    if (rows == 0) {
        c.t_perp = Mat(0, 0);
        c.t_zero = Mat(0, 0);
        return c;
    }
    const Svd svd = full_svd(m);
    const double smax = svd.sigma.size() ? svd.sigma(0) : 0.0;
    c.rank = count_above(svd.sigma, tol.threshold(smax, rows, m.cols()));
    if (c.rank == rows) {
        c.t_perp = Mat::Identity(rows, rows);
        c.t_zero = Mat(rows, 0);
    } else if (c.rank == 0) {
        c.t_perp = Mat(rows, 0);
        c.t_zero = Mat::Identity(rows, rows);
    } else {
        c.t_perp = svd.u.leftCols(c.rank);
        c.t_zero = svd.u.rightCols(rows - c.rank);
        normalize_column_signs(c.t_perp);
        normalize_column_signs(c.t_zero);
    }
    return c;
}

// Orthonormal basis (columns) of the right null space of m.
inline Mat null_space(const Mat& m, const RankTolerance& tol = {}) {
    const Index cols = m.cols();
    if (m.rows() == 0) return Mat::Identity(cols, cols);
    const Svd svd = full_svd(m);
    const double smax = svd.sigma.size() ? svd.sigma(0) : 0.0;
    const Index r = count_above(svd.sigma, tol.threshold(smax, m.rows(), cols));
    if (r == 0) return Mat::Identity(cols, cols);
    Mat n = svd.v.rightCols(cols - r);
    normalize_column_signs(n);
    return n;
}

// Moore-Penrose pseudo-inverse at the given rank tolerance.
inline Mat pseudo_inverse(const Mat& m, const RankTolerance& tol = {}) {
    if (m.rows() == 0 || m.cols() == 0) return Mat::Zero(m.cols(), m.rows());
    const Svd svd = full_svd(m);
    const Index r = count_above(svd.sigma, tol.threshold(svd.sigma(0), m.rows(), m.cols()));
    Mat out = Mat::Zero(m.cols(), m.rows());
    for (Index i = 0; i < r; ++i)
        out.noalias() += svd.v.col(i) * (svd.u.col(i).transpose() / svd.sigma(i));
    return out;
}

inline Mat vstack(std::initializer_list<const Mat*> parts) {
    Index rows = 0;
    Index cols = -1;
    for (const Mat* p : parts) {
        if (cols < 0) cols = p->cols();
        if (p->cols() != cols) throw InputError("vstack: column count mismatch");
        rows += p->rows();
    }
    Mat out(rows, std::max<Index>(cols, 0));
    Index at = 0;
    for (const Mat* p : parts) {
        out.middleRows(at, p->rows()) = *p;
        at += p->rows();
    }
    return out;
}

inline Mat vstack(const Mat& a, const Mat& b) { return vstack({&a, &b}); }
inline Mat vstack(const Mat& a, const Mat& b, const Mat& c) { return vstack({&a, &b, &c}); }

inline Mat hstack(std::initializer_list<const Mat*> parts) {
    Index cols = 0;
    Index rows = -1;
    for (const Mat* p : parts) {
        if (rows < 0) rows = p->rows();
        if (p->rows() != rows) throw InputError("hstack: row count mismatch");
        cols += p->cols();
    }
    Mat out(std::max<Index>(rows, 0), cols);
    Index at = 0;
    for (const Mat* p : parts) {
        out.middleCols(at, p->cols()) = *p;
        at += p->cols();
    }
    return out;
}

inline Mat hstack(const Mat& a, const Mat& b) { return hstack({&a, &b}); }
inline Mat hstack(const Mat& a, const Mat& b, const Mat& c) { return hstack({&a, &b, &c}); }

// Spectral norm; zero for empty matrices.
inline double norm2(const Mat& m) { return sigma_max(m); }

inline bool has_full_row_rank(const Mat& m, const RankTolerance& tol = {}) {
    return numerical_rank(m, tol) == m.rows();
}

// True iff rank([q; p]) < rank(q) + rank(p), i.e. the row spaces intersect
// non-trivially. All three ranks share one threshold anchored at the stack.
inline bool has_hidden_redundancy(const Mat& q, const Mat& p, const RankTolerance& tol = {}) {
    if (q.cols() != p.cols())
        throw InputError("has_hidden_redundancy: column count mismatch");
    const Mat stacked = vstack(q, p);
    const RankTolerance t = tol.anchored(stacked);
    return numerical_rank(stacked, t) < numerical_rank(q, t) + numerical_rank(p, t);
}

struct RedundancyRemoval {
    Mat s;   // (r_pq - r_q) x rows(P)
    Mat z1;  // (rows(P) - r_pq + r_q) x rows(P)
    Mat z2;  // (rows(P) - r_pq + r_q) x rows(Q)
    Index r_q = 0;
    Index r_pq = 0;
};

// Splits the rows of P into a part S P that is independent of Q and a part
// Z1 P that Q reproduces: Z1 P + Z2 Q = 0. [S; Z1] is orthogonal.
inline RedundancyRemoval remove_redundancy(const Mat& p, const Mat& q, const RankTolerance& tol = {}) {
    if (p.cols() != q.cols())
        throw InputError("remove_redundancy: column count mismatch");
    const RankTolerance t = tol.anchored(vstack(p, q));

    RedundancyRemoval out;
    out.r_q = numerical_rank(q, t);
    out.r_pq = numerical_rank(vstack(p, q), t);
    // y^T P lies in row(Q) iff y^T P V = 0 for V spanning row(Q)'s complement.
    // The count comes from the stacked rank; the projection only supplies the
    // basis, since its small singular values carry an error ~ 1/sigma_min(Q).
    const Index rows = p.rows();
    const Index keep = std::clamp<Index>(out.r_pq - out.r_q, 0, rows);
    Mat tp, tz;
    if (keep == rows) {
        tp = Mat::Identity(rows, rows);
        tz = Mat(rows, 0);
    } else if (keep == 0) {
        tp = Mat(rows, 0);
        tz = Mat::Identity(rows, rows);
    } else {
        const Svd svd = full_svd(Mat(p * null_space(q, t)));
        tp = svd.u.leftCols(keep);
        tz = svd.u.rightCols(rows - keep);
        normalize_column_signs(tp);
        normalize_column_signs(tz);
    }
    out.s = tp.transpose();
    out.z1 = tz.transpose();
    if (out.z1.rows() == 0) {
        out.z2 = Mat(0, q.rows());
    } else {
        out.z2 = -(out.z1 * p) * pseudo_inverse(q, t);
    }
    return out;
}

// F = eta * V_Q [0 I_q; I_{d-q} 0] V_P^T; for large eta the stack
// [P; G + Q F] has full row rank.
inline Mat rank_completion(const Mat& p, const Mat& q, const Mat& g, double eta,
                           const RankTolerance& tol = {}) {
    const Index d = p.cols();
    if (q.cols() != d || g.cols() != d || g.rows() != q.rows())
        throw InputError("rank_completion: shape mismatch");
    const Index pr = p.rows();
    const Index qr = q.rows();
    if (pr + qr > d)
        throw InputError("rank_completion: rows(P) + rows(Q) exceeds the column count");
    if (!has_full_row_rank(p, tol) || !has_full_row_rank(q, tol))
        throw InputError("rank_completion: P and Q must have full row rank");

    const Mat vp = full_svd(p).v;
    const Mat vq = full_svd(q).v;
    Mat swap = Mat::Zero(d, d);
    swap.topRightCorner(qr, qr).setIdentity();
    swap.bottomLeftCorner(d - qr, d - qr).setIdentity();
    return eta * vq * swap * vp.transpose();
}

struct CompletedRank {
    Mat f;
    double eta = 0.0;
};

// Escalates eta = 1, 10, 100, ... until [P; G + Q F] has full row rank at
// the tolerance; gives up past 1e8.
inline CompletedRank complete_rank(const Mat& p, const Mat& q, const Mat& g,
                                   const RankTolerance& tol = {}) {
    for (double eta = 1.0; eta <= 1e8 * (1.0 + 1e-9); eta *= 10.0) {
        Mat f = rank_completion(p, q, g, eta, tol);
        const Mat stacked = vstack(p, Mat(g + q * f));
        if (has_full_row_rank(stacked, tol)) return {std::move(f), eta};
    }
    throw NumericalError("rank completion: gain escalation reached 1e8 without full row rank");
}

} // namespace side
