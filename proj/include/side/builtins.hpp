#pragma once

// Named parametric systems used by the examples, tests and the CLI.

#include <cmath>
#include <string>

#include "side/system.hpp"

namespace side {

// Smooth, non-polynomial data so that shifted components are distinguishable.
inline RhsFunction default_rhs(Index m) {
    return [m](Time n) {
        Vec f(m);
        for (Index i = 0; i < m; ++i)
            f(i) = std::sin(0.7 * static_cast<double>(n) + 1.3 * static_cast<double>(i)) +
                   0.25 * std::cos(0.31 * static_cast<double>(n) * static_cast<double>(i + 1));
        return f;
    };
}

inline InputFunction default_input(Index p) {
    return [p](Time n) {
        Vec u(p);
        for (Index j = 0; j < p; ++j)
            u(j) = std::cos(0.45 * static_cast<double>(n) + 0.9 * static_cast<double>(j)) + 0.1;
        return u;
    };
}

inline RhsFunction zero_rhs(Index m) {
    return [m](Time) { return Vec(Vec::Zero(m)); };
}

//   [1 n+1 n+4]           [0 alpha 2n+3]           [0 n+1 0  ]
//   [0 0   0  ] x(n+2)  + [1 n     1   ] x(n+1)  + [0 0   n  ] x(n) = f(n)
//   [0 0   0  ]           [0 0     0   ]           [0 0   n+1]
inline SecondOrderSystem example_3_10(double alpha, Time n0 = 0, Index window = 16, RhsFunction f = {}) {
    if (!f) f = default_rhs(3);
    CoefficientProvider provider = [alpha, f](Time t) {
        const double n = static_cast<double>(t);
        Coefficients c;
        c.a = Mat::Zero(3, 3);
        c.a.row(0) << 1, n + 1, n + 4;
        c.b = Mat::Zero(3, 3);
        c.b.row(0) << 0, alpha, 2 * n + 3;
        c.b.row(1) << 1, n, 1;
        c.c = Mat::Zero(3, 3);
        c.c.row(0) << 0, n + 1, 0;
        c.c.row(1) << 0, 0, n;
        c.c.row(2) << 0, 0, n + 1;
        c.d = Mat::Zero(3, 0);
        c.f = f(t);
        return c;
    };
    return {3, 3, 0, n0, window, std::move(provider)};
}

//   [1 0]           [1 0]           [0 1]        [1]
//   [0 0] x(n+2)  + [0 0] x(n+1)  + [1 0] x(n) - [1] u(n) = f(n)
inline SecondOrderSystem example_1_4(Time n0 = 0, Index window = 24, RhsFunction f = {}) {
    if (!f) f = default_rhs(2);
    CoefficientProvider provider = [f](Time t) {
        Coefficients c;
        c.a = Mat::Zero(2, 2);
        c.a(0, 0) = 1;
        c.b = c.a;
        c.c = Mat::Zero(2, 2);
        c.c(0, 1) = 1;
        c.c(1, 0) = 1;
        c.d = Mat(2, 1);
        c.d << -1, -1;
        c.f = f(t);
        return c;
    };
    return {2, 2, 1, n0, window, std::move(provider)};
}

enum class DampingScheme { central, forward, backward };

inline DampingScheme parse_scheme(const std::string& s) {
    if (s == "central") return DampingScheme::central;
    if (s == "forward") return DampingScheme::forward;
    if (s == "backward") return DampingScheme::backward;
    throw InputError("unknown damping scheme '" + s + "' (expected central, forward or backward)");
}

inline const char* scheme_name(DampingScheme s) {
    switch (s) {
    case DampingScheme::central: return "central";
    case DampingScheme::forward: return "forward";
    case DampingScheme::backward: return "backward";
    }
    return "central";
}

// Constrained mechanical system M q'' + G q' + K q + H^T lambda = B u,
// H q = 0, discretized at the midpoint n+1 with step h. The input is
// relabelled so that the equation at n reads the input value u(n).
struct RobotArm {
    double h = 0.01;
    Mat m0 = Mat::Ones(1, 1);
    Mat g0 = Mat::Ones(1, 1);
    Mat k0 = Mat::Ones(1, 1);
    Mat h0 = Mat::Ones(1, 1);
    Mat b0 = Mat::Ones(1, 1);
    DampingScheme scheme = DampingScheme::central;
};

inline SecondOrderSystem robot_arm(const RobotArm& arm, Time n0 = 0, Index window = 16, RhsFunction f = {}) {
    const Index k = arm.m0.rows();
    const Index c = arm.h0.rows();
    const Index p = arm.b0.cols();
    if (arm.m0.cols() != k || arm.g0.rows() != k || arm.g0.cols() != k || arm.k0.rows() != k ||
        arm.k0.cols() != k || arm.h0.cols() != k || arm.b0.rows() != k)
        throw InputError("robot_arm: inconsistent parameter shapes");
    if (!(arm.h > 0)) throw InputError("robot_arm: step size h must be positive");
    const Index d = k + c;
    const double h = arm.h;
    const Mat mh = arm.m0 / (h * h);
    Mat ga = Mat::Zero(k, k), gb = Mat::Zero(k, k), gc = Mat::Zero(k, k);
    switch (arm.scheme) {
    case DampingScheme::central:
        ga = arm.g0 / (2 * h);
        gc = -arm.g0 / (2 * h);
        break;
    case DampingScheme::forward:
        ga = arm.g0 / h;
        gb = -arm.g0 / h;
        break;
    case DampingScheme::backward:
        gb = arm.g0 / h;
        gc = -arm.g0 / h;
        break;
    }
    Coefficients base;
    base.a = Mat::Zero(d, d);
    base.a.topLeftCorner(k, k) = mh + ga;
    base.b = Mat::Zero(d, d);
    base.b.topLeftCorner(k, k) = -2 * mh + arm.k0 + gb;
    base.b.topRightCorner(k, c) = arm.h0.transpose();
    base.b.bottomLeftCorner(c, k) = arm.h0;
    base.c = Mat::Zero(d, d);
    base.c.topLeftCorner(k, k) = mh + gc;
    base.d = Mat::Zero(d, p);
    base.d.topRows(k) = -arm.b0;
    if (!f) f = zero_rhs(d);
    CoefficientProvider provider = [base, f](Time t) {
        Coefficients out = base;
        out.f = f(t);
        return out;
    };
    return {d, d, p, n0, window, std::move(provider)};
}

} // namespace side
