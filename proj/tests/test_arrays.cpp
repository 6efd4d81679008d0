#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "support.hpp"

using namespace side;
using namespace side::testing;

TEST(Inflated, BlockLayout) {
    const SecondOrderSystem sys = example_3_10(1.0, 0, 8);
    const InflatedSystem inf = build_inflated(sys, 2, 2);
    EXPECT_EQ(inf.big_m.rows(), 9);
    EXPECT_EQ(inf.big_m.cols(), 15);
    for (Index j = 0; j <= 2; ++j) {
        const Coefficients c = sys.coefficients(2 + j);
        EXPECT_TRUE(inf.big_m.block(3 * j, 3 * j, 3, 3).isApprox(c.c));
        EXPECT_TRUE(inf.big_m.block(3 * j, 3 * (j + 1), 3, 3).isApprox(c.b));
        EXPECT_TRUE(inf.big_m.block(3 * j, 3 * (j + 2), 3, 3).isApprox(c.a));
    }
    EXPECT_EQ(future_columns(inf).cols(), 6);
    EXPECT_THROW(build_inflated(sys, 7, 2), HorizonError);
}

TEST(Inflated, ExtractionAnnihilatesFutureColumns) {
    const InflatedSystem inf = build_inflated(example_3_10(0.0, 0, 8), 1, 2);
    const ArrayExtraction ex = extract_candidate(inf);
    EXPECT_LT((ex.u1.transpose() * future_columns(inf)).norm(), 1e-10);
    EXPECT_LT((ex.u1.transpose() * ex.u1 - Mat::Identity(ex.u1.cols(), ex.u1.cols())).norm(), 1e-12);
}

TEST(ShiftIndex, LevelMapping) {
    EXPECT_EQ(shift_index(0), 0);
    EXPECT_EQ(shift_index(1), 1);
    EXPECT_EQ(shift_index(2), 1);
    EXPECT_EQ(shift_index(3), 2);
}

TEST(Algorithm2, ThreeByThreeExample) {
    for (double alpha : {0.0, 1.0}) {
        const SecondOrderSystem sys = example_3_10(alpha, 0, 16);
        const Algorithm2Result r = algorithm2(sys);
        EXPECT_EQ(r.nu, 1);
        for (const RankCertificate& c : r.certificates) EXPECT_TRUE(c.holds());
        const RhsFunction f = sys.rhs_function();
        const RowSequence ref = alpha == 0.0 ? reference_sequence(zero_alpha_rows, 0, 8)
                                             : reference_sequence([alpha](Time n) { return first_step_rows(alpha, n); }, 0, 8);
        const SetComparison c = same_solution_set({r.extracted, f, 8}, {ref, f, 8}, 8);
        EXPECT_TRUE(c.equal) << "alpha " << alpha << ": " << c.reason;
    }
}

TEST(Algorithm2, RobotArmStopsAtSecondLevel) {
    for (DampingScheme s : {DampingScheme::central, DampingScheme::forward, DampingScheme::backward}) {
        side::RobotArm arm;
        arm.scheme = s;
        const SecondOrderSystem sys = robot_arm(arm);
        const Algorithm2Result r = algorithm2(sys);
        EXPECT_EQ(r.level, 1) << scheme_name(s);
        EXPECT_EQ(r.nu, 1) << scheme_name(s);
        const InputFunction u = default_input(1);
        const RhsFunction f = sys.rhs_function();
        const Time t = r.extracted.last();
        EXPECT_TRUE(same_solution_set({sample(sys), f, sys.last()}, {r.extracted, f, t}, t, {}, u).equal);
    }
}

TEST(Algorithm2, RegularSystemNeedsNoShift) {
    CoefficientProvider p = [](Time n) {
        Coefficients c;
        c.a = Mat::Identity(2, 2);
        c.b = Mat::Constant(2, 2, 0.3);
        c.c = Mat::Identity(2, 2) * (1.0 + 0.1 * static_cast<double>(n));
        c.f = default_rhs(2)(n);
        return c;
    };
    const Algorithm2Result r = algorithm2(SecondOrderSystem(2, 2, 0, 0, 8, p));
    EXPECT_EQ(r.level, 0);
    EXPECT_EQ(r.nu, 0);
}

TEST(Algorithm2, LevelCapIsASolvabilityError) {
    EXPECT_THROW(algorithm2(example_3_10(0.0, 0, 16), {}, 1), SolvabilityError);
}

TEST(Algorithm2, ShortWindowIsAHorizonError) {
    EXPECT_THROW(algorithm2(example_3_10(0.0, 0, 3)), HorizonError);
}
