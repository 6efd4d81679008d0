#include <gtest/gtest.h>

#include "side/descriptor.hpp"
#include "support.hpp"

using namespace side;
using namespace side::testing;

TEST(CondenseDescriptor, OrthogonalTransformsReproduceTheRows) {
    const SecondOrderSystem sys = random_system(1003, 2);
    const RowBlock row = row_block(sys, 4);
    const DescriptorCondensedForm c = condense_descriptor(row);
    const Index m = row.rows(), p = row.inputs();
    EXPECT_LT((c.v * c.v.transpose() - Mat::Identity(p, p)).norm(), 1e-12);
    EXPECT_EQ(c.form.u.rows(), m);
    const RowBlock back = c.rows_in_input_coordinates();
    const Mat lhs = c.form.u * hstack(row.behavior(), row.d);
    EXPECT_LT((lhs - hstack(back.behavior(), back.d)).norm(), 1e-9 * (1.0 + lhs.norm()));
    EXPECT_EQ(c.form.inv.rows(), m);
}

TEST(CondenseDescriptor, InputRowsCarryDiagonalSigma) {
    const DescriptorCondensedForm c = condense_descriptor(row_block(example_1_4(), 0));
    const Invariants& inv = c.form.inv;
    EXPECT_EQ(inv.r2, 1);
    EXPECT_EQ(inv.phi0, 1);
    EXPECT_EQ(inv.phi1, 0);
    EXPECT_EQ(inv.v, 0);
    const Index o5 = inv.upper_rows() + inv.phi1;
    EXPECT_GT(c.form.rows.d(o5, c.inputs() - 1), 0.0);
    EXPECT_NEAR(c.sigma0(0), 1.0, 1e-12);
    EXPECT_TRUE(c.form.rows.a.bottomRows(1).isZero(0.0));
    EXPECT_TRUE(c.form.rows.b.bottomRows(1).isZero(0.0));
}

TEST(Algorithm1Descriptor, InputExampleIsStrangenessFree) {
    const DescriptorResult r = algorithm1_descriptor(example_1_4());
    EXPECT_EQ(r.mu, 0);
    EXPECT_TRUE(certify_descriptor(r.sfd));
    EXPECT_TRUE(descriptor_solvability(r.sfd, example_1_4().rhs_function()).solvable);
}

TEST(Algorithm1Descriptor, RobotArmNeedsOneStep) {
    for (DampingScheme s : {DampingScheme::central, DampingScheme::forward, DampingScheme::backward}) {
        side::RobotArm arm;
        arm.scheme = s;
        const DescriptorResult r = algorithm1_descriptor(robot_arm(arm));
        EXPECT_EQ(r.mu, 1) << scheme_name(s);
        EXPECT_TRUE(certify_descriptor(r.sfd));
    }
}

TEST(Algorithm1Descriptor, SolutionSetForFixedInput) {
    const SecondOrderSystem sys = random_system(1010, 1, 14);
    const InputFunction u = default_input(1);
    const RhsFunction f = sys.rhs_function();
    const DescriptorResult r = algorithm1_descriptor(sys);
    const RowSequence red = r.sfd.rows();
    const SetComparison c = same_solution_set({sample(sys), f, sys.last()}, {red, f, red.last()}, red.last(), {}, u);
    EXPECT_TRUE(c.equal) << c.reason;
}

TEST(Feedback, ClosedLoopOfInputExample) {
    const DescriptorResult r = algorithm1_descriptor(example_1_4());
    const Feedback fb = regularizing_feedback(r.sfd.cond);
    EXPECT_GE(fb.eta, 1.0);
    const Algorithm1Result cl = algorithm1(close_loop(r.sfd.rows(), fb));
    EXPECT_EQ(cl.mu, 0);
    EXPECT_EQ(cl.sfs.inv.v, 0);
    EXPECT_TRUE(certify_strangeness_free(cl.sfs));
}

TEST(Feedback, GainsLiveInTheInputCoordinates) {
    const DescriptorResult r = algorithm1_descriptor(example_1_4());
    const Feedback fb = regularizing_feedback(r.sfd.cond);
    for (Time n = fb.n0; n <= fb.last(); ++n) {
        const std::size_t i = static_cast<std::size_t>(n - fb.n0);
        EXPECT_LT((fb.k1_at(n) - fb.v[i] * fb.f1[i]).norm(), 1e-12);
        EXPECT_LT((fb.k0_at(n) - fb.v[i] * fb.f0[i]).norm(), 1e-12);
    }
}

TEST(Feedback, RandomClosedLoopsAreRegular) {
    for (unsigned s = 1; s <= 20; ++s) {
        const DescriptorResult r = algorithm1_descriptor(random_system(2000 + s, 1 + s % 3));
        const Feedback fb = regularizing_feedback(r.sfd.cond);
        EXPECT_EQ(algorithm1(close_loop(r.sfd.rows(), fb)).mu, 0) << "seed " << s;
    }
}

TEST(DescriptorSolvability, ZeroBehaviorWithInputFreeRows) {
    CoefficientProvider p = [](Time n) {
        Coefficients c;
        c.a = Mat::Zero(2, 2);
        c.b = Mat::Zero(2, 2);
        c.c = Mat::Zero(2, 2);
        c.d = Mat::Zero(2, 1);
        c.f = default_rhs(2)(n);
        return c;
    };
    const SecondOrderSystem sys(2, 2, 1, 0, 6, p);
    const DescriptorResult r = algorithm1_descriptor(sys);
    EXPECT_EQ(r.sfd.inv.v, 2);
    EXPECT_FALSE(descriptor_solvability(r.sfd, sys.rhs_function()).solvable);
}
