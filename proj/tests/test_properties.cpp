#include <gtest/gtest.h>

#include "side/descriptor.hpp"
#include "support.hpp"

using namespace side;
using namespace side::testing;

namespace {

constexpr unsigned kSeeds = 100;
constexpr Index kWindow = 12;

} // namespace

TEST(Property, UpperRankDropsByAtLeastRemovedRows) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const Algorithm1Result r = algorithm1(random_system(s, 0, kWindow));
        ASSERT_EQ(r.invariants.size(), r.steps.size() + 1);
        for (std::size_t k = 0; k < r.steps.size(); ++k) {
            const ReductionStep& st = r.steps[k];
            EXPECT_GT(st.s1 + st.s2, 0) << "seed " << s;
            EXPECT_LE(r.invariants[k + 1].upper_rank(), r.invariants[k].upper_rank() - (st.s1 + st.s2))
                << "seed " << s << " step " << st.index;
        }
    }
}

TEST(Property, StackedCertificateAtTermination) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const Algorithm1Result r = algorithm1(random_system(s, 0, kWindow));
        for (Time n = r.sfs.n0(); n <= r.sfs.certified_last(); ++n) {
            const Mat lead = r.sfs.stacked_leading(n);
            EXPECT_EQ(numerical_rank(lead), lead.rows()) << "seed " << s << " n " << n;
        }
    }
}

TEST(Property, ReducedSystemHasTheSameSolutions) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const SecondOrderSystem sys = random_system(s, 0, kWindow);
        const RhsFunction f = sys.rhs_function();
        const Algorithm1Result r = algorithm1(sys);
        const RowSequence red = rows_of(r.sfs.forms);
        const SetComparison c = same_solution_set({sample(sys), f, sys.last()}, {red, f, red.last()}, red.last());
        EXPECT_TRUE(c.equal) << "seed " << s << ": " << c.reason;
    }
}

TEST(Property, LeftScalingLeavesIndexAndInvariants) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const SecondOrderSystem sys = random_system(s, 0, kWindow);
        std::mt19937 rng(5000 + s);
        const Wobble p(sys.m(), rng);
        const SecondOrderSystem scaled = scale_left(sys, [p](Time n) { return p.at(n); });
        const Algorithm1Result a = algorithm1(sys);
        const Algorithm1Result b = algorithm1(scaled);
        EXPECT_EQ(a.mu, b.mu) << "seed " << s;
        ASSERT_EQ(a.invariants.size(), b.invariants.size()) << "seed " << s;
        for (std::size_t k = 0; k < a.invariants.size(); ++k)
            EXPECT_TRUE(a.invariants[k] == b.invariants[k]) << "seed " << s << " stage " << k;
    }
}

TEST(Property, ShiftIndexDoesNotExceedStrangenessIndex) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const SecondOrderSystem sys = random_system(s, 0, kWindow);
        const Algorithm1Result r = algorithm1(sys);
        const Algorithm2Result a2 = algorithm2(sys, {}, 6);
        EXPECT_LE(a2.nu, r.mu) << "seed " << s;
    }
}

TEST(Property, RankIdentityAtAcceptance) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const SecondOrderSystem sys = random_system(s, 0, kWindow);
        const Algorithm2Result a2 = algorithm2(sys, {}, 6);
        ASSERT_FALSE(a2.certificates.empty()) << "seed " << s;
        for (const RankCertificate& c : a2.certificates) {
            EXPECT_EQ(c.dynamic + c.input, c.target_d) << "seed " << s;
            EXPECT_EQ(c.target_d, sys.d());
        }
        const RhsFunction f = sys.rhs_function();
        EXPECT_TRUE(solutions_satisfy({sample(sys), f, sys.last()}, {a2.extracted, f, a2.extracted.last()},
                                      a2.extracted.last()))
            << "seed " << s;
    }
}

TEST(Property, ClosedLoopIsStrangenessFree) {
    for (unsigned s = 1; s <= kSeeds; ++s) {
        const SecondOrderSystem sys = random_system(1000 + s, 1 + s % 2, kWindow);
        const DescriptorResult dr = algorithm1_descriptor(sys);
        const Feedback fb = regularizing_feedback(dr.sfd.cond);
        const Algorithm1Result cl = algorithm1(close_loop(dr.sfd.rows(), fb));
        EXPECT_EQ(cl.mu, 0) << "seed " << s;
    }
}
