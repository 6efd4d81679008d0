#include <gtest/gtest.h>

#include "side/linalg.hpp"

using namespace side;

TEST(RankTolerance, DefaultScalesWithShapeAndNorm) {
    const RankTolerance t;
    EXPECT_GT(t.threshold(10.0, 4, 4), t.threshold(1.0, 4, 4));
    EXPECT_GT(t.threshold(1.0, 40, 40), t.threshold(1.0, 4, 4));
    const RankTolerance abs{0.0, 0.5};
    EXPECT_DOUBLE_EQ(abs.threshold(100.0, 3, 3), 0.5);
}

TEST(RankTolerance, AnchoringFixesTheReference) {
    Mat big = Mat::Identity(3, 3) * 1e6;
    Mat small = Mat::Identity(3, 3) * 1e-12;
    const RankTolerance t = RankTolerance{}.anchored(big);
    EXPECT_EQ(numerical_rank(small), 3);
    EXPECT_EQ(numerical_rank(small, t), 0);
}

TEST(NumericalRank, DetectsDependentRows) {
    Mat m(3, 3);
    m << 1, 2, 3, 2, 4, 6, 0, 1, 1;
    EXPECT_EQ(numerical_rank(m), 2);
    EXPECT_EQ(numerical_rank(Mat::Zero(2, 2)), 0);
    EXPECT_EQ(numerical_rank(Mat(0, 3)), 0);
}

TEST(Compress, BasesAreOrthogonalAndAnnihilate) {
    Mat m(4, 3);
    m << 1, 0, 1, 2, 0, 2, 0, 1, 0, 1, 1, 1;
    const Compression c = compress(m);
    EXPECT_EQ(c.rank, 2);
    ASSERT_EQ(c.t_perp.cols() + c.t_zero.cols(), 4);
    Mat q(4, 4);
    q << c.t_perp, c.t_zero;
    EXPECT_LT((q.transpose() * q - Mat::Identity(4, 4)).norm(), 1e-12);
    EXPECT_LT((c.t_zero.transpose() * m).norm(), 1e-12);
    EXPECT_EQ(numerical_rank(Mat(c.t_perp.transpose() * m)), 2);
}

TEST(Compress, FullRankAndZeroGiveIdentity) {
    const Compression full = compress(Mat::Identity(2, 2) * 3.0);
    EXPECT_TRUE(full.t_perp.isApprox(Mat::Identity(2, 2)));
    const Compression zero = compress(Mat::Zero(2, 3));
    EXPECT_TRUE(zero.t_zero.isApprox(Mat::Identity(2, 2)));
    EXPECT_EQ(zero.rank, 0);
}

TEST(NullSpace, SpansKernel) {
    Mat m(2, 4);
    m << 1, 1, 0, 0, 0, 0, 1, 1;
    const Mat n = null_space(m);
    EXPECT_EQ(n.cols(), 2);
    EXPECT_LT((m * n).norm(), 1e-12);
}

TEST(PseudoInverse, MoorePenroseConditions) {
    Mat m(3, 2);
    m << 1, 2, 2, 4, 0, 1;
    const Mat p = pseudo_inverse(m);
    EXPECT_LT((m * p * m - m).norm(), 1e-12);
    EXPECT_LT((p * m * p - p).norm(), 1e-12);
}

TEST(HiddenRedundancy, SharedRowSpace) {
    Mat q(1, 3), p(2, 3);
    q << 0, 0, 1;
    p << 1, 0, 0, 0, 0, 2;
    EXPECT_TRUE(has_hidden_redundancy(q, p));
    p << 1, 0, 0, 0, 1, 0;
    EXPECT_FALSE(has_hidden_redundancy(q, p));
}

TEST(RemoveRedundancy, SplitsDependentPart) {
    Mat q(1, 3), p(2, 3);
    q << 0, 0, 1;
    p << 1, 0, 1, 2, 0, 3;
    const RedundancyRemoval rr = remove_redundancy(p, q);
    ASSERT_EQ(rr.s.rows(), 1);
    ASSERT_EQ(rr.z1.rows(), 1);
    Mat both(2, 2);
    both << rr.s, rr.z1;
    EXPECT_LT((both * both.transpose() - Mat::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LT((rr.z1 * p + rr.z2 * q).norm(), 1e-12);
    EXPECT_EQ(numerical_rank(vstack(Mat(rr.s * p), q)), 2);
}

TEST(RemoveRedundancy, IndependentRowsPassThrough) {
    const RedundancyRemoval rr = remove_redundancy(Mat::Identity(2, 4), Mat(Mat::Identity(4, 4).bottomRows(2)));
    EXPECT_TRUE(rr.s.isApprox(Mat::Identity(2, 2)));
    EXPECT_EQ(rr.z1.rows(), 0);
}

TEST(CompleteRank, ProducesFullRowRank) {
    Mat p(1, 3), q(1, 3), g(1, 3);
    p << 1, 0, 0;
    q << 0, 1, 0;
    g << 2, 0, 0;
    EXPECT_EQ(numerical_rank(vstack(p, g)), 1);
    const CompletedRank cr = complete_rank(p, q, g);
    EXPECT_EQ(numerical_rank(vstack(p, Mat(g + q * cr.f))), 2);
}
