#include <gtest/gtest.h>

#include <cmath>

#include "fedval/dense.hpp"
#include "fedval/rng.hpp"

using fedval::numkit::DenseMatrix;
using fedval::numkit::RngStream;

TEST(Kernels, DotBasics) {
    EXPECT_DOUBLE_EQ(fedval::numkit::dot({1, 2}, {3, 4}), 11.0);
    EXPECT_THROW(fedval::numkit::dot({1, 2}, {3}), std::invalid_argument);
}

TEST(Kernels, MatvecBasics) {
    DenseMatrix m(2, 2);
    m.at(0, 0) = 1;
    m.at(0, 1) = 2;
    m.at(1, 0) = 3;
    m.at(1, 1) = 4;
    auto y = fedval::numkit::matvec(m, {1, 1});
    EXPECT_DOUBLE_EQ(y[0], 3.0);
    EXPECT_DOUBLE_EQ(y[1], 7.0);
    EXPECT_THROW(fedval::numkit::matvec(m, {1, 1, 1}), std::invalid_argument);
}

TEST(Kernels, SigmoidStableAndBounded) {
    EXPECT_DOUBLE_EQ(fedval::numkit::sigmoid(0.0), 0.5);
    double lo = fedval::numkit::sigmoid(-1000.0);
    EXPECT_GT(lo, 0.0);
    EXPECT_LE(lo, 1e-300);
    EXPECT_TRUE(std::isfinite(lo));
    double hi = fedval::numkit::sigmoid(1000.0);
    EXPECT_LE(hi, 1.0);
    EXPECT_TRUE(std::isfinite(hi));
}

TEST(Kernels, SigmoidMonotoneOverWideRange) {
    double prev = 0.0;
    for (double x = -1e6; x <= 1e6; x += 4.1e4) {
        double v = fedval::numkit::sigmoid(x);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Standardize, ZeroVarianceSentinel) {
    DenseMatrix x(3, 1);
    x.at(0, 0) = x.at(1, 0) = x.at(2, 0) = 2.0;
    auto s = fedval::numkit::standardize_fit(x);
    EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
    EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
    fedval::numkit::standardize_apply(x, s);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_DOUBLE_EQ(x.at(r, 0), 0.0);
}

TEST(Standardize, HandArithmetic) {
    DenseMatrix x(2, 1);
    x.at(0, 0) = 0.0;
    x.at(1, 0) = 2.0;
    auto s = fedval::numkit::standardize_fit(x);
    EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
}

TEST(Standardize, RejectsTooFewRows) {
    DenseMatrix x(1, 2);
    EXPECT_THROW(fedval::numkit::standardize_fit(x), std::invalid_argument);
    EXPECT_THROW(fedval::numkit::standardize_fit(DenseMatrix()), std::invalid_argument);
}

// Self-consistency: after the transform every column has mean ~0, stddev ~1.
TEST(Standardize, RandomMatrixSelfConsistency) {
    RngStream rng(77, 0);
    DenseMatrix x(100, 10);
    for (auto& v : x.data) v = 3.0 * rng.gaussian() + 1.5;
    auto s = fedval::numkit::standardize_fit(x);
    fedval::numkit::standardize_apply(x, s);
    for (std::size_t c = 0; c < x.cols; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, c);
        mean /= double(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r) {
            double d = x.at(r, c) - mean;
            var += d * d;
        }
        var /= double(x.rows);
        EXPECT_LE(std::abs(mean), 1e-10);
        EXPECT_NEAR(std::sqrt(var), 1.0, 1e-10);
    }
}

TEST(Standardize, SubsetFitIgnoresOtherRows) {
    DenseMatrix x(4, 1);
    x.at(0, 0) = 0.0;
    x.at(1, 0) = 2.0;
    x.at(2, 0) = 1000.0;
    x.at(3, 0) = -1000.0;
    auto s = fedval::numkit::standardize_fit(x, {0, 1});
    EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
    EXPECT_DOUBLE_EQ(s.stddev[0], 1.0);
}
