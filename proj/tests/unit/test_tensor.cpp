#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "efdls/errors.hpp"
#include "efdls/tensor.hpp"

using efdls::Tensor;

TEST(Tensor, ShapeAndFill) {
    Tensor t({2, 3, 4}, 1.5);
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(t.rank(), 3u);
    EXPECT_EQ(t.dim(2), 4u);
    EXPECT_DOUBLE_EQ(t.at(1, 2, 3), 1.5);
    EXPECT_EQ(efdls::shape_string(t.shape()), "[2,3,4]");
    EXPECT_THROW(t.dim(3), efdls::DimensionError);
}

TEST(Tensor, DataSizeMustMatchShape) {
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), efdls::DimensionError);
    Tensor ok({2, 2}, std::vector<double>{1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(ok.at(1, 0), 3.0);
}

TEST(Tensor, RowMajorIndexing) {
    Tensor t({2, 3, 2});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    EXPECT_DOUBLE_EQ(t.at(1, 0, 1), 7.0);
    EXPECT_DOUBLE_EQ(t.at(0, 2, 0), 4.0);
}

TEST(Tensor, FiniteAndDiff) {
    Tensor a({3}, std::vector<double>{1, 2, 3});
    Tensor b({3}, std::vector<double>{1, 2.5, 3});
    EXPECT_TRUE(a.all_finite());
    EXPECT_DOUBLE_EQ(efdls::max_abs_diff(a, b), 0.5);
    EXPECT_FALSE(efdls::bitwise_equal(a, b));
    b[1] = 2.0;
    EXPECT_TRUE(efdls::bitwise_equal(a, b));
    b[0] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(b.all_finite());
}
