#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "efdls/kernels.hpp"

namespace k = efdls::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

}  // namespace

TEST(Kernels, ConvForwardHandComputed) {
    // x = [1 2 3], kernel [1 0 -1], bias 0.5, zero padding 1.
    const k::ConvDims d{1, 1, 1, 3, 3};
    std::vector<double> x{1, 2, 3}, w{1, 0, -1}, b{0.5}, y(3);
    k::serial::conv1d_forward(x, w, b, y, d);
    expect_close(y, {0.5 - 2.0, 0.5 + 1.0 - 3.0, 0.5 + 2.0}, 1e-15);
}

TEST(Kernels, ParallelMatchesSerial) {
    std::mt19937_64 rng(3);
    const k::ConvDims d{3, 4, 5, 11, 5};
    auto x = random_vec(d.batch * d.in_channels * d.length, rng);
    auto w = random_vec(d.out_channels * d.in_channels * d.kernel, rng);
    auto b = random_vec(d.out_channels, rng);
    auto g = random_vec(d.batch * d.out_channels * d.length, rng);

    std::vector<double> ys(g.size()), yp(g.size());
    k::serial::conv1d_forward(x, w, b, ys, d);
    k::parallel::conv1d_forward(x, w, b, yp, d);
    expect_close(ys, yp, 1e-12);

    std::vector<double> gis(x.size()), gip(x.size());
    k::serial::conv1d_backward_input(g, w, gis, d);
    k::parallel::conv1d_backward_input(g, w, gip, d);
    expect_close(gis, gip, 1e-12);

    std::vector<double> gws(w.size()), gwp(w.size()), gbs(b.size()), gbp(b.size());
    k::serial::conv1d_backward_params(x, g, gws, gbs, d);
    k::parallel::conv1d_backward_params(x, g, gwp, gbp, d);
    expect_close(gws, gwp, 1e-12);
    expect_close(gbs, gbp, 1e-12);

    const k::DenseDims dd{4, 7, 3};
    auto in = random_vec(dd.batch * dd.in_features, rng);
    auto dw = random_vec(dd.out_features * dd.in_features, rng);
    auto db = random_vec(dd.out_features, rng);
    auto dg = random_vec(dd.batch * dd.out_features, rng);
    std::vector<double> os(dg.size()), op(dg.size());
    k::serial::dense_forward(in, dw, db, os, dd);
    k::parallel::dense_forward(in, dw, db, op, dd);
    expect_close(os, op, 1e-12);
    std::vector<double> gis2(in.size()), gip2(in.size()), gws2(dw.size()), gwp2(dw.size()), gbs2(3), gbp2(3);
    k::serial::dense_backward(in, dw, dg, gis2, gws2, gbs2, dd);
    k::parallel::dense_backward(in, dw, dg, gip2, gwp2, gbp2, dd);
    expect_close(gis2, gip2, 1e-12);
    expect_close(gws2, gwp2, 1e-12);
    expect_close(gbs2, gbp2, 1e-12);

    const k::ChannelDims cd{3, 4, 9};
    auto z = random_vec(cd.batch * cd.channels * cd.length, rng);
    std::vector<double> ms(4), mp(4), ss(4), sp(4);
    k::serial::channel_moments(z, ms, ss, cd);
    k::parallel::channel_moments(z, mp, sp, cd);
    expect_close(ms, mp, 1e-12);
    expect_close(ss, sp, 1e-12);
}

TEST(Kernels, ChannelMomentsOracle) {
    // Two samples, one channel, length 2: values 1,3 and 5,7.
    const k::ChannelDims cd{2, 1, 2};
    std::vector<double> x{1, 3, 5, 7}, mean(1), sq(1);
    k::serial::channel_moments(x, mean, sq, cd);
    EXPECT_DOUBLE_EQ(mean[0], 4.0);
    EXPECT_DOUBLE_EQ(sq[0], 9 + 1 + 1 + 9);
}

TEST(Kernels, SquaredDistance) {
    std::vector<double> a{3.0}, b{5.0};
    EXPECT_DOUBLE_EQ(k::serial::squared_distance(a, b), 4.0);
}
