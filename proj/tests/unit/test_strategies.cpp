#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "bundle_helpers.hpp"
#include "efdls/errors.hpp"
#include "efdls/strategies.hpp"

using namespace efdls;
using testing_helpers::mini_bundle;
using testing_helpers::scalar_bundle;

namespace {

WeightTable table_of(const std::vector<WeightBundle>& bundles) {
    WeightTable t;
    t.clear(2);
    for (std::size_t i = 0; i < bundles.size(); ++i) t.add(static_cast<std::uint32_t>(i), bundles[i]);
    return t;
}

}  // namespace

TEST(Strategy, ParseAndName) {
    EXPECT_EQ(parse_strategy("EFDLS"), StrategyKind::EFDLS);
    EXPECT_EQ(parse_strategy("fedavg"), StrategyKind::FedAvg);
    EXPECT_EQ(to_string(StrategyKind::FKD), "fkd");
    EXPECT_THROW(parse_strategy("fedprox"), ConfigError);
}

TEST(FedAvg, Examples) {
    std::mt19937_64 rng(1);
    const auto a = mini_bundle(rng);
    auto single = fedavg_aggregate(table_of({a}));
    single.epoch = a.epoch;
    EXPECT_EQ(single, a);
    const auto mean = fedavg_aggregate(table_of({scalar_bundle(1, 4), scalar_bundle(3, 8)}));
    EXPECT_DOUBLE_EQ(mean.entries[1].value[0], 2.0);
    EXPECT_DOUBLE_EQ(mean.entries[0].value[0], 6.0);  // running stats are averaged too
    EXPECT_THROW(fedavg_aggregate(WeightTable{}), InsufficientUsersError);
}

TEST(FedAvg, MatchesElementwiseMeanAndIsPermutationInvariant) {
    std::mt19937_64 rng(2);
    std::vector<WeightBundle> bundles;
    for (int i = 0; i < 5; ++i) bundles.push_back(mini_bundle(rng));
    const auto mean = fedavg_aggregate(table_of(bundles));
    for (std::size_t e = 0; e < mean.entries.size(); ++e) {
        for (std::size_t i = 0; i < mean.entries[e].value.size(); ++i) {
            double s = 0.0;
            for (const auto& b : bundles) s += b.entries[e].value[i];
            EXPECT_NEAR(mean.entries[e].value[i], s / 5.0, 1e-7);
        }
    }
    std::reverse(bundles.begin(), bundles.end());
    const auto reversed = fedavg_aggregate(table_of(bundles));
    for (std::size_t e = 0; e < mean.entries.size(); ++e)
        EXPECT_LT(max_abs_diff(mean.entries[e].value, reversed.entries[e].value), 1e-12);
}

TEST(ApplyRound, BaselineIsSilent) {
    std::mt19937_64 rng(3);
    EXPECT_TRUE(apply_round(StrategyKind::Baseline, table_of({mini_bundle(rng), mini_bundle(rng)})).empty());
    EXPECT_FALSE(make_strategy(StrategyKind::Baseline)->communicates());
}

TEST(ApplyRound, MeanStrategiesTargets) {
    std::mt19937_64 rng(4);
    const auto a = mini_bundle(rng);
    const auto t = table_of({a, a, a});
    for (auto kind : {StrategyKind::FedAvg, StrategyKind::FKD}) {
        const auto ins = apply_round(kind, t);
        ASSERT_EQ(ins.size(), 3u);
        for (const auto& i : ins) {
            EXPECT_EQ(i.target, kind == StrategyKind::FedAvg ? LoadTarget::Student : LoadTarget::Teacher);
            EXPECT_EQ(i.bundle.entries, ins[0].bundle.entries);
            for (std::size_t e = 0; e < a.entries.size(); ++e)
                EXPECT_LT(max_abs_diff(i.bundle.entries[e].value, a.entries[e].value), 1e-15);
        }
    }
}

TEST(ApplyRound, EfdlsFollowsMatching) {
    std::mt19937_64 rng(5);
    std::vector<WeightBundle> bundles;
    for (int i = 0; i < 4; ++i) bundles.push_back(mini_bundle(rng));
    const auto t = table_of(bundles);
    const auto ins = apply_round(StrategyKind::EFDLS, t);
    const auto ids = match_partners(pairwise_distances(t)).ids;
    ASSERT_EQ(ins.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(ins[i].user_id, i);
        EXPECT_EQ(ins[i].target, LoadTarget::Teacher);
        EXPECT_EQ(ins[i].bundle, bundles[ids[i]]);
    }
    EXPECT_THROW(apply_round(StrategyKind::EFDLS, table_of({bundles[0]})), InsufficientUsersError);
}
