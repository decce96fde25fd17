#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "efdls/errors.hpp"
#include "efdls/metrics.hpp"

using namespace efdls;
namespace fs = std::filesystem;

namespace {

AccuracyTable three_by_three() {
    AccuracyTable t;
    t.algorithms = {"A", "B", "C"};
    t.add_row("d1", {0.9, 0.8, 0.7});
    t.add_row("d2", {0.5, 0.5, 0.4});
    t.add_row("d3", {0.1, 0.3, 0.2});
    return t;
}

}  // namespace

TEST(Top1, Examples) {
    std::vector<std::size_t> labels(345, 0), preds(345, 0);
    for (std::size_t i = 0; i < 18; ++i) preds[i] = 1;
    EXPECT_NEAR(top1_accuracy(preds, labels), 327.0 / 345.0, 1e-15);
    EXPECT_NEAR(top1_accuracy(preds, labels), 0.9478, 5e-5);
    EXPECT_THROW(top1_accuracy(std::vector<std::size_t>{1}, std::vector<std::size_t>{1, 2}), DimensionError);
}

TEST(WinTieLose, HandCountedTable) {
    const auto w = win_tie_lose_best(three_by_three());
    EXPECT_EQ(w[0], (WinTieLose{1, 1, 1, 2}));
    EXPECT_EQ(w[1], (WinTieLose{1, 1, 1, 2}));
    EXPECT_EQ(w[2], (WinTieLose{0, 0, 3, 0}));
}

TEST(WinTieLose, DominatingAlgorithmWinsEverything) {
    AccuracyTable t;
    t.algorithms = {"X", "Y"};
    for (int i = 0; i < 5; ++i) t.add_row("d" + std::to_string(i), {0.6 + 0.01 * i, 0.5});
    const auto w = win_tie_lose_best(t);
    EXPECT_EQ(w[0], (WinTieLose{5, 0, 0, 5}));
    EXPECT_EQ(w[1], (WinTieLose{0, 0, 5, 0}));
}

TEST(WinTieLose, ToleranceDecidesTies) {
    AccuracyTable t;
    t.algorithms = {"X", "Y"};
    t.add_row("d", {0.5, 0.5 + 1e-10});
    EXPECT_EQ(win_tie_lose_best(t)[0].tie, 1u);
    t.add_row("e", {0.5, 0.5 + 1e-6});
    EXPECT_EQ(win_tie_lose_best(t)[1].win, 1u);
}

TEST(WinTieLose, NeedsTwoAlgorithms) {
    AccuracyTable t;
    t.algorithms = {"X"};
    t.add_row("d", {0.5});
    EXPECT_THROW(win_tie_lose_best(t), ConfigError);
    const auto report = summarize(t);
    EXPECT_FALSE(report.algorithms[0].counts.has_value());
    EXPECT_FALSE(report.algorithms[0].avg_rank.has_value());
    EXPECT_DOUBLE_EQ(report.algorithms[0].mean_acc, 0.5);
}

TEST(AvgRank, TiesShareAverageRank) {
    const auto r = avg_rank(three_by_three());
    // d1: 1,2,3  d2: 1.5,1.5,3  d3: 3,1,2
    EXPECT_DOUBLE_EQ(r[0], (1 + 1.5 + 3) / 3.0);
    EXPECT_DOUBLE_EQ(r[1], (2 + 1.5 + 1) / 3.0);
    EXPECT_DOUBLE_EQ(r[2], (3 + 3 + 2) / 3.0);
    EXPECT_DOUBLE_EQ(r[0] + r[1] + r[2], 6.0);
}

TEST(AvgRank, FixtureRowSumsAreTriangular) {
    const auto t = read_accuracy_csv(fs::path(EFDLS_FIXTURE_DIR) / "table2.csv");
    ASSERT_EQ(t.algorithms.size(), 8u);
    ASSERT_EQ(t.datasets.size(), 44u);
    const auto r = avg_rank(t);
    EXPECT_NEAR(std::accumulate(r.begin(), r.end(), 0.0), 8.0 * 9.0 / 2.0, 1e-9);
    for (double v : r) {
        EXPECT_GE(v, 1.0);
        EXPECT_LE(v, 8.0);
    }
}

TEST(MeanAcc, ColumnMean) {
    const auto t = three_by_three();
    EXPECT_DOUBLE_EQ(mean_acc(t, "B"), (0.8 + 0.5 + 0.3) / 3.0);
    EXPECT_THROW(mean_acc(t, "Z"), ConfigError);
}

TEST(Csv, ParseFormatRoundTrip) {
    const auto t = three_by_three();
    const auto text = format_accuracy_csv(t);
    const auto back = parse_accuracy_csv(text);
    EXPECT_EQ(back.datasets, t.datasets);
    EXPECT_EQ(back.algorithms, t.algorithms);
    EXPECT_EQ(back.values, t.values);
    EXPECT_THROW(parse_accuracy_csv("dataset,A\nd1,0.5,0.6\n"), ConfigError);
    EXPECT_THROW(parse_accuracy_csv("dataset,A\nd1,abc\n"), ConfigError);
}

TEST(Report, EmitAndReadBack) {
    const fs::path dir = fs::temp_directory_path() / "efdls_metrics_report";
    fs::remove_all(dir);
    const auto report = summarize(three_by_three());
    emit_report(report, dir);
    ASSERT_TRUE(fs::exists(dir / kResultsFile));
    ASSERT_TRUE(fs::exists(dir / kSummaryFile));
    const auto back = read_report(dir);
    EXPECT_EQ(back.table.values, report.table.values);
    EXPECT_EQ(back.algorithms, report.algorithms);
    const auto json = summary_json(report);
    EXPECT_EQ(json["algorithms"]["A"]["win"], 1);
    EXPECT_EQ(json["algorithms"]["A"]["best"], 2);
    fs::remove_all(dir);
}

TEST(Report, SummaryTableListsEveryAlgorithm) {
    const auto text = format_summary_table(summarize(three_by_three()));
    for (const char* name : {"A", "B", "C", "MeanACC", "AVG_rank"}) EXPECT_NE(text.find(name), std::string::npos) << name;
}
