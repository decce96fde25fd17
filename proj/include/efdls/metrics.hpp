#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace efdls {

// Datasets as rows, algorithms as columns, row-major values.
struct AccuracyTable {
    std::vector<std::string> datasets;
    std::vector<std::string> algorithms;
    std::vector<double> values;

    double at(std::size_t row, std::size_t col) const { return values[row * algorithms.size() + col]; }
    std::size_t column(std::string_view algorithm) const;  // throws ConfigError when absent
    void add_row(std::string dataset, std::vector<double> row);
};

// First row is the header "dataset,<alg>,..."; every further row needs one value per algorithm.
AccuracyTable parse_accuracy_csv(std::string_view text);
AccuracyTable read_accuracy_csv(const std::filesystem::path& file);
std::string format_accuracy_csv(const AccuracyTable& table);

double top1_accuracy(std::span<const std::size_t> predictions, std::span<const std::size_t> labels);

struct WinTieLose {
    std::size_t win = 0;
    std::size_t tie = 0;
    std::size_t lose = 0;
    std::size_t best = 0;
    bool operator==(const WinTieLose&) const = default;
};

inline constexpr double kAccuracyTieTolerance = 1e-9;

// Per dataset, the algorithms at the row maximum win when alone there and tie
// otherwise; everything below loses. Needs at least two algorithms.
std::vector<WinTieLose> win_tie_lose_best(const AccuracyTable& table);
double mean_acc(const AccuracyTable& table, std::string_view algorithm);
// Mean rank per algorithm, rank 1 = most accurate, ties share the mean of their positions.
std::vector<double> avg_rank(const AccuracyTable& table);

struct AlgorithmSummary {
    std::string name;
    std::optional<WinTieLose> counts;  // absent with a single algorithm
    double mean_acc = 0.0;
    std::optional<double> avg_rank;
    bool operator==(const AlgorithmSummary&) const = default;
};

struct MetricReport {
    AccuracyTable table;
    std::vector<AlgorithmSummary> algorithms;
};

MetricReport summarize(const AccuracyTable& table);

std::string format_summary_table(const MetricReport& report);

inline constexpr const char* kResultsFile = "results.csv";
inline constexpr const char* kSummaryFile = "summary.json";

// Writes results.csv and summary.json. `extra` members are added to the
// summary next to "algorithms".
void emit_report(const MetricReport& report, const std::filesystem::path& dir,
                 const nlohmann::ordered_json* extra = nullptr);
MetricReport read_report(const std::filesystem::path& dir);

nlohmann::ordered_json summary_json(const MetricReport& report);

}  // namespace efdls
