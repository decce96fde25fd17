#pragma once

#include "efdls/config.hpp"
#include "efdls/federation.hpp"
#include "efdls/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace efdls {

struct ExperimentOutcome {
    MetricReport report;
    std::vector<FederationResult> runs;  // one per strategy, in config order
    nlohmann::ordered_json runs_json;    // per-user accuracies, losses and ledger totals
};

// Runs every configured strategy on the same datasets. `datasets` may be
// passed to skip loading from disk.
ExperimentOutcome run_experiment(const ExperimentConfig& config,
                                 const std::vector<TimeSeriesDataset>* datasets = nullptr);

// Writes effective-config, results.csv and summary.json into `dir`.
void write_outcome(const ExperimentConfig& config, const ExperimentOutcome& outcome,
                   const std::filesystem::path& dir);

inline constexpr const char* kEffectiveConfigFile = "effective-config";
inline constexpr const char* kSweepFile = "sweep.csv";

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace efdls
