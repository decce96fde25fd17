#pragma once

#include "efdls/dataio.hpp"
#include "efdls/dbwm.hpp"
#include "efdls/extractor.hpp"
#include "efdls/fbst.hpp"
#include "efdls/strategies.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace efdls {

enum class TransportKind { InProcess, Socket };

// Where a user's data comes from: a UCR directory, or a synthetic generator
// ("sine_vs_flat" or "sinusoids") when `synthetic` is set.
struct DatasetSpec {
    std::string name;
    std::string path;  // directory holding <name>_TRAIN.tsv / _TEST.tsv; empty means $EFDLS_DATA_DIR
    std::optional<SyntheticSpec> synthetic;
    std::string synthetic_kind = "sine_vs_flat";
};

struct FederationConfig {
    std::size_t n_tot = 0;  // 0: one user per dataset
    double conn_ratio = 1.0;
    std::size_t fles = 1;
    std::uint64_t seed = 0;
    StrategyKind strategy = StrategyKind::EFDLS;
    FBSTConfig fbst;
    ExtractorConfig extractor;
    std::vector<DatasetSpec> datasets;  // user i trains on datasets[i]
    bool znormalize = true;
    bool resample_connected = false;  // draw a new connected set every epoch
    TransportKind transport = TransportKind::InProcess;
    std::uint16_t port = 0;  // 0 picks a free port
    bool keep_final_weights = false;
};

// round_half_up(conn_ratio * n_tot)
std::size_t connected_count(std::size_t n_tot, double conn_ratio);
// Sorted user ids, sampled without replacement from a seeded shuffle.
std::vector<std::uint32_t> select_connected(std::size_t n_tot, double conn_ratio, std::uint64_t seed);

// Per-user stream derived from (seed, user_id) only.
std::mt19937_64 user_rng(std::uint64_t seed, std::uint32_t user_id);

enum class Direction : std::uint8_t { Upload, Download };

struct LedgerEntry {
    std::int64_t epoch = 0;
    std::uint32_t user_id = 0;
    Direction direction = Direction::Upload;
    std::uint64_t bytes = 0;
};

struct CommLedger {
    std::vector<LedgerEntry> entries;

    void add(std::int64_t epoch, std::uint32_t user_id, Direction direction, std::uint64_t bytes) {
        entries.push_back({epoch, user_id, direction, bytes});
    }
    std::uint64_t total_bytes() const;
    std::uint64_t bytes(Direction direction) const;
    std::uint64_t bytes(std::int64_t epoch, Direction direction) const;
    std::size_t count(Direction direction) const;
};

std::uint64_t comm_overhead(std::uint64_t bw, std::uint64_t fles, std::uint64_t n_conn);

struct OutboundMessage {
    std::uint32_t user_id = 0;
    LoadTarget target = LoadTarget::Teacher;
    std::vector<std::uint8_t> message;  // encoded WeightMessage
};

// Server side of one synchronous round: collects uploads and runs the strategy
// only once every expected user has uploaded for the current epoch.
class FederationServer {
public:
    explicit FederationServer(StrategyKind kind);

    void begin_epoch(std::int64_t epoch, std::vector<std::uint32_t> expected_users);
    void receive(std::span<const std::uint8_t> message);
    bool barrier_complete() const;
    std::vector<OutboundMessage> close_epoch();

    const WeightTable& table() const { return table_; }
    std::size_t strategy_runs() const { return strategy_runs_; }

private:
    std::unique_ptr<Strategy> strategy_;
    WeightTable table_;
    std::vector<std::uint32_t> expected_;
    bool open_ = false;
    std::size_t strategy_runs_ = 0;
};

struct Upload {
    std::uint32_t user_id = 0;
    std::vector<std::uint8_t> message;
};

class Transport {
public:
    virtual ~Transport() = default;
    // Delivers the uploads of epoch k to the server and returns its downloads.
    virtual std::vector<OutboundMessage> round(std::int64_t epoch, const std::vector<std::uint32_t>& expected,
                                               std::vector<Upload> uploads) = 0;
};

std::unique_ptr<Transport> make_transport(TransportKind kind, StrategyKind strategy, std::uint16_t port = 0);

struct UserResult {
    std::uint32_t user_id = 0;
    std::string dataset;
    bool connected = false;  // connected in at least one epoch
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<LossReport> losses;  // one per epoch
    std::optional<WeightBundle> final_hidden;
};

struct FederationResult {
    StrategyKind strategy = StrategyKind::Baseline;
    std::size_t n_tot = 0;
    std::size_t n_conn = 0;
    std::size_t bundle_bytes = 0;  // encoded size of one upload, 0 when nothing was sent
    std::vector<UserResult> users;
    CommLedger ledger;
};

std::vector<TimeSeriesDataset> load_datasets(const FederationConfig& config);
FederationResult run_federation(const FederationConfig& config);
FederationResult run_federation(const FederationConfig& config, const std::vector<TimeSeriesDataset>& datasets);

std::string to_string(TransportKind kind);
TransportKind parse_transport(std::string_view name);

}  // namespace efdls
