#include "efdls/federation.hpp"

#include "efdls/errors.hpp"
#include "efdls/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

namespace efdls {

std::size_t connected_count(std::size_t n_tot, double conn_ratio) {
    if (!(conn_ratio > 0.0 && conn_ratio <= 1.0)) {
        throw ConfigError("conn_ratio must lie in (0,1], got " + std::to_string(conn_ratio));
    }
    const auto n = static_cast<std::size_t>(std::floor(conn_ratio * static_cast<double>(n_tot) + 0.5));
    if (n < 1) {
        throw ConfigError("conn_ratio " + std::to_string(conn_ratio) + " leaves no connected user out of " +
                          std::to_string(n_tot));
    }
    return std::min(n, n_tot);
}

std::vector<std::uint32_t> select_connected(std::size_t n_tot, double conn_ratio, std::uint64_t seed) {
    const std::size_t n_conn = connected_count(n_tot, conn_ratio);
    std::vector<std::uint32_t> ids(n_tot);
    std::iota(ids.begin(), ids.end(), 0u);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x636f6e6eu};
    std::mt19937_64 rng(seq);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(n_conn);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::mt19937_64 user_rng(std::uint64_t seed, std::uint32_t user_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), user_id,
                      0x75736572u};
    return std::mt19937_64(seq);
}

std::uint64_t CommLedger::total_bytes() const {
    std::uint64_t n = 0;
    for (const auto& e : entries) n += e.bytes;
    return n;
}

std::uint64_t CommLedger::bytes(Direction direction) const {
    std::uint64_t n = 0;
    for (const auto& e : entries) {
        if (e.direction == direction) n += e.bytes;
    }
    return n;
}

std::uint64_t CommLedger::bytes(std::int64_t epoch, Direction direction) const {
    std::uint64_t n = 0;
    for (const auto& e : entries) {
        if (e.direction == direction && e.epoch == epoch) n += e.bytes;
    }
    return n;
}

std::size_t CommLedger::count(Direction direction) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [&](const LedgerEntry& e) { return e.direction == direction; }));
}

std::uint64_t comm_overhead(std::uint64_t bw, std::uint64_t fles, std::uint64_t n_conn) {
    return 2 * bw * fles * n_conn;
}

FederationServer::FederationServer(StrategyKind kind) : strategy_(make_strategy(kind)) {}

void FederationServer::begin_epoch(std::int64_t epoch, std::vector<std::uint32_t> expected_users) {
    table_.clear(epoch);
    expected_ = std::move(expected_users);
    open_ = true;
}

void FederationServer::receive(std::span<const std::uint8_t> message) {
    if (!open_) throw StateError("server received an upload outside an open epoch");
    DecodedMessage msg = decode_weight_message(message);
    if (static_cast<std::int64_t>(msg.epoch) != table_.epoch) {
        throw StateError("upload from user " + std::to_string(msg.user_id) + " is tagged epoch " +
                         std::to_string(msg.epoch) + ", server is at epoch " + std::to_string(table_.epoch));
    }
    if (std::find(expected_.begin(), expected_.end(), msg.user_id) == expected_.end()) {
        throw StateError("upload from unexpected user " + std::to_string(msg.user_id));
    }
    table_.add(msg.user_id, std::move(msg.bundle));
}

bool FederationServer::barrier_complete() const {
    if (!open_) return false;
    return std::all_of(expected_.begin(), expected_.end(), [&](std::uint32_t u) { return table_.contains(u); });
}

std::vector<OutboundMessage> FederationServer::close_epoch() {
    if (!barrier_complete()) {
        throw StateError("epoch " + std::to_string(table_.epoch) + " closed with " + std::to_string(table_.size()) +
                         " of " + std::to_string(expected_.size()) + " uploads");
    }
    open_ = false;
    ++strategy_runs_;
    std::vector<OutboundMessage> out;
    for (auto& ins : strategy_->apply(table_)) {
        out.push_back({ins.user_id, ins.target,
                       encode_weight_message(ins.bundle, static_cast<std::uint32_t>(table_.epoch), ins.user_id)});
    }
    return out;
}

namespace {

class InProcessTransport final : public Transport {
public:
    explicit InProcessTransport(StrategyKind kind) : server_(kind) {}

    std::vector<OutboundMessage> round(std::int64_t epoch, const std::vector<std::uint32_t>& expected,
                                       std::vector<Upload> uploads) override {
        server_.begin_epoch(epoch, expected);
        for (const auto& u : uploads) server_.receive(u.message);
        return server_.close_epoch();
    }

private:
    FederationServer server_;
};

struct UserState {
    std::uint32_t user_id = 0;
    const TimeSeriesDataset* data = nullptr;
    std::mt19937_64 rng;
    std::unique_ptr<FBSTPair> pair;
};

std::size_t resolve_n_tot(const FederationConfig& config) {
    if (config.datasets.empty()) throw ConfigError("no datasets configured");
    const std::size_t n = config.n_tot == 0 ? config.datasets.size() : config.n_tot;
    if (n != config.datasets.size()) {
        throw ConfigError("n_tot is " + std::to_string(n) + " but " + std::to_string(config.datasets.size()) +
                          " datasets are assigned (one per user)");
    }
    return n;
}

// Epochs need this many uploads before the strategy can run.
std::size_t minimum_uploads(StrategyKind kind) { return kind == StrategyKind::EFDLS ? 2 : 1; }

}  // namespace

std::unique_ptr<Transport> make_socket_transport(StrategyKind strategy, std::uint16_t port);

std::unique_ptr<Transport> make_transport(TransportKind kind, StrategyKind strategy, std::uint16_t port) {
    if (kind == TransportKind::Socket) return make_socket_transport(strategy, port);
    return std::make_unique<InProcessTransport>(strategy);
}

std::string to_string(TransportKind kind) { return kind == TransportKind::Socket ? "socket" : "inprocess"; }

TransportKind parse_transport(std::string_view name) {
    if (name == "inprocess") return TransportKind::InProcess;
    if (name == "socket") return TransportKind::Socket;
    throw ConfigError("unknown transport '" + std::string(name) + "' (expected inprocess or socket)");
}

std::vector<TimeSeriesDataset> load_datasets(const FederationConfig& config) {
    std::vector<TimeSeriesDataset> out;
    LoadOptions options;
    options.znormalize = config.znormalize;
    for (const auto& spec : config.datasets) {
        if (spec.synthetic) {
            SyntheticSpec s = *spec.synthetic;
            s.name = spec.name;
            if (spec.synthetic_kind == "sine_vs_flat") {
                out.push_back(make_sine_vs_flat(s));
            } else if (spec.synthetic_kind == "sinusoids") {
                out.push_back(make_synthetic_dataset(s));
            } else {
                throw ConfigError("dataset " + spec.name + ": unknown synthetic kind '" + spec.synthetic_kind + "'");
            }
            continue;
        }
        std::string dir = spec.path;
        if (dir.empty()) {
            const char* env = std::getenv("EFDLS_DATA_DIR");
            if (env == nullptr || *env == '\0') {
                throw DatasetError("dataset " + spec.name + ": no path given and EFDLS_DATA_DIR is not set");
            }
            dir = env;
        }
        const DatasetMeta* meta = find_dataset_meta(spec.name);
        const std::string file_name = meta != nullptr ? std::string(meta->archive_name) : spec.name;
        try {
            out.push_back(load_ucr_dataset(dir, file_name, options, meta));
        } catch (const Error& e) {
            throw DatasetError("failed to load dataset " + spec.name + ": " + e.what());
        }
    }
    return out;
}

FederationResult run_federation(const FederationConfig& config) {
    resolve_n_tot(config);
    return run_federation(config, load_datasets(config));
}

FederationResult run_federation(const FederationConfig& config, const std::vector<TimeSeriesDataset>& datasets) {
    const std::size_t n_tot = resolve_n_tot(config);
    if (datasets.size() != n_tot) throw ConfigError("dataset count does not match the user count");
    if (config.fles == 0) throw ConfigError("fles must be positive");
    validate(config.fbst);

    FederationResult result;
    result.strategy = config.strategy;
    result.n_tot = n_tot;
    result.n_conn = connected_count(n_tot, config.conn_ratio);
    const auto strategy = make_strategy(config.strategy);
    std::unique_ptr<Transport> transport;
    if (strategy->communicates()) transport = make_transport(config.transport, config.strategy, config.port);

    std::vector<UserState> users(n_tot);
    for (std::uint32_t u = 0; u < n_tot; ++u) {
        auto& user = users[u];
        user.user_id = u;
        user.data = &datasets[u];
        user.rng = user_rng(config.seed, u);
        user.pair = std::make_unique<FBSTPair>(config.extractor, datasets[u].num_classes, user.rng, config.fbst.adam);
        result.users.push_back({u, datasets[u].name, false, 0.0, 0.0, {}, std::nullopt});
    }

    std::vector<std::uint32_t> connected = select_connected(n_tot, config.conn_ratio, config.seed);
    std::vector<OutboundMessage> pending;
    for (std::size_t k = 1; k <= config.fles; ++k) {
        const auto epoch = static_cast<std::int64_t>(k);
        if (config.resample_connected && k > 1) {
            connected = select_connected(n_tot, config.conn_ratio, config.seed + k - 1);
        }
        for (const auto& msg : pending) {
            DecodedMessage decoded = decode_weight_message(msg.message);
            auto& pair = *users[msg.user_id].pair;
            if (msg.target == LoadTarget::Teacher) {
                pair.load_teacher(decoded.bundle);
            } else {
                pair.student.load_hidden_weights(decoded.bundle);
            }
        }
        pending.clear();

        const bool exchange = strategy->communicates() && connected.size() >= minimum_uploads(config.strategy);
        std::vector<Upload> uploads;
        for (auto& user : users) {
            const bool is_connected = std::binary_search(connected.begin(), connected.end(), user.user_id);
            TrainData data{&user.data->train_x, user.data->train_y};
            std::pair<LossReport, WeightBundle> trained;
            try {
                trained = local_train_epoch(*user.pair, data, config.fbst, epoch, user.rng, is_connected && exchange);
            } catch (const NumericError& e) {
                throw NumericError("user " + std::to_string(user.user_id) + " (" + user.data->name + "), epoch " +
                                   std::to_string(k) + ": " + e.what());
            }
            auto& record = result.users[user.user_id];
            record.losses.push_back(trained.first);
            if (is_connected && exchange) {
                record.connected = true;
                auto msg = encode_weight_message(trained.second, static_cast<std::uint32_t>(k), user.user_id);
                result.bundle_bytes = msg.size();
                result.ledger.add(epoch, user.user_id, Direction::Upload, msg.size());
                uploads.push_back({user.user_id, std::move(msg)});
            }
        }
        if (!exchange) continue;
        pending = transport->round(epoch, connected, std::move(uploads));
        for (const auto& msg : pending) {
            result.ledger.add(epoch, msg.user_id, Direction::Download, msg.message.size());
        }
    }

    for (auto& user : users) {
        auto& record = result.users[user.user_id];
        record.train_accuracy = top1_on(user.pair->student, user.data->train_x, user.data->train_y);
        record.test_accuracy = top1_on(user.pair->student, user.data->test_x, user.data->test_y);
        if (config.keep_final_weights) record.final_hidden = user.pair->student.extract_hidden_weights(
            static_cast<std::int64_t>(config.fles));
    }
    return result;
}

}  // namespace efdls
