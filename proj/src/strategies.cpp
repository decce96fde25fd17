#include "efdls/strategies.hpp"

#include "efdls/errors.hpp"

#include <algorithm>
#include <cctype>

namespace efdls {

StrategyKind parse_strategy(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "baseline") return StrategyKind::Baseline;
    if (lower == "fedavg") return StrategyKind::FedAvg;
    if (lower == "fkd") return StrategyKind::FKD;
    if (lower == "efdls") return StrategyKind::EFDLS;
    throw ConfigError("unknown strategy '" + std::string(name) + "' (expected baseline, fedavg, fkd or efdls)");
}

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Baseline: return "baseline";
        case StrategyKind::FedAvg: return "fedavg";
        case StrategyKind::FKD: return "fkd";
        case StrategyKind::EFDLS: return "efdls";
    }
    return "unknown";
}

WeightBundle fedavg_aggregate(const WeightTable& table) {
    if (table.entries.empty()) throw InsufficientUsersError("fedavg_aggregate: empty weight table");
    WeightBundle mean = table.entries.front().bundle;
    mean.epoch = table.epoch;
    for (std::size_t u = 1; u < table.size(); ++u) {
        const WeightBundle& b = table.entries[u].bundle;
        if (!mean.same_layout(b)) throw IncompatibleBundleError("fedavg_aggregate: bundles differ in layout");
        for (std::size_t e = 0; e < mean.entries.size(); ++e) {
            Tensor& acc = mean.entries[e].value;
            const Tensor& v = b.entries[e].value;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
        }
    }
    const double n = static_cast<double>(table.size());
    for (auto& e : mean.entries) {
        for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] /= n;
    }
    return mean;
}

namespace {

class BaselineStrategy final : public Strategy {
public:
    StrategyKind kind() const override { return StrategyKind::Baseline; }
    bool communicates() const override { return false; }
    std::vector<LoadInstruction> apply(const WeightTable&) const override { return {}; }
};

class MeanStrategy final : public Strategy {
public:
    MeanStrategy(StrategyKind kind, LoadTarget target) : kind_(kind), target_(target) {}
    StrategyKind kind() const override { return kind_; }
    std::vector<LoadInstruction> apply(const WeightTable& table) const override {
        const WeightBundle mean = fedavg_aggregate(table);
        std::vector<LoadInstruction> out;
        for (const auto& e : table.entries) out.push_back({e.user_id, target_, mean});
        return out;
    }

private:
    StrategyKind kind_;
    LoadTarget target_;
};

class DistanceMatchStrategy final : public Strategy {
public:
    StrategyKind kind() const override { return StrategyKind::EFDLS; }
    std::vector<LoadInstruction> apply(const WeightTable& table) const override {
        const DistanceMatrix d = pairwise_distances(table);
        const MatchAssignment ids = match_partners(d);
        std::vector<LoadInstruction> out;
        for (auto& [user, bundle] : dispatch_matched(table, ids)) {
            out.push_back({user, LoadTarget::Teacher, std::move(bundle)});
        }
        return out;
    }
};

}  // namespace

std::unique_ptr<Strategy> make_strategy(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::Baseline: return std::make_unique<BaselineStrategy>();
        case StrategyKind::FedAvg: return std::make_unique<MeanStrategy>(kind, LoadTarget::Student);
        case StrategyKind::FKD: return std::make_unique<MeanStrategy>(kind, LoadTarget::Teacher);
        case StrategyKind::EFDLS: return std::make_unique<DistanceMatchStrategy>();
    }
    throw ConfigError("unhandled strategy kind");
}

std::vector<LoadInstruction> apply_round(StrategyKind kind, const WeightTable& table) {
    return make_strategy(kind)->apply(table);
}

}  // namespace efdls
