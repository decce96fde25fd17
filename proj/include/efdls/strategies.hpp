#pragma once

#include "efdls/dbwm.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace efdls {

enum class StrategyKind { Baseline, FedAvg, FKD, EFDLS };

StrategyKind parse_strategy(std::string_view name);  // case-insensitive
std::string to_string(StrategyKind kind);

enum class LoadTarget : std::uint8_t { Student = 1, Teacher = 2 };

struct LoadInstruction {
    std::uint32_t user_id = 0;
    LoadTarget target = LoadTarget::Teacher;
    WeightBundle bundle;
};

// Server-side aggregation for one round. FedAvgM, FedGrad, FTL and FTLS are
// not implemented; new rules plug in by subclassing.
class Strategy {
public:
    virtual ~Strategy() = default;
    virtual StrategyKind kind() const = 0;
    // Baseline never uploads anything.
    virtual bool communicates() const { return true; }
    virtual std::vector<LoadInstruction> apply(const WeightTable& table) const = 0;
};

std::unique_ptr<Strategy> make_strategy(StrategyKind kind);

// Elementwise mean of every entry, running statistics included.
WeightBundle fedavg_aggregate(const WeightTable& table);

std::vector<LoadInstruction> apply_round(StrategyKind kind, const WeightTable& table);

}  // namespace efdls
