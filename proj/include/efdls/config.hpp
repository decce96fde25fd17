#pragma once

#include "efdls/federation.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace efdls {

// A run request: one federation per listed strategy, all sharing the rest of
// the configuration.
struct ExperimentConfig {
    FederationConfig federation;
    std::vector<StrategyKind> strategies{StrategyKind::EFDLS};
    std::string output_dir;
};

// JSON schema (unknown keys are rejected):
//   strategy            "efdls" or ["baseline", "efdls", ...]
//   n_tot               users; 0 or absent = one per dataset
//   conn_ratio, fles, seed, epsilon, batch_size, local_epochs, lr, weight_decay
//   bn_paper_literal, znormalize, resample_connected
//   transport           "inprocess" | "socket"; port
//   architecture        {"blocks": [[kernel, channels] x3], "hidden_width": n}
//   datasets            ["Chinatown", {"name", "path", "synthetic": {...}}, ...]
//                       or {"Chinatown": "/data/ucr", ...}
//   output_dir
ExperimentConfig parse_config(const nlohmann::ordered_json& j);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::ordered_json to_json(const ExperimentConfig& config);

}  // namespace efdls
