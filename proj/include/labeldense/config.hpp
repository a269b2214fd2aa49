#pragma once

#include <string>
#include <vector>

#include "labeldense/trainer.hpp"
#include "labeldense/types.hpp"

namespace labeldense {

// Full run configuration mirrored from the JSON config file. Unknown keys
// are rejected so typos cannot silently skew an ablation grid.
struct RunConfig {
    TrainConfig train;
    SceneSpec scene;
    std::vector<int> ablate_k_sweep{8, 16, 48, 96};
    int ablate_seeds = 5;
};

RunConfig parse_run_config_text(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// Fully resolved config with every default materialized, for byte-exact
// reruns.
std::string effective_config_json(const RunConfig& cfg);

}  // namespace labeldense
