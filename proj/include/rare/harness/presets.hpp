#pragma once

#include <string>
#include <vector>

#include "rare/harness/config.hpp"

namespace rare::harness {

struct Preset {
    std::string name;
    std::string description;
    ExperimentConfig config;
};

const std::vector<Preset>& presets();
/// Throws ConfigError for an unknown name.
ExperimentConfig preset_config(const std::string& name);

}  // namespace rare::harness
