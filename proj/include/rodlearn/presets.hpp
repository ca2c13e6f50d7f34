// presets.hpp — the experiment catalogue
//
// Full-scale presets copy the published parameter tables; desk-scale presets
// run the same pipeline in seconds.  Sweep presets expand into one member
// configuration per sweep value.

#pragma once

#include "rodlearn/config.hpp"

namespace rodlearn {

struct PresetMember {
  std::string name;  // e.g. "Ne=5"; empty for single-member presets
  ExperimentConfig config;
};

struct Preset {
  std::string name;
  std::vector<PresetMember> members;
};

std::vector<std::string> preset_names();

// Throws ConfigError listing the alternatives for an unknown name.
Preset resolve_preset(const std::string& name);

}  // namespace rodlearn
