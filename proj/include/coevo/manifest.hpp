#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "coevo/engine.hpp"

namespace coevo {

struct ExperimentManifest {
  EvolutionConfig config;
  std::string output_dir = "run";
  std::string canonical;  // sorted-key dump of the parsed document, hashed for checkpoints
};

// FNV-1a 64 over the canonical manifest text.
std::uint64_t manifest_hash(const ExperimentManifest& manifest);

// Strict parse: unknown keys are rejected, every constraint violation names
// the offending key. `variant` and `master_seed` are required, everything
// else defaults.
ExperimentManifest parse_manifest(const nlohmann::json& doc);
ExperimentManifest load_manifest(const std::filesystem::path& path);

}  // namespace coevo
