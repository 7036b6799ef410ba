#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coevo/engine.hpp"
#include "coevo/lab.hpp"

namespace coevo {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint32_t kSnapshotVersion = 1;

// One archived generation: both populations plus everything needed to
// re-simulate episodes (topology, arena, robot specs, episode length).
struct Snapshot {
  std::uint64_t generation = 0;
  EpisodeConfig episode;
  Population predators;
  Population prey;

  GenerationArchive archive(Role role) const {
    const Population& p = role == Role::predator ? predators : prey;
    return GenerationArchive{generation, role, p.members};
  }
};

// Versioned little-endian binary files with magic headers. Loading checks
// magic, version and (for checkpoints) the manifest hash, and fails on
// truncation.
void save_checkpoint(const std::filesystem::path& path, std::uint64_t manifest_hash,
                     const EngineState& state);
EngineState load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash);

void save_snapshot(const std::filesystem::path& path, const Snapshot& snapshot);
Snapshot load_snapshot(const std::filesystem::path& path);

// All snapshots in <run_dir>/archives, ordered by generation.
std::vector<Snapshot> load_run_snapshots(const std::filesystem::path& run_dir);

// shortest round-trip-exact decimal form
std::string format_double(double v);

void export_grid_csv(const std::filesystem::path& path, const TournamentGrid& grid,
                     bool normalize = false);

void export_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log);

// Drops telemetry rows recorded after `generation`, so a resumed run appends
// from a clean cut even if the previous process died mid-write.
void trim_telemetry(const std::filesystem::path& run_dir, std::uint64_t generation);

// Append-mode telemetry writers for a run directory; rows flush per write.
class TelemetrySinks {
 public:
  explicit TelemetrySinks(const std::filesystem::path& run_dir, bool fresh);
  void write_generation(const GenerationTelemetry& t);
  void write_phase(const PhaseReport& r);

  static std::filesystem::path generations_path(const std::filesystem::path& run_dir);
  static std::filesystem::path phases_path(const std::filesystem::path& run_dir);

 private:
  std::filesystem::path gen_path_;
  std::filesystem::path phase_path_;
};

std::filesystem::path snapshot_path(const std::filesystem::path& run_dir, std::uint64_t generation);

}  // namespace coevo
