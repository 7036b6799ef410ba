#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coevo/sim.hpp"

namespace coevo {

enum class Variant : std::uint8_t { standard = 0, simplified = 1, vanilla = 2 };

std::string to_string(Variant v);
std::string to_string(Role r);

struct EvolutionConfig {
  int population_size = 80;   // N
  int subset_size = 10;       // n
  int nphases = 1500;
  int ngenerations = 100;     // generations per phase
  int invert_every = 500;     // role inversion cadence, multiple of ngenerations
  double mutation_rate = 0.02;
  Variant variant = Variant::standard;
  int archive_every = 10000;  // multiple of ngenerations
  int episodes_per_pair = 1;
  std::uint64_t master_seed = 1;
  int workers = 1;
  EpisodeConfig episode;

  // throws std::invalid_argument naming the violated constraint
  void validate() const;
};

struct Population {
  Role role = Role::predator;
  std::vector<Genotype> members;
};

// Agent-perspective pairwise fitness table: cell(i, j) is the fitness of
// agent i in its episode against opponent j.
struct CrossEvalMatrix {
  std::vector<std::uint64_t> agent_ids;
  std::vector<std::uint64_t> opponent_ids;
  std::vector<double> cells;  // row-major, rows = agents

  double cell(std::size_t i, std::size_t j) const { return cells[i * opponent_ids.size() + j]; }
  double& cell(std::size_t i, std::size_t j) { return cells[i * opponent_ids.size() + j]; }
  std::size_t rows() const { return agent_ids.size(); }
  std::size_t cols() const { return opponent_ids.size(); }
};

// Episode results keyed by (predator id, prey id); episodes are pure so a
// cached cell is always valid. Tracks how many episodes were actually run.
class EvalCache {
 public:
  std::optional<double> lookup(std::uint64_t pred_id, std::uint64_t prey_id) const {
    auto it = map_.find({pred_id, prey_id});
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void insert(std::uint64_t pred_id, std::uint64_t prey_id, double predator_fitness) {
    map_[{pred_id, prey_id}] = predator_fitness;
  }
  std::size_t size() const { return map_.size(); }
  std::uint64_t episodes_run = 0;

  const std::map<std::pair<std::uint64_t, std::uint64_t>, double>& entries() const { return map_; }
  std::map<std::pair<std::uint64_t, std::uint64_t>, double>& entries() { return map_; }

 private:
  std::map<std::pair<std::uint64_t, std::uint64_t>, double> map_;
};

struct GenerationTelemetry {
  std::uint64_t generation = 0;  // global, 1-based after the first generation
  std::uint64_t phase = 0;
  Role evolving = Role::predator;
  double mean_training_fitness = 0.0;  // mean over the n evolving lineages
};

struct PhaseReport {
  std::uint64_t phase = 0;
  Role evolving = Role::predator;
  std::uint64_t start_generation = 0;
  std::uint64_t end_generation = 0;
  std::vector<std::uint64_t> selected_opponent_ids;
  std::vector<std::uint64_t> selected_agent_ids;
  std::vector<double> per_generation_mean_fitness;
  std::vector<double> ranking_scores;        // end-of-phase candidate scores
  double population_mean_fitness = 0.0;      // mean of the phase-start matrix, agent perspective
  int turnover = 0;                          // members of the new population not in the old one
};

// One evolving lineage inside a phase: the current genotype and its cached
// training fitness against the phase's fixed opponents.
struct Lineage {
  std::size_t agent_index = 0;  // index into the evolving population at phase start
  Genotype genotype;
  double fitness = 0.0;
};

struct EngineState {
  std::uint64_t next_id = 0;
  std::uint64_t generation = 0;
  std::uint64_t phase = 0;
  std::uint64_t gen_in_phase = 0;
  bool mid_phase = false;
  Population predators;
  Population prey;
  // valid only when mid_phase
  std::vector<std::uint32_t> opponent_indices;
  std::vector<Lineage> lineages;
  CrossEvalMatrix matrix;  // phase-start full matrix, agent perspective
  std::vector<double> phase_gen_fitness;  // per-generation means so far this phase
  EvalCache cache;
};

struct Sinks {
  std::function<void(const GenerationTelemetry&)> on_generation;
  std::function<void(const PhaseReport&)> on_phase;
  std::function<void(const Population& predators, const Population& prey, std::uint64_t generation)>
      on_archive;
};

// --- selection machinery (pure, unit-testable) -------------------------------

// Greedy closest-pair agglomeration on opponent fitness vectors (each opponent
// represented by its opponent-perspective fitness against every agent); halves
// the group count per round until n groups remain. Groups are sets of column
// indices. Requires cols = n * 2^k.
std::vector<std::vector<std::size_t>> cluster_opponents(const CrossEvalMatrix& matrix,
                                                        std::size_t n);

// Standard: best-of-group by mean opponent-perspective fitness; Simplified:
// top-n by that mean; Vanilla: all columns. Result sorted by opponent id.
std::vector<std::size_t> select_opponents(const CrossEvalMatrix& matrix, std::size_t n,
                                          Variant variant);

// For each selected opponent in id order, the not-yet-chosen agent with the
// highest fitness against it (ties toward the lower agent id).
std::vector<std::size_t> select_agents(const CrossEvalMatrix& matrix,
                                       const std::vector<std::size_t>& opponent_cols);

// End-of-phase candidate weights: w_j = mean over candidates of the
// opponent-perspective fitness (1 - fit).
std::vector<double> candidate_weights(const std::vector<std::vector<double>>& fits);

// score_i = sum_j fit(i,j) * w_j
std::vector<double> weighted_scores(const std::vector<std::vector<double>>& fits,
                                    const std::vector<double>& weights);

struct RankingResult {
  std::vector<double> scores;
  std::vector<std::size_t> kept;  // candidate indices, best first
};

// Standard uses the weighted scores, Simplified plain means. Top `keep` by
// score, ties toward the lower id.
RankingResult rank_candidates(const std::vector<std::vector<double>>& fits,
                              const std::vector<std::uint64_t>& candidate_ids,
                              std::size_t keep, Variant variant);

// --- engine ------------------------------------------------------------------

class Engine {
 public:
  explicit Engine(EvolutionConfig config);          // fresh run
  Engine(EvolutionConfig config, EngineState state);  // resume

  // Runs to completion, or pauses once `generation` reaches stop_after_generation
  // (state stays resumable). Emits telemetry, phase reports and archives
  // through the sinks. The whole run is a pure function of the config.
  void run(const Sinks& sinks, std::int64_t stop_after_generation = -1);

  const EngineState& state() const { return state_; }
  EngineState& state() { return state_; }
  const EvolutionConfig& config() const { return config_; }

  // Full pairwise table via run_episode; previously evaluated id pairs come
  // from the cache. Exposed for tests and analysis parity.
  CrossEvalMatrix evaluate_matrix(const Population& agents, const Population& opponents);

 private:
  void start_phase();
  double do_generation();       // returns mean training fitness
  PhaseReport finalize_phase();
  Role evolving_role(std::uint64_t phase) const;
  double pair_fitness(const Genotype& pred, const Genotype& prey);  // cached, single pair
  // batch evaluation with fixed-slot results; fills agent-perspective values
  void evaluate_pairs(const std::vector<std::pair<const Genotype*, const Genotype*>>& pred_prey,
                      std::vector<double>& predator_fitness);

  EvolutionConfig config_;
  EngineState state_;
};

}  // namespace coevo
