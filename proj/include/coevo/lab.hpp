#pragma once

#include <cstdint>
#include <vector>

#include "coevo/engine.hpp"
#include "coevo/sim.hpp"
#include "coevo/stats.hpp"

namespace coevo {

// One archived population snapshot.
struct GenerationArchive {
  std::uint64_t generation = 0;
  Role role = Role::predator;
  std::vector<Genotype> members;
};

// Generation x generation mean predator-perspective fitness. Rows follow
// pred_generations, columns prey_generations. The lower triangle (predators
// vs earlier prey) is the current-vs-ancestral-opponents data.
struct TournamentGrid {
  std::vector<std::uint64_t> pred_generations;
  std::vector<std::uint64_t> prey_generations;
  std::vector<double> cells;  // row-major
  int replication = 0;

  double cell(std::size_t g, std::size_t h) const { return cells[g * prey_generations.size() + h]; }
  double& cell(std::size_t g, std::size_t h) { return cells[g * prey_generations.size() + h]; }
};

// Mean predator fitness over all pairings between two populations.
double cross_experiment(const GenerationArchive& predators, const GenerationArchive& prey,
                        const EpisodeConfig& episode, int workers = 1);

// Full cross-generation grid: cell (g, h) = mean over all pairings of
// predator archive g vs prey archive h.
TournamentGrid master_tournament(const std::vector<GenerationArchive>& pred_archives,
                                 const std::vector<GenerationArchive>& prey_archives,
                                 const EpisodeConfig& episode, int workers = 1);

// c = sum_t (|tv_t - tv_{t-1}| + |rv_t - rv_{t-1}|) / (2s) over the sample
// sequences tv_0..tv_s; throws when fewer than 2 samples.
double behavior_complexity(std::span<const double> tv, std::span<const double> rv);

// complexity of one robot's logged command stream
double behavior_complexity(const std::vector<StepRecord>& trace);

struct ComplexityPair {
  double predator = 0.0;
  double prey = 0.0;
};

// Runs all pairings with trajectory recording and averages the per-robot
// behavior complexity per role.
ComplexityPair population_complexity(const GenerationArchive& predators,
                                     const GenerationArchive& prey,
                                     const EpisodeConfig& episode, int workers = 1);

// agent-perspective performance of archive-generation g vs opponent
// generation h, for the given role, from one grid
double grid_perf(const TournamentGrid& grid, Role role, std::size_t g, std::size_t h);

// For each agent generation g: the most recent earlier generation h whose
// opponents the agents beat significantly harder than their contemporaries
// (paired one-tailed t-test across replications, p < alpha); 0 when none.
std::vector<std::uint64_t> historical_progress(const std::vector<TournamentGrid>& grids,
                                               Role role, double alpha = 0.05);

// For each agent generation g: the most recent earlier generation h such that
// generation g performs significantly better than generation h against the
// last-generation opponents; 0 when none.
std::vector<std::uint64_t> global_progress(const std::vector<TournamentGrid>& grids,
                                           Role role, double alpha = 0.05);

}  // namespace coevo
