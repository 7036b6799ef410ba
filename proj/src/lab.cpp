#include "coevo/lab.hpp"

#include <cmath>
#include <stdexcept>

#include "coevo/parallel.hpp"

namespace coevo {

namespace {

// all-pairs mean predator fitness, fixed-order reduction over preallocated slots
double pairings_mean(const std::vector<Genotype>& preds, const std::vector<Genotype>& prey,
                     const EpisodeConfig& episode, int workers) {
  const std::size_t count = preds.size() * prey.size();
  if (count == 0) throw std::invalid_argument("empty population in tournament evaluation");
  std::vector<double> results(count);
  parallel_for(count, workers, [&](std::size_t k) {
    EpisodeConfig ec = episode;
    ec.record_trajectory = false;
    results[k] = run_episode(ec, preds[k / prey.size()], prey[k % prey.size()]).predator_fitness;
  });
  double s = 0.0;
  for (double v : results) s += v;
  return s / static_cast<double>(count);
}

}  // namespace

double cross_experiment(const GenerationArchive& predators, const GenerationArchive& prey,
                        const EpisodeConfig& episode, int workers) {
  return pairings_mean(predators.members, prey.members, episode, workers);
}

TournamentGrid master_tournament(const std::vector<GenerationArchive>& pred_archives,
                                 const std::vector<GenerationArchive>& prey_archives,
                                 const EpisodeConfig& episode, int workers) {
  TournamentGrid grid;
  for (const auto& a : pred_archives) grid.pred_generations.push_back(a.generation);
  for (const auto& a : prey_archives) grid.prey_generations.push_back(a.generation);
  grid.cells.resize(pred_archives.size() * prey_archives.size());
  for (std::size_t g = 0; g < pred_archives.size(); ++g)
    for (std::size_t h = 0; h < prey_archives.size(); ++h)
      grid.cell(g, h) = pairings_mean(pred_archives[g].members, prey_archives[h].members,
                                      episode, workers);
  return grid;
}

double behavior_complexity(std::span<const double> tv, std::span<const double> rv) {
  if (tv.size() != rv.size()) throw std::invalid_argument("behavior_complexity: length mismatch");
  if (tv.size() < 2) throw std::invalid_argument("behavior_complexity: need at least 2 samples");
  const std::size_t s = tv.size() - 1;
  double sum = 0.0;
  for (std::size_t t = 1; t <= s; ++t)
    sum += std::fabs(tv[t] - tv[t - 1]) + std::fabs(rv[t] - rv[t - 1]);
  return sum / (2.0 * static_cast<double>(s));
}

double behavior_complexity(const std::vector<StepRecord>& trace) {
  std::vector<double> tv, rv;
  tv.reserve(trace.size());
  rv.reserve(trace.size());
  for (const StepRecord& r : trace) {
    tv.push_back(r.tv);
    rv.push_back(r.rv);
  }
  return behavior_complexity(tv, rv);
}

ComplexityPair population_complexity(const GenerationArchive& predators,
                                     const GenerationArchive& prey,
                                     const EpisodeConfig& episode, int workers) {
  const std::size_t count = predators.members.size() * prey.members.size();
  if (count == 0) throw std::invalid_argument("population_complexity: empty archive");
  std::vector<ComplexityPair> results(count);
  parallel_for(count, workers, [&](std::size_t k) {
    EpisodeConfig ec = episode;
    ec.record_trajectory = true;
    EpisodeOutcome out = run_episode(ec, predators.members[k / prey.members.size()],
                                     prey.members[k % prey.members.size()]);
    results[k].predator = behavior_complexity(out.trajectory->predator);
    results[k].prey = behavior_complexity(out.trajectory->prey);
  });
  ComplexityPair mean;
  for (const auto& r : results) {
    mean.predator += r.predator;
    mean.prey += r.prey;
  }
  mean.predator /= static_cast<double>(count);
  mean.prey /= static_cast<double>(count);
  return mean;
}

double grid_perf(const TournamentGrid& grid, Role role, std::size_t g, std::size_t h) {
  if (role == Role::predator) return grid.cell(g, h);
  return 1.0 - grid.cell(h, g);
}

namespace {

void check_grids(const std::vector<TournamentGrid>& grids) {
  if (grids.size() < 2)
    throw std::invalid_argument("progress tables need at least 2 replications");
  for (const auto& g : grids) {
    if (g.pred_generations != grids.front().pred_generations ||
        g.prey_generations != grids.front().prey_generations ||
        g.pred_generations != g.prey_generations)
      throw std::invalid_argument("progress tables need aligned generation axes");
  }
}

}  // namespace

std::vector<std::uint64_t> historical_progress(const std::vector<TournamentGrid>& grids,
                                               Role role, double alpha) {
  check_grids(grids);
  const auto& gens = grids.front().pred_generations;
  std::vector<std::uint64_t> table(gens.size(), 0);
  for (std::size_t g = 0; g < gens.size(); ++g) {
    for (std::size_t back = 0; back < g; ++back) {
      std::size_t h = g - 1 - back;  // most recent first
      std::vector<double> ancient, current;
      for (const auto& grid : grids) {
        ancient.push_back(grid_perf(grid, role, g, h));
        current.push_back(grid_perf(grid, role, g, g));
      }
      if (paired_t_test_one_tailed(ancient, current).p < alpha) {
        table[g] = gens[h];
        break;
      }
    }
  }
  return table;
}

std::vector<std::uint64_t> global_progress(const std::vector<TournamentGrid>& grids,
                                           Role role, double alpha) {
  check_grids(grids);
  const auto& gens = grids.front().pred_generations;
  if (gens.empty()) return {};
  const std::size_t last = gens.size() - 1;
  std::vector<std::uint64_t> table(gens.size(), 0);
  for (std::size_t g = 0; g < gens.size(); ++g) {
    for (std::size_t back = 0; back < g; ++back) {
      std::size_t h = g - 1 - back;
      std::vector<double> mine, theirs;
      for (const auto& grid : grids) {
        mine.push_back(grid_perf(grid, role, g, last));
        theirs.push_back(grid_perf(grid, role, h, last));
      }
      if (paired_t_test_one_tailed(mine, theirs).p < alpha) {
        table[g] = gens[h];
        break;
      }
    }
  }
  return table;
}

}  // namespace coevo
