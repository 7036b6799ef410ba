#include "coevo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "coevo/parallel.hpp"

namespace coevo {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::simplified: return "simplified";
    case Variant::vanilla: return "vanilla";
  }
  return "?";
}

std::string to_string(Role r) { return r == Role::predator ? "predator" : "prey"; }

void EvolutionConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (population_size < 1) fail("N must be >= 1");
  if (subset_size < 1) fail("n must be >= 1");
  if (nphases < 1) fail("nphases must be >= 1");
  if (ngenerations < 1) fail("ngenerations must be >= 1");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) fail("mutation_rate must be in [0,1]");
  if (episodes_per_pair < 1) fail("episodes_per_pair must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (variant == Variant::vanilla) {
    if (subset_size != population_size) fail("vanilla requires n == N");
  } else {
    if (subset_size >= population_size) fail("standard/simplified require n < N");
    int m = population_size;
    while (m > subset_size && m % 2 == 0) m /= 2;
    if (m != subset_size)
      fail("standard/simplified require N == n * 2^k (got N=" + std::to_string(population_size) +
           ", n=" + std::to_string(subset_size) + ")");
  }
  if (invert_every < 1 || invert_every % ngenerations != 0)
    fail("invert_every must be a positive multiple of ngenerations");
  if (archive_every < 1 || archive_every % ngenerations != 0)
    fail("archive_every must be a positive multiple of ngenerations");
  episode.topology.validate();
  if (episode.max_steps < 1) fail("episode steps must be >= 1");
}

// --- selection machinery -----------------------------------------------------

namespace {

// opponent-perspective fitness vectors, one per column
std::vector<std::vector<double>> opponent_vectors(const CrossEvalMatrix& m) {
  std::vector<std::vector<double>> v(m.cols(), std::vector<double>(m.rows()));
  for (std::size_t j = 0; j < m.cols(); ++j)
    for (std::size_t i = 0; i < m.rows(); ++i) v[j][i] = 1.0 - m.cell(i, j);
  return v;
}

std::vector<double> opponent_means(const CrossEvalMatrix& m) {
  std::vector<double> means(m.cols(), 0.0);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += 1.0 - m.cell(i, j);
    means[j] = s / static_cast<double>(m.rows());
  }
  return means;
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<std::vector<std::size_t>> cluster_opponents(const CrossEvalMatrix& matrix,
                                                        std::size_t n) {
  std::size_t cols = matrix.cols();
  std::size_t m = cols;
  while (m > n && m % 2 == 0) m /= 2;
  if (m != n) throw std::invalid_argument("cluster_opponents: column count must be n * 2^k");

  auto vectors = opponent_vectors(matrix);

  struct Group {
    std::vector<std::size_t> members;
    std::vector<double> centroid;
    std::uint64_t min_id;
  };
  std::vector<Group> groups;
  groups.reserve(cols);
  for (std::size_t j = 0; j < cols; ++j)
    groups.push_back(Group{{j}, vectors[j], matrix.opponent_ids[j]});

  while (groups.size() > n) {
    // one halving round: greedily merge the globally closest unpaired groups
    std::vector<bool> merged(groups.size(), false);
    std::vector<Group> next;
    next.reserve(groups.size() / 2);
    for (std::size_t round = 0; round < groups.size() / 2; ++round) {
      std::size_t best_a = 0, best_b = 0;
      double best = std::numeric_limits<double>::infinity();
      std::uint64_t best_lo = 0, best_hi = 0;
      bool found = false;
      for (std::size_t a = 0; a < groups.size(); ++a) {
        if (merged[a]) continue;
        for (std::size_t b = a + 1; b < groups.size(); ++b) {
          if (merged[b]) continue;
          double d = sq_dist(groups[a].centroid, groups[b].centroid);
          std::uint64_t lo = std::min(groups[a].min_id, groups[b].min_id);
          std::uint64_t hi = std::max(groups[a].min_id, groups[b].min_id);
          if (!found || d < best || (d == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
            found = true;
            best = d;
            best_a = a;
            best_b = b;
            best_lo = lo;
            best_hi = hi;
          }
        }
      }
      Group g;
      g.members = groups[best_a].members;
      g.members.insert(g.members.end(), groups[best_b].members.begin(), groups[best_b].members.end());
      std::sort(g.members.begin(), g.members.end());
      g.centroid.assign(matrix.rows(), 0.0);
      for (std::size_t mem : g.members)
        for (std::size_t i = 0; i < matrix.rows(); ++i) g.centroid[i] += vectors[mem][i];
      for (double& c : g.centroid) c /= static_cast<double>(g.members.size());
      g.min_id = std::min(groups[best_a].min_id, groups[best_b].min_id);
      merged[best_a] = merged[best_b] = true;
      next.push_back(std::move(g));
    }
    std::sort(next.begin(), next.end(),
              [](const Group& a, const Group& b) { return a.min_id < b.min_id; });
    groups = std::move(next);
  }

  std::vector<std::vector<std::size_t>> out;
  out.reserve(groups.size());
  for (auto& g : groups) out.push_back(std::move(g.members));
  return out;
}

std::vector<std::size_t> select_opponents(const CrossEvalMatrix& matrix, std::size_t n,
                                          Variant variant) {
  auto means = opponent_means(matrix);
  std::vector<std::size_t> selected;

  if (variant == Variant::vanilla) {
    selected.resize(matrix.cols());
    std::iota(selected.begin(), selected.end(), std::size_t{0});
  } else if (variant == Variant::simplified) {
    std::vector<std::size_t> order(matrix.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (means[a] != means[b]) return means[a] > means[b];
      return matrix.opponent_ids[a] < matrix.opponent_ids[b];
    });
    selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    for (const auto& group : cluster_opponents(matrix, n)) {
      std::size_t best = group.front();
      for (std::size_t j : group) {
        if (means[j] > means[best] ||
            (means[j] == means[best] && matrix.opponent_ids[j] < matrix.opponent_ids[best]))
          best = j;
      }
      selected.push_back(best);
    }
  }
  std::sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
    return matrix.opponent_ids[a] < matrix.opponent_ids[b];
  });
  return selected;
}

std::vector<std::size_t> select_agents(const CrossEvalMatrix& matrix,
                                       const std::vector<std::size_t>& opponent_cols) {
  std::vector<bool> taken(matrix.rows(), false);
  std::vector<std::size_t> out;
  out.reserve(opponent_cols.size());
  for (std::size_t col : opponent_cols) {
    bool found = false;
    std::size_t best = 0;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      if (taken[i]) continue;
      if (!found || matrix.cell(i, col) > matrix.cell(best, col) ||
          (matrix.cell(i, col) == matrix.cell(best, col) &&
           matrix.agent_ids[i] < matrix.agent_ids[best])) {
        found = true;
        best = i;
      }
    }
    if (!found) throw std::logic_error("select_agents: more opponents than agents");
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

std::vector<double> candidate_weights(const std::vector<std::vector<double>>& fits) {
  if (fits.empty()) return {};
  std::vector<double> w(fits.front().size(), 0.0);
  for (const auto& row : fits)
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += 1.0 - row[j];
  for (double& v : w) v /= static_cast<double>(fits.size());
  return w;
}

std::vector<double> weighted_scores(const std::vector<std::vector<double>>& fits,
                                    const std::vector<double>& weights) {
  std::vector<double> scores(fits.size(), 0.0);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) s += fits[i][j] * weights[j];
    scores[i] = s;
  }
  return scores;
}

RankingResult rank_candidates(const std::vector<std::vector<double>>& fits,
                              const std::vector<std::uint64_t>& candidate_ids,
                              std::size_t keep, Variant variant) {
  RankingResult res;
  if (variant == Variant::standard) {
    res.scores = weighted_scores(fits, candidate_weights(fits));
  } else {
    res.scores.resize(fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
      double s = 0.0;
      for (double v : fits[i]) s += v;
      res.scores[i] = fits[i].empty() ? 0.0 : s / static_cast<double>(fits[i].size());
    }
  }
  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (res.scores[a] != res.scores[b]) return res.scores[a] > res.scores[b];
    return candidate_ids[a] < candidate_ids[b];
  });
  keep = std::min(keep, order.size());
  res.kept.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
  return res;
}

// --- engine ------------------------------------------------------------------

Engine::Engine(EvolutionConfig config) : config_(std::move(config)) {
  config_.validate();
}

Engine::Engine(EvolutionConfig config, EngineState state)
    : config_(std::move(config)), state_(std::move(state)) {
  config_.validate();
}

Role Engine::evolving_role(std::uint64_t phase) const {
  std::uint64_t inversions = phase * static_cast<std::uint64_t>(config_.ngenerations) /
                             static_cast<std::uint64_t>(config_.invert_every);
  return inversions % 2 == 0 ? Role::predator : Role::prey;
}

void Engine::evaluate_pairs(
    const std::vector<std::pair<const Genotype*, const Genotype*>>& pred_prey,
    std::vector<double>& predator_fitness) {
  predator_fitness.assign(pred_prey.size(), 0.0);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < pred_prey.size(); ++i) {
    auto cached = state_.cache.lookup(pred_prey[i].first->id, pred_prey[i].second->id);
    if (cached)
      predator_fitness[i] = *cached;
    else
      missing.push_back(i);
  }
  parallel_for(missing.size(), config_.workers, [&](std::size_t k) {
    const auto& [pred, prey] = pred_prey[missing[k]];
    double sum = 0.0;
    for (int e = 0; e < config_.episodes_per_pair; ++e) {
      EpisodeConfig ec = config_.episode;
      ec.record_trajectory = false;
      ec.noise_seed = Rng::derive(config_.master_seed,
                                  {3, pred->id, prey->id, static_cast<std::uint64_t>(e)})
                          .next_u64();
      sum += run_episode(ec, *pred, *prey).predator_fitness;
    }
    predator_fitness[missing[k]] = sum / static_cast<double>(config_.episodes_per_pair);
  });
  for (std::size_t i : missing)
    state_.cache.insert(pred_prey[i].first->id, pred_prey[i].second->id, predator_fitness[i]);
  state_.cache.episodes_run +=
      missing.size() * static_cast<std::uint64_t>(config_.episodes_per_pair);
}

CrossEvalMatrix Engine::evaluate_matrix(const Population& agents, const Population& opponents) {
  CrossEvalMatrix m;
  m.agent_ids.reserve(agents.members.size());
  for (const auto& g : agents.members) m.agent_ids.push_back(g.id);
  m.opponent_ids.reserve(opponents.members.size());
  for (const auto& g : opponents.members) m.opponent_ids.push_back(g.id);
  m.cells.resize(m.rows() * m.cols());

  const bool agents_are_predators = agents.role == Role::predator;
  std::vector<std::pair<const Genotype*, const Genotype*>> pairs;
  pairs.reserve(m.cells.size());
  for (const auto& a : agents.members)
    for (const auto& o : opponents.members)
      pairs.emplace_back(agents_are_predators ? &a : &o, agents_are_predators ? &o : &a);

  std::vector<double> pf;
  evaluate_pairs(pairs, pf);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double v = pf[i * m.cols() + j];
      m.cell(i, j) = agents_are_predators ? v : 1.0 - v;
    }
  return m;
}

void Engine::start_phase() {
  Role evolving = evolving_role(state_.phase);
  Population& agents = evolving == Role::predator ? state_.predators : state_.prey;
  Population& opponents = evolving == Role::predator ? state_.prey : state_.predators;

  state_.matrix = evaluate_matrix(agents, opponents);
  auto opp_cols =
      select_opponents(state_.matrix, static_cast<std::size_t>(config_.subset_size), config_.variant);
  auto agent_rows = select_agents(state_.matrix, opp_cols);

  state_.opponent_indices.assign(opp_cols.begin(), opp_cols.end());
  state_.lineages.clear();
  state_.lineages.reserve(agent_rows.size());
  for (std::size_t row : agent_rows) {
    Lineage l;
    l.agent_index = row;
    l.genotype = agents.members[row];
    double s = 0.0;
    for (std::size_t col : opp_cols) s += state_.matrix.cell(row, col);
    l.fitness = s / static_cast<double>(opp_cols.size());
    state_.lineages.push_back(std::move(l));
  }
  state_.phase_gen_fitness.clear();
  state_.gen_in_phase = 0;
  state_.mid_phase = true;
}

double Engine::do_generation() {
  Role evolving = evolving_role(state_.phase);
  Population& opponents = evolving == Role::predator ? state_.prey : state_.predators;
  const bool evolving_predators = evolving == Role::predator;

  // offspring on the coordinator, one derived stream per lineage
  std::vector<Genotype> offspring;
  offspring.reserve(state_.lineages.size());
  for (std::size_t l = 0; l < state_.lineages.size(); ++l) {
    Rng rng = Rng::derive(config_.master_seed,
                          {1, state_.phase, state_.gen_in_phase, static_cast<std::uint64_t>(l)});
    offspring.push_back(mutate(state_.lineages[l].genotype, config_.mutation_rate, rng,
                               state_.next_id++));
  }

  std::vector<std::pair<const Genotype*, const Genotype*>> pairs;
  pairs.reserve(offspring.size() * state_.opponent_indices.size());
  for (const auto& child : offspring)
    for (std::uint32_t col : state_.opponent_indices) {
      const Genotype& opp = opponents.members[col];
      pairs.emplace_back(evolving_predators ? &child : &opp, evolving_predators ? &opp : &child);
    }
  std::vector<double> pf;
  evaluate_pairs(pairs, pf);

  const std::size_t n_opp = state_.opponent_indices.size();
  double mean_fitness = 0.0;
  for (std::size_t l = 0; l < state_.lineages.size(); ++l) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_opp; ++j) {
      double v = pf[l * n_opp + j];
      s += evolving_predators ? v : 1.0 - v;
    }
    double fit = s / static_cast<double>(n_opp);
    if (fit >= state_.lineages[l].fitness) {
      state_.lineages[l].genotype = std::move(offspring[l]);
      state_.lineages[l].fitness = fit;
    }
    mean_fitness += state_.lineages[l].fitness;
  }
  mean_fitness /= static_cast<double>(state_.lineages.size());
  state_.phase_gen_fitness.push_back(mean_fitness);
  return mean_fitness;
}

PhaseReport Engine::finalize_phase() {
  Role evolving = evolving_role(state_.phase);
  Population& agents = evolving == Role::predator ? state_.predators : state_.prey;
  Population& opponents = evolving == Role::predator ? state_.prey : state_.predators;
  const bool evolving_predators = evolving == Role::predator;

  PhaseReport report;
  report.phase = state_.phase;
  report.evolving = evolving;
  report.start_generation = state_.phase * static_cast<std::uint64_t>(config_.ngenerations);
  report.end_generation = report.start_generation + static_cast<std::uint64_t>(config_.ngenerations);
  for (std::uint32_t col : state_.opponent_indices)
    report.selected_opponent_ids.push_back(state_.matrix.opponent_ids[col]);
  for (const Lineage& l : state_.lineages)
    report.selected_agent_ids.push_back(state_.matrix.agent_ids[l.agent_index]);
  report.per_generation_mean_fitness = state_.phase_gen_fitness;
  {
    double s = 0.0;
    for (double v : state_.matrix.cells) s += v;
    report.population_mean_fitness = state_.matrix.cells.empty()
                                         ? 0.0
                                         : s / static_cast<double>(state_.matrix.cells.size());
  }

  if (config_.variant == Variant::vanilla) {
    // within-phase >=-replacement already selected; keep the evolved lineages
    int turnover = 0;
    for (const Lineage& l : state_.lineages) {
      if (agents.members[l.agent_index].id != l.genotype.id) ++turnover;
      agents.members[l.agent_index] = l.genotype;
    }
    report.turnover = turnover;
  } else {
    std::set<std::uint64_t> original_ids;
    for (const auto& g : agents.members) original_ids.insert(g.id);

    std::vector<const Genotype*> candidates;
    candidates.reserve(agents.members.size() + state_.lineages.size());
    for (const auto& g : agents.members) candidates.push_back(&g);
    for (const Lineage& l : state_.lineages)
      if (!original_ids.contains(l.genotype.id)) candidates.push_back(&l.genotype);

    // fitness rows vs all N opponents; original rows come from the phase-start
    // matrix, evolved rows need at most n*N fresh episodes (training pairs hit
    // the cache)
    std::vector<std::vector<double>> fits(candidates.size(),
                                          std::vector<double>(opponents.members.size()));
    for (std::size_t i = 0; i < agents.members.size(); ++i)
      for (std::size_t j = 0; j < opponents.members.size(); ++j)
        fits[i][j] = state_.matrix.cell(i, j);
    std::vector<std::pair<const Genotype*, const Genotype*>> pairs;
    for (std::size_t c = agents.members.size(); c < candidates.size(); ++c)
      for (const auto& opp : opponents.members)
        pairs.emplace_back(evolving_predators ? candidates[c] : &opp,
                           evolving_predators ? &opp : candidates[c]);
    std::vector<double> pf;
    evaluate_pairs(pairs, pf);
    std::size_t idx = 0;
    for (std::size_t c = agents.members.size(); c < candidates.size(); ++c)
      for (std::size_t j = 0; j < opponents.members.size(); ++j, ++idx)
        fits[c][j] = evolving_predators ? pf[idx] : 1.0 - pf[idx];

    std::vector<std::uint64_t> ids;
    ids.reserve(candidates.size());
    for (const Genotype* g : candidates) ids.push_back(g->id);
    RankingResult ranked =
        rank_candidates(fits, ids, agents.members.size(), config_.variant);
    report.ranking_scores = ranked.scores;

    std::vector<Genotype> next;
    next.reserve(ranked.kept.size());
    int turnover = 0;
    for (std::size_t k : ranked.kept) {
      if (k >= agents.members.size()) ++turnover;
      next.push_back(*candidates[k]);
    }
    agents.members = std::move(next);
    report.turnover = turnover;
  }

  state_.lineages.clear();
  state_.opponent_indices.clear();
  state_.phase_gen_fitness.clear();
  state_.matrix = CrossEvalMatrix{};
  state_.mid_phase = false;
  ++state_.phase;
  return report;
}

void Engine::run(const Sinks& sinks, std::int64_t stop_after_generation) {
  const std::uint64_t total = static_cast<std::uint64_t>(config_.nphases) *
                              static_cast<std::uint64_t>(config_.ngenerations);
  const int N = config_.population_size;

  if (state_.generation == 0 && !state_.mid_phase && state_.predators.members.empty()) {
    state_.predators.role = Role::predator;
    state_.prey.role = Role::prey;
    for (int role = 0; role < 2; ++role) {
      Population& pop = role == 0 ? state_.predators : state_.prey;
      pop.members.reserve(static_cast<std::size_t>(N));
      for (int i = 0; i < N; ++i) {
        Rng rng = Rng::derive(config_.master_seed,
                              {0, static_cast<std::uint64_t>(role), static_cast<std::uint64_t>(i)});
        pop.members.push_back(random_genotype(config_.episode.topology, rng, state_.next_id++));
      }
    }
    if (sinks.on_archive) sinks.on_archive(state_.predators, state_.prey, 0);
  }

  while (state_.generation < total) {
    if (!state_.mid_phase) start_phase();

    double mean = do_generation();
    ++state_.gen_in_phase;
    ++state_.generation;
    if (sinks.on_generation)
      sinks.on_generation(GenerationTelemetry{state_.generation, state_.phase,
                                              evolving_role(state_.phase), mean});

    if (state_.gen_in_phase == static_cast<std::uint64_t>(config_.ngenerations)) {
      PhaseReport report = finalize_phase();
      if (sinks.on_phase) sinks.on_phase(report);
      if (state_.generation % static_cast<std::uint64_t>(config_.archive_every) == 0 ||
          state_.generation == total) {
        if (sinks.on_archive) sinks.on_archive(state_.predators, state_.prey, state_.generation);
      }
    }

    if (stop_after_generation >= 0 &&
        state_.generation >= static_cast<std::uint64_t>(stop_after_generation) &&
        state_.generation < total)
      return;
  }
}

}  // namespace coevo
