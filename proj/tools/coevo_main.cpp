#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coevo/engine.hpp"
#include "coevo/io.hpp"
#include "coevo/lab.hpp"
#include "coevo/manifest.hpp"

namespace fs = std::filesystem;
using namespace coevo;

namespace {

Sinks run_dir_sinks(const fs::path& run_dir, TelemetrySinks& telemetry,
                    const ExperimentManifest& manifest, std::uint64_t hash, Engine& engine) {
  Sinks sinks;
  sinks.on_generation = [&telemetry](const GenerationTelemetry& t) {
    telemetry.write_generation(t);
  };
  sinks.on_phase = [&telemetry, run_dir, hash, &engine](const PhaseReport& r) {
    telemetry.write_phase(r);
    save_checkpoint(run_dir / "checkpoint.bin", hash, engine.state());
  };
  sinks.on_archive = [run_dir, &manifest](const Population& preds, const Population& prey,
                                          std::uint64_t generation) {
    Snapshot snap;
    snap.generation = generation;
    snap.episode = manifest.config.episode;
    snap.predators = preds;
    snap.prey = prey;
    save_snapshot(snapshot_path(run_dir, generation), snap);
  };
  return sinks;
}

int run_engine(const fs::path& run_dir, const ExperimentManifest& manifest, Engine& engine,
               bool fresh, std::int64_t stop_after) {
  std::uint64_t hash = manifest_hash(manifest);
  fs::create_directories(run_dir / "archives");
  TelemetrySinks telemetry(run_dir, fresh);
  Sinks sinks = run_dir_sinks(run_dir, telemetry, manifest, hash, engine);
  engine.run(sinks, stop_after);
  save_checkpoint(run_dir / "checkpoint.bin", hash, engine.state());
  const auto& st = engine.state();
  std::cout << "run at generation " << st.generation << " of "
            << static_cast<std::uint64_t>(manifest.config.nphases) * manifest.config.ngenerations
            << " (" << st.cache.episodes_run << " episodes simulated)\n";
  return 0;
}

std::vector<GenerationArchive> role_archives(const std::vector<Snapshot>& snaps, Role role) {
  std::vector<GenerationArchive> out;
  out.reserve(snaps.size());
  for (const auto& s : snaps) out.push_back(s.archive(role));
  return out;
}

const Genotype* find_genotype(const std::vector<Genotype>& members, std::uint64_t id) {
  for (const auto& g : members)
    if (g.id == id) return &g;
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Competitive co-evolution laboratory: predator-prey robot experiments,\n"
               "cross-generation tournaments and behavior analysis."};
  app.require_subcommand(1);
  int workers = 1;
  app.add_option("--workers", workers, "episode evaluation threads (never changes numeric output)")
      ->capture_default_str();

  // evolve
  auto* evolve = app.add_subcommand("evolve", "run an experiment from a manifest");
  std::string manifest_path;
  std::string out_override;
  std::int64_t stop_after = -1;
  evolve->add_option("manifest", manifest_path, "JSON experiment manifest")->required();
  evolve->add_option("--out", out_override, "output directory (overrides the manifest)");
  evolve->add_option("--stop-after", stop_after,
                     "pause once this many generations have run (checkpoint stays resumable)");

  // resume
  auto* resume = app.add_subcommand("resume", "continue a run from its checkpoint");
  std::string checkpoint_path;
  resume->add_option("checkpoint", checkpoint_path, "checkpoint file inside a run directory")
      ->required();
  std::int64_t resume_stop_after = -1;
  resume->add_option("--stop-after", resume_stop_after, "pause again at this generation");

  // tournament
  auto* tournament = app.add_subcommand(
      "tournament", "master tournament within a run, or cross-experiment grid between two runs");
  std::string run_a, run_b, grid_out = "tournament.csv";
  bool normalize = false;
  tournament->add_option("run-dir-a", run_a, "run directory")->required();
  tournament->add_option("run-dir-b", run_b, "second run directory (cross-experiment)");
  tournament->add_option("--out", grid_out, "output CSV path")->capture_default_str();
  tournament->add_flag("--normalize", normalize, "min-max scale exported cells to [0,1]");

  // progress
  auto* progress = app.add_subcommand(
      "progress", "historical/global progress tables across replication run directories");
  std::vector<std::string> run_dirs;
  double alpha = 0.05;
  std::string progress_out = "progress";
  progress->add_option("run-dirs", run_dirs, "replication run directories (>= 2)")->required();
  progress->add_option("--alpha", alpha, "significance threshold")->capture_default_str();
  progress->add_option("--out", progress_out, "output CSV prefix")->capture_default_str();

  // complexity
  auto* complexity = app.add_subcommand(
      "complexity", "per-generation behavior complexity and complexity-performance correlation");
  std::string complexity_dir, complexity_out = "complexity.csv";
  complexity->add_option("run-dir", complexity_dir, "run directory")->required();
  complexity->add_option("--out", complexity_out, "output CSV path")->capture_default_str();

  // replay
  auto* replay = app.add_subcommand("replay", "re-run one archived pairing with trajectory export");
  std::string archive_path, traj_out = "trajectory.csv";
  std::uint64_t pred_id = 0, prey_id = 0;
  replay->add_option("archive", archive_path, "generation archive file")->required();
  replay->add_option("pred-id", pred_id, "predator genotype id")->required();
  replay->add_option("prey-id", prey_id, "prey genotype id")->required();
  replay->add_option("--out", traj_out, "trajectory CSV path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evolve) {
      ExperimentManifest manifest = load_manifest(manifest_path);
      if (workers > 0) manifest.config.workers = workers;
      fs::path run_dir = out_override.empty() ? fs::path(manifest.output_dir) : fs::path(out_override);
      fs::create_directories(run_dir);
      fs::copy_file(manifest_path, run_dir / "manifest.json",
                    fs::copy_options::overwrite_existing);
      Engine engine(manifest.config);
      return run_engine(run_dir, manifest, engine, /*fresh=*/true, stop_after);
    }

    if (*resume) {
      fs::path ckpt(checkpoint_path);
      fs::path run_dir = ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path();
      ExperimentManifest manifest = load_manifest(run_dir / "manifest.json");
      if (workers > 0) manifest.config.workers = workers;
      EngineState state = load_checkpoint(ckpt, manifest_hash(manifest));
      trim_telemetry(run_dir, state.generation);
      Engine engine(manifest.config, std::move(state));
      return run_engine(run_dir, manifest, engine, /*fresh=*/false, resume_stop_after);
    }

    if (*tournament) {
      auto snaps_a = load_run_snapshots(run_a);
      if (snaps_a.empty()) throw std::runtime_error("no archives in " + run_a);
      const EpisodeConfig& episode = snaps_a.front().episode;
      if (run_b.empty()) {
        TournamentGrid grid = master_tournament(role_archives(snaps_a, Role::predator),
                                                role_archives(snaps_a, Role::prey), episode, workers);
        export_grid_csv(grid_out, grid, normalize);
        std::cout << "wrote " << grid_out << " (" << grid.pred_generations.size() << "x"
                  << grid.prey_generations.size() << " grid)\n";
      } else {
        auto snaps_b = load_run_snapshots(run_b);
        if (snaps_b.empty()) throw std::runtime_error("no archives in " + run_b);
        fs::path base(grid_out);
        fs::path ab = base.parent_path() / (base.stem().string() + "_predA_vs_preyB.csv");
        fs::path ba = base.parent_path() / (base.stem().string() + "_predB_vs_preyA.csv");
        TournamentGrid gab = master_tournament(role_archives(snaps_a, Role::predator),
                                               role_archives(snaps_b, Role::prey), episode, workers);
        TournamentGrid gba = master_tournament(role_archives(snaps_b, Role::predator),
                                               role_archives(snaps_a, Role::prey), episode, workers);
        export_grid_csv(ab, gab, normalize);
        export_grid_csv(ba, gba, normalize);
        std::cout << "wrote " << ab.string() << " and " << ba.string() << "\n";
      }
      return 0;
    }

    if (*progress) {
      std::vector<TournamentGrid> grids;
      for (std::size_t r = 0; r < run_dirs.size(); ++r) {
        auto snaps = load_run_snapshots(run_dirs[r]);
        if (snaps.empty()) throw std::runtime_error("no archives in " + run_dirs[r]);
        TournamentGrid grid = master_tournament(role_archives(snaps, Role::predator),
                                                role_archives(snaps, Role::prey),
                                                snaps.front().episode, workers);
        grid.replication = static_cast<int>(r);
        grids.push_back(std::move(grid));
      }
      auto write_table = [&](const std::string& path, const std::vector<std::uint64_t>& pred,
                             const std::vector<std::uint64_t>& prey) {
        std::ofstream out(path, std::ios::trunc);
        out << "generation,predators,prey\n";
        const auto& gens = grids.front().pred_generations;
        for (std::size_t g = 0; g < gens.size(); ++g)
          out << gens[g] << "," << pred[g] << "," << prey[g] << "\n";
      };
      write_table(progress_out + "_historical.csv",
                  historical_progress(grids, Role::predator, alpha),
                  historical_progress(grids, Role::prey, alpha));
      write_table(progress_out + "_global.csv", global_progress(grids, Role::predator, alpha),
                  global_progress(grids, Role::prey, alpha));
      std::cout << "wrote " << progress_out << "_historical.csv and " << progress_out
                << "_global.csv\n";
      return 0;
    }

    if (*complexity) {
      auto snaps = load_run_snapshots(complexity_dir);
      if (snaps.empty()) throw std::runtime_error("no archives in " + complexity_dir);
      const EpisodeConfig& episode = snaps.front().episode;
      const Snapshot& last = snaps.back();
      std::vector<double> pred_c, prey_c, pred_perf, prey_perf;
      std::ofstream out(complexity_out, std::ios::trunc);
      out << "generation,predator_complexity,prey_complexity,"
             "predator_perf_vs_last,prey_perf_vs_last\n";
      for (const auto& snap : snaps) {
        ComplexityPair c = population_complexity(snap.archive(Role::predator),
                                                 snap.archive(Role::prey), episode, workers);
        double pp = cross_experiment(snap.archive(Role::predator), last.archive(Role::prey),
                                     episode, workers);
        double qp = 1.0 - cross_experiment(last.archive(Role::predator), snap.archive(Role::prey),
                                           episode, workers);
        pred_c.push_back(c.predator);
        prey_c.push_back(c.prey);
        pred_perf.push_back(pp);
        prey_perf.push_back(qp);
        out << snap.generation << "," << format_double(c.predator) << ","
            << format_double(c.prey) << "," << format_double(pp) << "," << format_double(qp)
            << "\n";
      }
      out.close();
      std::cout << "wrote " << complexity_out << "\n";
      for (auto [name, cs, perfs] :
           {std::tuple{"predator", &pred_c, &pred_perf}, std::tuple{"prey", &prey_c, &prey_perf}}) {
        std::string r;
        try {
          r = format_double(pearson_correlation(*cs, *perfs));
        } catch (const std::invalid_argument&) {
          r = "n/a (needs >= 3 generations with variance)";
        }
        std::cout << name << " complexity-performance r = " << r << "\n";
      }
      return 0;
    }

    if (*replay) {
      Snapshot snap = load_snapshot(archive_path);
      const Genotype* pred = find_genotype(snap.predators.members, pred_id);
      const Genotype* prey = find_genotype(snap.prey.members, prey_id);
      if (!pred) throw std::runtime_error("predator id not found in archive");
      if (!prey) throw std::runtime_error("prey id not found in archive");
      EpisodeConfig ec = snap.episode;
      ec.record_trajectory = true;
      EpisodeOutcome outcome = run_episode(ec, *pred, *prey);
      export_trajectory_csv(traj_out, *outcome.trajectory);
      std::cout << "capture_step="
                << (outcome.capture_step ? std::to_string(*outcome.capture_step) : "none")
                << " predator_fitness=" << format_double(outcome.predator_fitness)
                << " prey_fitness=" << format_double(outcome.prey_fitness) << "\n";
      std::cout << "predator complexity: "
                << format_double(behavior_complexity(outcome.trajectory->predator)) << "\n";
      std::cout << "prey complexity: "
                << format_double(behavior_complexity(outcome.trajectory->prey)) << "\n";
      std::cout << "wrote " << traj_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
