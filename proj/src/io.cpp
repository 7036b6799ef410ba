#include "coevo/io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace coevo {

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'O', 'E', 'V', 'C', 'K', 'P', 'T'};
constexpr char kSnapshotMagic[8] = {'C', 'O', 'E', 'V', 'S', 'N', 'A', 'P'};

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
  }
  void bytes(const void* data, std::size_t len) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed");
  }

 private:
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path.string()) {
    if (!in_) throw std::runtime_error("cannot open: " + path_);
  }
  void bytes(void* data, std::size_t len) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (in_.gcount() != static_cast<std::streamsize>(len))
      throw std::runtime_error("truncated file: " + path_);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  std::ifstream in_;
  std::string path_;
};

void write_genotype(BinaryWriter& w, const Genotype& g) {
  w.u64(g.id);
  w.u32(static_cast<std::uint32_t>(g.genes.size()));
  for (double v : g.genes) w.f64(v);
}

Genotype read_genotype(BinaryReader& r) {
  Genotype g;
  g.id = r.u64();
  g.genes.resize(r.u32());
  for (double& v : g.genes) v = r.f64();
  return g;
}

void write_population(BinaryWriter& w, const Population& p) {
  w.u8(static_cast<std::uint8_t>(p.role));
  w.u32(static_cast<std::uint32_t>(p.members.size()));
  for (const auto& g : p.members) write_genotype(w, g);
}

Population read_population(BinaryReader& r) {
  Population p;
  p.role = static_cast<Role>(r.u8());
  p.members.resize(r.u32());
  for (auto& g : p.members) g = read_genotype(r);
  return p;
}

void write_matrix(BinaryWriter& w, const CrossEvalMatrix& m) {
  w.u32(static_cast<std::uint32_t>(m.agent_ids.size()));
  w.u32(static_cast<std::uint32_t>(m.opponent_ids.size()));
  for (auto id : m.agent_ids) w.u64(id);
  for (auto id : m.opponent_ids) w.u64(id);
  for (double v : m.cells) w.f64(v);
}

CrossEvalMatrix read_matrix(BinaryReader& r) {
  CrossEvalMatrix m;
  m.agent_ids.resize(r.u32());
  m.opponent_ids.resize(r.u32());
  for (auto& id : m.agent_ids) id = r.u64();
  for (auto& id : m.opponent_ids) id = r.u64();
  m.cells.resize(m.agent_ids.size() * m.opponent_ids.size());
  for (double& v : m.cells) v = r.f64();
  return m;
}

void write_episode_config(BinaryWriter& w, const EpisodeConfig& e) {
  w.u32(static_cast<std::uint32_t>(e.topology.n_sensory));
  w.u32(static_cast<std::uint32_t>(e.topology.n_hidden));
  w.u32(static_cast<std::uint32_t>(e.topology.n_motor));
  w.f64(e.arena.side);
  w.u8(e.arena.cylinder.enabled ? 1 : 0);
  w.f64(e.arena.cylinder.diameter);
  w.u8(e.arena.cylinder.occludes_vision ? 1 : 0);
  for (const RobotSpec* s : {&e.predator, &e.prey}) {
    w.f64(s->body_radius);
    w.f64(s->wheel_radius);
    w.f64(s->axle_track);
    w.f64(s->max_speed);
    w.f64(s->ir_range);
    w.f64(s->ground_offset);
  }
  w.u32(static_cast<std::uint32_t>(e.max_steps));
  w.f64(e.sensor_noise);
  w.u8(e.allow_backward ? 1 : 0);
}

EpisodeConfig read_episode_config(BinaryReader& r) {
  EpisodeConfig e;
  e.topology.n_sensory = static_cast<int>(r.u32());
  e.topology.n_hidden = static_cast<int>(r.u32());
  e.topology.n_motor = static_cast<int>(r.u32());
  e.arena.side = r.f64();
  e.arena.cylinder.enabled = r.u8() != 0;
  e.arena.cylinder.diameter = r.f64();
  e.arena.cylinder.occludes_vision = r.u8() != 0;
  for (RobotSpec* s : {&e.predator, &e.prey}) {
    s->body_radius = r.f64();
    s->wheel_radius = r.f64();
    s->axle_track = r.f64();
    s->max_speed = r.f64();
    s->ir_range = r.f64();
    s->ground_offset = r.f64();
  }
  e.max_steps = static_cast<int>(r.u32());
  e.sensor_noise = r.f64();
  e.allow_backward = r.u8() != 0;
  return e;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::uint64_t manifest_hash,
                     const EngineState& state) {
  BinaryWriter w(path);
  w.bytes(kCheckpointMagic, 8);
  w.u32(kCheckpointVersion);
  w.u64(manifest_hash);
  w.u64(state.next_id);
  w.u64(state.generation);
  w.u64(state.phase);
  w.u64(state.gen_in_phase);
  w.u8(state.mid_phase ? 1 : 0);
  write_population(w, state.predators);
  write_population(w, state.prey);
  w.u32(static_cast<std::uint32_t>(state.opponent_indices.size()));
  for (auto i : state.opponent_indices) w.u32(i);
  w.u32(static_cast<std::uint32_t>(state.lineages.size()));
  for (const Lineage& l : state.lineages) {
    w.u64(l.agent_index);
    write_genotype(w, l.genotype);
    w.f64(l.fitness);
  }
  write_matrix(w, state.matrix);
  w.u32(static_cast<std::uint32_t>(state.phase_gen_fitness.size()));
  for (double v : state.phase_gen_fitness) w.f64(v);
  w.u64(state.cache.episodes_run);
  w.u64(state.cache.entries().size());
  for (const auto& [key, fitness] : state.cache.entries()) {
    w.u64(key.first);
    w.u64(key.second);
    w.f64(fitness);
  }
  w.close();
}

EngineState load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_hash) {
  BinaryReader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path.string());
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint version " + std::to_string(version) +
                             " not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  std::uint64_t hash = r.u64();
  if (hash != expected_hash)
    throw std::runtime_error("checkpoint manifest hash mismatch: refusing to resume under a "
                             "different manifest");
  EngineState s;
  s.next_id = r.u64();
  s.generation = r.u64();
  s.phase = r.u64();
  s.gen_in_phase = r.u64();
  s.mid_phase = r.u8() != 0;
  s.predators = read_population(r);
  s.prey = read_population(r);
  s.opponent_indices.resize(r.u32());
  for (auto& i : s.opponent_indices) i = r.u32();
  s.lineages.resize(r.u32());
  for (Lineage& l : s.lineages) {
    l.agent_index = r.u64();
    l.genotype = read_genotype(r);
    l.fitness = r.f64();
  }
  s.matrix = read_matrix(r);
  s.phase_gen_fitness.resize(r.u32());
  for (double& v : s.phase_gen_fitness) v = r.f64();
  s.cache.episodes_run = r.u64();
  std::uint64_t entries = r.u64();
  for (std::uint64_t i = 0; i < entries; ++i) {
    std::uint64_t pred = r.u64();
    std::uint64_t prey = r.u64();
    s.cache.insert(pred, prey, r.f64());
  }
  return s;
}

void save_snapshot(const std::filesystem::path& path, const Snapshot& snapshot) {
  BinaryWriter w(path);
  w.bytes(kSnapshotMagic, 8);
  w.u32(kSnapshotVersion);
  w.u64(snapshot.generation);
  write_episode_config(w, snapshot.episode);
  write_population(w, snapshot.predators);
  write_population(w, snapshot.prey);
  w.close();
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  BinaryReader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kSnapshotMagic, 8) != 0)
    throw std::runtime_error("not an archive file: " + path.string());
  std::uint32_t version = r.u32();
  if (version != kSnapshotVersion)
    throw std::runtime_error("archive version " + std::to_string(version) + " not supported");
  Snapshot s;
  s.generation = r.u64();
  s.episode = read_episode_config(r);
  s.predators = read_population(r);
  s.prey = read_population(r);
  return s;
}

std::filesystem::path snapshot_path(const std::filesystem::path& run_dir, std::uint64_t generation) {
  char name[64];
  std::snprintf(name, sizeof(name), "gen_%010" PRIu64 ".arc", generation);
  return run_dir / "archives" / name;
}

std::vector<Snapshot> load_run_snapshots(const std::filesystem::path& run_dir) {
  std::filesystem::path dir = run_dir / "archives";
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("no archives directory in " + run_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".arc")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Snapshot> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_snapshot(f));
  std::sort(out.begin(), out.end(),
            [](const Snapshot& a, const Snapshot& b) { return a.generation < b.generation; });
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void export_grid_csv(const std::filesystem::path& path, const TournamentGrid& grid,
                     bool normalize) {
  std::vector<double> cells = grid.cells;
  if (normalize && !cells.empty()) {
    auto [lo_it, hi_it] = std::minmax_element(cells.begin(), cells.end());
    double lo = *lo_it, hi = *hi_it;
    for (double& v : cells) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "generation";
  for (auto g : grid.prey_generations) out << "," << g;
  out << "\n";
  for (std::size_t i = 0; i < grid.pred_generations.size(); ++i) {
    out << grid.pred_generations[i];
    for (std::size_t j = 0; j < grid.prey_generations.size(); ++j)
      out << "," << format_double(cells[i * grid.prey_generations.size() + j]);
    out << "\n";
  }
}

void export_trajectory_csv(const std::filesystem::path& path, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "step,robot,x,y,heading,tv,rv,rsl,rsr,tiredness,contact\n";
  auto dump = [&](const std::vector<StepRecord>& trace, const char* robot) {
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const StepRecord& s = trace[i];
      out << (i + 1) << "," << robot << "," << format_double(s.x) << "," << format_double(s.y)
          << "," << format_double(s.heading) << "," << format_double(s.tv) << ","
          << format_double(s.rv) << "," << format_double(s.rsl) << "," << format_double(s.rsr)
          << "," << format_double(s.tiredness) << "," << s.contact << "\n";
    }
  };
  dump(log.predator, "predator");
  dump(log.prey, "prey");
}

void trim_telemetry(const std::filesystem::path& run_dir, std::uint64_t generation) {
  auto trim = [&](const std::filesystem::path& path, auto keep_row) {
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path);
    std::ostringstream kept;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first || keep_row(line)) kept << line << "\n";
      first = false;
    }
    in.close();
    std::ofstream out(path, std::ios::trunc);
    out << kept.str();
  };
  trim(TelemetrySinks::generations_path(run_dir), [&](const std::string& line) {
    return std::strtoull(line.c_str(), nullptr, 10) <= generation;
  });
  trim(TelemetrySinks::phases_path(run_dir), [&](const std::string& line) {
    // phases row: phase,end_generation,...
    auto comma = line.find(',');
    if (comma == std::string::npos) return false;
    return std::strtoull(line.c_str() + comma + 1, nullptr, 10) <= generation;
  });
}

std::filesystem::path TelemetrySinks::generations_path(const std::filesystem::path& run_dir) {
  return run_dir / "telemetry_generations.csv";
}
std::filesystem::path TelemetrySinks::phases_path(const std::filesystem::path& run_dir) {
  return run_dir / "telemetry_phases.csv";
}

TelemetrySinks::TelemetrySinks(const std::filesystem::path& run_dir, bool fresh)
    : gen_path_(generations_path(run_dir)), phase_path_(phases_path(run_dir)) {
  if (fresh || !std::filesystem::exists(gen_path_)) {
    std::ofstream g(gen_path_, std::ios::trunc);
    g << "generation,phase,evolving,mean_training_fitness\n";
  }
  if (fresh || !std::filesystem::exists(phase_path_)) {
    std::ofstream p(phase_path_, std::ios::trunc);
    p << "phase,end_generation,evolving,population_mean_fitness,turnover,"
         "selected_opponents,selected_agents\n";
  }
}

void TelemetrySinks::write_generation(const GenerationTelemetry& t) {
  std::ofstream out(gen_path_, std::ios::app);
  out << t.generation << "," << t.phase << "," << to_string(t.evolving) << ","
      << format_double(t.mean_training_fitness) << "\n";
}

void TelemetrySinks::write_phase(const PhaseReport& r) {
  std::ofstream out(phase_path_, std::ios::app);
  auto join = [](const std::vector<std::uint64_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ' ';
      s += std::to_string(v[i]);
    }
    return s;
  };
  out << r.phase << "," << r.end_generation << "," << to_string(r.evolving) << ","
      << format_double(r.population_mean_fitness) << "," << r.turnover << ","
      << join(r.selected_opponent_ids) << "," << join(r.selected_agent_ids) << "\n";
}

}  // namespace coevo
