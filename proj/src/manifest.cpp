#include "coevo/manifest.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace coevo {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw std::invalid_argument("manifest: key '" + key + "': " + why);
}

void check_keys(const json& obj, const std::string& scope, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.contains(it.key()))
      fail(scope.empty() ? it.key() : scope + "." + it.key(), "unknown key");
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(key, "wrong type");
  }
}

void parse_robot(const json& obj, const std::string& scope, RobotSpec& spec) {
  check_keys(obj, scope,
             {"body_radius", "wheel_radius", "axle_track", "max_speed", "ir_range", "ground_offset"});
  spec.body_radius = get_or(obj, "body_radius", spec.body_radius);
  spec.wheel_radius = get_or(obj, "wheel_radius", spec.wheel_radius);
  spec.axle_track = get_or(obj, "axle_track", spec.axle_track);
  spec.max_speed = get_or(obj, "max_speed", spec.max_speed);
  spec.ir_range = get_or(obj, "ir_range", spec.ir_range);
  spec.ground_offset = get_or(obj, "ground_offset", spec.ground_offset);
  if (spec.body_radius <= 0.0) fail(scope + ".body_radius", "must be > 0");
  if (spec.max_speed <= 0.0) fail(scope + ".max_speed", "must be > 0");
  if (spec.axle_track > 2.0 * spec.body_radius)
    fail(scope + ".axle_track", "must not exceed the body diameter");
}

}  // namespace

std::uint64_t manifest_hash(const ExperimentManifest& manifest) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : manifest.canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ExperimentManifest parse_manifest(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("manifest: document must be a JSON object");
  check_keys(doc, "",
             {"variant", "master_seed", "N", "n", "nphases", "ngenerations", "invert_every",
              "mutation_rate", "archive_every", "episodes_per_pair", "episode_steps",
              "sensor_noise", "allow_backward", "workers", "topology", "arena", "predator",
              "prey", "output_dir"});

  ExperimentManifest m;
  EvolutionConfig& cfg = m.config;

  if (!doc.contains("variant")) fail("variant", "required");
  std::string variant = doc.at("variant").get<std::string>();
  if (variant == "standard")
    cfg.variant = Variant::standard;
  else if (variant == "simplified")
    cfg.variant = Variant::simplified;
  else if (variant == "vanilla")
    cfg.variant = Variant::vanilla;
  else
    fail("variant", "must be standard, simplified or vanilla");

  if (!doc.contains("master_seed")) fail("master_seed", "required");
  cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();

  cfg.population_size = get_or(doc, "N", cfg.population_size);
  if (cfg.variant == Variant::vanilla)
    cfg.subset_size = get_or(doc, "n", cfg.population_size);
  else
    cfg.subset_size = get_or(doc, "n", cfg.subset_size);
  cfg.nphases = get_or(doc, "nphases", cfg.nphases);
  cfg.ngenerations = get_or(doc, "ngenerations", cfg.ngenerations);
  cfg.invert_every = get_or(doc, "invert_every", cfg.invert_every);
  cfg.mutation_rate = get_or(doc, "mutation_rate", cfg.mutation_rate);
  cfg.archive_every = get_or(doc, "archive_every", cfg.archive_every);
  cfg.episodes_per_pair = get_or(doc, "episodes_per_pair", cfg.episodes_per_pair);
  cfg.episode.max_steps = get_or(doc, "episode_steps", cfg.episode.max_steps);
  cfg.episode.sensor_noise = get_or(doc, "sensor_noise", cfg.episode.sensor_noise);
  cfg.episode.allow_backward = get_or(doc, "allow_backward", cfg.episode.allow_backward);
  cfg.workers = get_or(doc, "workers", cfg.workers);
  m.output_dir = get_or<std::string>(doc, "output_dir", m.output_dir);

  if (doc.contains("topology")) {
    const json& t = doc.at("topology");
    check_keys(t, "topology", {"n_sensory", "n_hidden", "n_motor"});
    cfg.episode.topology.n_sensory = get_or(t, "n_sensory", cfg.episode.topology.n_sensory);
    cfg.episode.topology.n_hidden = get_or(t, "n_hidden", cfg.episode.topology.n_hidden);
    cfg.episode.topology.n_motor = get_or(t, "n_motor", cfg.episode.topology.n_motor);
  }
  if (doc.contains("arena")) {
    const json& a = doc.at("arena");
    check_keys(a, "arena", {"side", "cylinder"});
    cfg.episode.arena.side = get_or(a, "side", cfg.episode.arena.side);
    if (cfg.episode.arena.side <= 0.0) fail("arena.side", "must be > 0");
    if (a.contains("cylinder")) {
      const json& c = a.at("cylinder");
      check_keys(c, "arena.cylinder", {"enabled", "diameter", "occludes_vision"});
      auto& cyl = cfg.episode.arena.cylinder;
      cyl.enabled = get_or(c, "enabled", cyl.enabled);
      cyl.diameter = get_or(c, "diameter", cyl.diameter);
      cyl.occludes_vision = get_or(c, "occludes_vision", cyl.occludes_vision);
      if (cyl.diameter >= cfg.episode.arena.side)
        fail("arena.cylinder.diameter", "must be smaller than the arena side");
    }
  }
  if (doc.contains("predator")) parse_robot(doc.at("predator"), "predator", cfg.episode.predator);
  if (doc.contains("prey")) parse_robot(doc.at("prey"), "prey", cfg.episode.prey);

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }

  m.canonical = doc.dump();
  return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("manifest: parse error in " + path.string() + ": " + e.what());
  }
  return parse_manifest(doc);
}

}  // namespace coevo
