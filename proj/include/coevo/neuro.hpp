#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coevo/rng.hpp"

namespace coevo {

inline constexpr double kGeneMin = -5.0;
inline constexpr double kGeneMax = 5.0;

// Layer sizes of the recurrent controller. The gene count is derived from the
// topology alone: sensory->hidden weights, hidden->hidden recurrent weights,
// hidden->motor weights, hidden biases, motor biases.
struct ControllerTopology {
  int n_sensory = 25;
  int n_hidden = 10;
  int n_motor = 2;

  int gene_count() const {
    return n_sensory * n_hidden + n_hidden * n_hidden + n_hidden * n_motor +
           n_hidden + n_motor;
  }

  bool operator==(const ControllerTopology&) const = default;

  // throws std::invalid_argument on non-positive layer sizes
  void validate() const;
};

// Flat gene vector with a stable id. Gene layout (see gene_count):
//   [0)                sensory->hidden, sensor-major: w_sh[i*H + j]
//   [S*H)              hidden->hidden, source-major:  w_hh[k*H + j]
//   [S*H + H*H)        hidden->motor, hidden-major:   w_hm[j*M + m]
//   [.. + H*M)         hidden biases b_h[j]
//   [.. + H)           motor biases  b_m[m]
struct Genotype {
  std::uint64_t id = 0;
  std::vector<double> genes;
};

struct ControllerState {
  std::vector<double> hidden;  // activations in (0,1); reset state is all zeros

  static ControllerState zero(const ControllerTopology& topo) {
    return ControllerState{std::vector<double>(topo.n_hidden, 0.0)};
  }
};

struct MotorCommand {
  double tm = 0.0;  // translational, [0,1]
  double rm = 0.0;  // rotational, [0,1]
};

// Every gene independently uniform in [kGeneMin, kGeneMax].
Genotype random_genotype(const ControllerTopology& topo, Rng& rng, std::uint64_t id);

// Per-gene Bernoulli replacement at `rate` with a fresh uniform value;
// unreplaced genes are copied exactly. Throws on rate outside [0,1].
Genotype mutate(const Genotype& parent, double rate, Rng& rng, std::uint64_t id);

// One synchronous update: hidden' = sigma(W_sh s + W_hh hidden + b_h),
// motors = sigma(W_hm hidden' + b_m). Pure given (genes, state, sensory).
MotorCommand network_step(const ControllerTopology& topo, const Genotype& genotype,
                          ControllerState& state, std::span<const double> sensory);

}  // namespace coevo
