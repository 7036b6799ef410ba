#include "coevo/neuro.hpp"

#include <cmath>
#include <stdexcept>

namespace coevo {

void ControllerTopology::validate() const {
  if (n_sensory < 1 || n_hidden < 1 || n_motor < 1)
    throw std::invalid_argument("topology: all layer sizes must be >= 1");
}

Genotype random_genotype(const ControllerTopology& topo, Rng& rng, std::uint64_t id) {
  topo.validate();
  Genotype g;
  g.id = id;
  g.genes.resize(static_cast<std::size_t>(topo.gene_count()));
  for (double& v : g.genes) v = rng.uniform(kGeneMin, kGeneMax);
  return g;
}

Genotype mutate(const Genotype& parent, double rate, Rng& rng, std::uint64_t id) {
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("mutation rate must be in [0,1]");
  Genotype child;
  child.id = id;
  child.genes = parent.genes;
  for (double& v : child.genes) {
    // draw order: one bernoulli, then the replacement value only when hit
    if (rng.bernoulli(rate)) v = rng.uniform(kGeneMin, kGeneMax);
  }
  return child;
}

static double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

MotorCommand network_step(const ControllerTopology& topo, const Genotype& genotype,
                          ControllerState& state, std::span<const double> sensory) {
  const int S = topo.n_sensory, H = topo.n_hidden, M = topo.n_motor;
  if (static_cast<int>(sensory.size()) != S)
    throw std::invalid_argument("network_step: sensory length mismatch");
  if (static_cast<int>(genotype.genes.size()) != topo.gene_count())
    throw std::invalid_argument("network_step: genotype length mismatch");

  const double* g = genotype.genes.data();
  const double* w_sh = g;
  const double* w_hh = w_sh + S * H;
  const double* w_hm = w_hh + H * H;
  const double* b_h = w_hm + H * M;
  const double* b_m = b_h + H;

  std::vector<double> next(static_cast<std::size_t>(H));
  for (int j = 0; j < H; ++j) {
    double sum = b_h[j];
    for (int i = 0; i < S; ++i) sum += sensory[i] * w_sh[i * H + j];
    for (int k = 0; k < H; ++k) sum += state.hidden[k] * w_hh[k * H + j];
    next[static_cast<std::size_t>(j)] = logistic(sum);
  }
  state.hidden = std::move(next);

  MotorCommand out;
  double motors[2] = {0.0, 0.0};
  for (int m = 0; m < M && m < 2; ++m) {
    double sum = b_m[m];
    for (int j = 0; j < H; ++j) sum += state.hidden[static_cast<std::size_t>(j)] * w_hm[j * M + m];
    motors[m] = logistic(sum);
  }
  out.tm = motors[0];
  out.rm = motors[1];
  return out;
}

}  // namespace coevo
