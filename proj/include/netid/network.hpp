#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "netid/poly.hpp"

namespace netid {

struct NoiseSpec {
  RationalTF H;           // monic num/den, stable and minimum phase
  double variance = 0.0;  // driving white-noise variance, >= 0
};

// Linear dynamic network: w_j = sum_k G_jk w_k + r_j + H_j e_j over nodes
// 1..L. Modules are strictly proper; node indices are 1-based everywhere.
struct NetworkModel {
  int L = 0;
  std::map<std::pair<int, int>, RationalTF> modules;  // (to j, from k)
  std::vector<NoiseSpec> noise;                       // noise[j-1]
  std::vector<int> references;  // nodes with an external excitation, sorted

  bool has_reference(int node) const;
  const RationalTF& module(int j, int k) const;
  // Nodes feeding j (the in-neighborhood), ascending.
  std::vector<int> inputs_of(int j) const;
};

struct ValidationReport {
  std::vector<std::string> violations;
  double state_spectral_radius = 0.0;  // of the interconnection recursion
  double min_det_on_circle = 0.0;      // min |det(I - G)| over the grid
  int det_winding = 0;                 // winding number of det(I - G) on it
  bool ok() const { return violations.empty(); }
};

// Structural checks (index ranges, strict properness, monic/stable/minimum-
// phase noise models, no self-loops, nonnegative variances) plus closed-loop
// stability: spectral radius of the interconnection state matrix < 1 and all
// zeros of det(I - G(z)) strictly inside the unit circle.
ValidationReport validate(const NetworkModel& net);

struct DataRecord {
  int N = 0;
  Eigen::MatrixXd w;  // N x L node signals
  Eigen::MatrixXd r;  // N x L references (zero where absent)
  std::uint64_t seed = 0;
};

// DataRecord plus the white-noise draws that generated it (for diagnostics).
struct SimulationRecord {
  DataRecord data;
  Eigen::MatrixXd e;  // N x L
};

struct SimulateOptions {
  int warmup = 500;           // discarded initial samples
  double ref_variance = 1.0;  // white references at the reference nodes
};

// Run the network recursion from zero initial conditions with per-node
// deterministic noise/reference substreams of `seed`. Throws InvalidNetwork
// if validate() reports violations.
SimulationRecord simulate_full(const NetworkModel& net, int N,
                               std::uint64_t seed,
                               const SimulateOptions& opts = {});
DataRecord simulate(const NetworkModel& net, int N, std::uint64_t seed,
                    const SimulateOptions& opts = {});

// One-step-ahead predictor filters of the rewritten node-j equation in which
// anti-stable module denominators are moved into an all-pass factor: with
// F_a the product of the anti-stable factors over all k in N_j and F_a* its
// mirror, Psi = H_j^{-1} F_a / F_a*, the filters are
//   M_j   = 1 - Psi / F_ji^{(s)} * prod_{k != i} F_jk^{(a)}   (self filter)
//   M_jk  = Psi G_jk * (anti-stable part of F_jk cancelled)   (k != i)
// and the prediction residual is white with variance sigma_bar2 =
// |trailing coeff of F_a|^2 * sigma_j^2. All returned filters are stable.
struct TruthPredictorFilters {
  RationalTF Mj;
  std::map<int, RationalTF> Mjk;  // k in N_j \ {i}
  double sigma_bar2 = 0.0;
  Poly Fbar_ji;  // F_ji - 1 (coefficients of the target denominator tail)
  Poly B_ji;     // target numerator
};
TruthPredictorFilters truth_predictor_filters(const NetworkModel& net, int j,
                                              int i);

// Same rewrite when every module of node j is modelled nonparametrically:
// M_j = 1 - Psi and M_jk = Psi G_jk for all k in N_j.
struct MisoGpFilters {
  RationalTF Mj;
  std::map<int, RationalTF> Mjk;  // all k in N_j
  double sigma_bar2 = 0.0;
};
MisoGpFilters miso_gp_filters(const NetworkModel& net, int j);

// Built-in benchmark networks: "case1" (all modules stable) and "case2"
// (same topology, target and one other module of node 3 unstable).
NetworkModel builtin_case(const std::string& name);

}  // namespace netid
