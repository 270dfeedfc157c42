#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "netid/network.hpp"

namespace netid {

// Box-Jenkins prediction-error baseline for the node-j MISO problem:
// w_j = sum_k (B_k/F_k) w_k + (C/D) e, all orders fixed a priori.
struct PemOrders {
  int n_b = 1;
  int n_f = 0;
};

struct PemSpec {
  int j = 0;
  std::vector<int> inputs;          // ascending node indices
  std::map<int, PemOrders> orders;  // one entry per input
  int n_c = 0;                      // noise numerator order
  int n_d = 0;                      // noise denominator order
};

struct PemModule {
  std::vector<double> b;  // lags 1..n_b
  std::vector<double> f;  // lags 1..n_f
};

struct PemResult {
  std::map<int, PemModule> modules;
  std::vector<double> c, d;  // noise model coefficients, lags 1..
  double sigma2 = 0.0;       // prediction-error variance at the optimum
  double sse = 0.0;
  int best_start = -1;
  std::vector<double> start_sse;  // per start; NaN where abandoned
  bool converged = false;
  int iterations = 0;
};

struct PemOptions {
  int multistart = 5;
  std::uint64_t seed = 0;
  int max_iter = 200;
  double grad_tol = 1e-9;
};

// Damped Gauss-Newton on the one-step prediction error with exact
// sensitivity-filter Jacobians. Starts that cannot keep the predictor
// stable (F_k or C roots outside the unit circle) are abandoned. Throws
// UnstablePredictor if every start is abandoned.
PemResult direct_pem(const DataRecord& data, const PemSpec& spec,
                     const PemOptions& opts = {});

}  // namespace netid
