#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netid/ebdm.hpp"
#include "netid/network.hpp"
#include "netid/nonparam.hpp"
#include "netid/pem.hpp"

namespace netid {

// Goodness of fit 1 - ||truth - est|| / ||truth - mean(truth)||; 1 is a
// perfect match, 0 matches the constant mean, negative is worse than that.
// Throws ConstantTruth when the reference has no variation.
double fit_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& est);
double fit_score(const std::vector<double>& truth,
                 const std::vector<double>& est);

struct MCOptions {
  int runs = 20;
  int N = 500;
  std::uint64_t seed = 1;
  int threads = 1;
  bool run_ebdm = true;
  bool run_nonparam = false;
  bool run_baseline = false;
  int l = 100;
  int ir_taps = 100;
  EmOptions em;
  NonparamOptions np;
  PemOptions pem;
  // Override one node's noise variance before simulating (for noise sweeps);
  // node <= 0 leaves the network untouched.
  int override_node = 0;
  double override_variance = 0.0;
};

struct MethodRun {
  bool ok = false;
  std::string error;
  std::optional<double> fit_ir;      // impulse-response fit of the target
  std::optional<double> fit_par;     // parameter fit (parametric methods)
  std::vector<double> theta;
  std::optional<double> sigma2;
  int iterations = 0;
};

struct MethodSummary {
  std::string name;
  std::vector<MethodRun> runs;
  int failed = 0;
  std::optional<double> median_fit_ir, median_fit_par;
  std::vector<double> mean_theta, std_theta;
  std::optional<double> mean_sigma2;
};

struct MCSummary {
  MCOptions opts;
  int j = 0, i = 0;
  std::vector<std::uint64_t> run_seeds;
  std::vector<double> theta_true;
  std::vector<MethodSummary> methods;
};

// Repeated simulate-and-identify experiment on one network with target
// module i -> j. Orders and MISO inputs are read off the true network
// (known-model-order setting). Run r uses the substream (seed, r); results
// are reduced in run order, so thread count never changes the output.
MCSummary run_montecarlo(const NetworkModel& net, int j, int i,
                         const MCOptions& opts);

}  // namespace netid
