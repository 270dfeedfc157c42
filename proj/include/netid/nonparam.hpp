#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "netid/ebdm.hpp"
#include "netid/network.hpp"

namespace netid {

struct NonparamOptions {
  int max_iter = 200;
  double tol = 1e-3;
  double beta_min = 1e-4;
  double beta_max = 1.0 - 1e-6;
  int ir_taps = 100;  // length of the recovered module impulse responses
};

// Fully nonparametric variant: every predictor filter of the node-j equation
// (the self filter and one filter per input) is a GP; no theta.
struct NonparamResult {
  int j = 0;
  std::vector<int> inputs;  // GP input nodes, in the order of the blocks
  Eigen::VectorXd lambda, beta;  // block 0 = self filter, then inputs
  double sigma2 = 0.0;
  EMTrace trace;
  std::vector<std::vector<double>> gp_ir;        // posterior means per block
  std::map<int, std::vector<double>> recovered;  // module IR per input node
};

// Undo the predictor filtering: given the self-filter taps m_self (lags
// 1..l of M_j) and the taps of M_jk, return the module impulse response
// G_jk = M_jk / (1 - M_j) from lag 0, by long division.
std::vector<double> recover_module_ir(const std::vector<double>& m_self,
                                      const std::vector<double>& m_input,
                                      int taps);

NonparamResult identify_nonparametric(const DataRecord& data, int j,
                                      const std::vector<int>& inputs, int l,
                                      const NonparamOptions& opts = {});

}  // namespace netid
