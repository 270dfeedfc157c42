#include "netid/network.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <sstream>

#include "netid/errors.hpp"
#include "netid/rng.hpp"

namespace netid {

bool NetworkModel::has_reference(int node) const {
  return std::binary_search(references.begin(), references.end(), node);
}

const RationalTF& NetworkModel::module(int j, int k) const {
  auto it = modules.find({j, k});
  if (it == modules.end()) throw Error("no module between the given nodes");
  return it->second;
}

std::vector<int> NetworkModel::inputs_of(int j) const {
  std::vector<int> in;
  for (const auto& [key, g] : modules)
    if (key.first == j) in.push_back(key.second);
  std::sort(in.begin(), in.end());
  return in;
}

namespace {

constexpr double kStabilityTol = 1e-9;

bool poly_stable(const Poly& p, double margin = kStabilityTol) {
  if (p.degree() == 0) return true;
  for (const auto& z : roots(p))
    if (std::abs(z) >= 1.0 - margin) return false;
  return true;
}

// State matrix of the interconnection recursion run by simulate(): states are
// lagged module outputs y_jk and lagged node signals w_k.
Eigen::MatrixXd interconnection_state_matrix(const NetworkModel& net) {
  struct ModInfo {
    int j, k, nb, nf, ystart;
  };
  std::vector<ModInfo> mods;
  std::vector<int> wlag(net.L + 1, 0);
  int dim = 0;
  for (const auto& [key, g] : net.modules) {
    ModInfo m{key.first, key.second, g.num().degree(), g.den().degree(), 0};
    wlag[m.k] = std::max(wlag[m.k], m.nb);
    mods.push_back(m);
  }
  for (auto& m : mods) {
    m.ystart = dim;
    dim += m.nf;
  }
  std::vector<int> wstart(net.L + 1, -1);
  for (int k = 1; k <= net.L; ++k) {
    wstart[k] = dim;
    dim += wlag[k];
  }
  if (dim == 0) return Eigen::MatrixXd::Zero(0, 0);

  // Row of coefficients expressing y_jk(t) in terms of the state.
  auto module_row = [&](const ModInfo& m) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dim);
    const auto& g = net.module(m.j, m.k);
    for (int lag = 1; lag <= m.nb; ++lag)
      row(wstart[m.k] + lag - 1) += g.num().at(lag);
    for (int lag = 1; lag <= m.nf; ++lag)
      row(m.ystart + lag - 1) -= g.den().at(lag);
    return row;
  };
  // w_j(t) = sum over modules into j of y_jk(t)  (exogenous terms dropped).
  auto node_row = [&](int j) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dim);
    for (const auto& m : mods)
      if (m.j == j) row += module_row(m);
    return row;
  };

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& m : mods) {
    if (m.nf == 0) continue;
    A.row(m.ystart) = module_row(m);
    for (int lag = 2; lag <= m.nf; ++lag)
      A(m.ystart + lag - 1, m.ystart + lag - 2) = 1.0;
  }
  for (int k = 1; k <= net.L; ++k) {
    if (wlag[k] == 0) continue;
    A.row(wstart[k]) = node_row(k);
    for (int lag = 2; lag <= wlag[k]; ++lag)
      A(wstart[k] + lag - 1, wstart[k] + lag - 2) = 1.0;
  }
  return A;
}

// Numerator polynomial of det(I - G(z)) over the common denominator
// prod of all module denominators (Leibniz expansion).
Poly det_numerator(const NetworkModel& net) {
  std::vector<int> perm(net.L);
  std::iota(perm.begin(), perm.end(), 1);
  Poly acc({0.0});
  do {
    int inversions = 0;
    for (int a = 0; a < net.L; ++a)
      for (int b = a + 1; b < net.L; ++b)
        if (perm[a] > perm[b]) ++inversions;
    const double sign = (inversions % 2 == 0) ? 1.0 : -1.0;

    bool zero_term = false;
    Poly term = Poly::one();
    for (int j = 1; j <= net.L && !zero_term; ++j) {
      const int k = perm[j - 1];
      if (k == j) continue;  // diagonal entry of I - G is 1
      auto it = net.modules.find({j, k});
      if (it == net.modules.end()) {
        zero_term = true;
      } else {
        term = multiply(term, scale(it->second.num(), -1.0));
      }
    }
    if (zero_term) continue;
    for (const auto& [key, g] : net.modules)
      if (perm[key.first - 1] != key.second) term = multiply(term, g.den());
    acc = add(acc, scale(term, sign));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc;
}

std::complex<double> det_on_circle(const NetworkModel& net, double omega) {
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(net.L, net.L);
  for (const auto& [key, g] : net.modules)
    M(key.first - 1, key.second - 1) -= freq_response(g, omega);
  return M.determinant();
}

}  // namespace

ValidationReport validate(const NetworkModel& net) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& s) { rep.violations.push_back(s); };

  if (net.L < 1) {
    fail("network needs at least one node");
    return rep;
  }
  if (static_cast<int>(net.noise.size()) != net.L)
    fail("noise model count does not match the node count");

  for (const auto& [key, g] : net.modules) {
    const auto [j, k] = key;
    std::ostringstream id;
    id << "module (" << j << "," << k << ")";
    if (j < 1 || j > net.L || k < 1 || k > net.L) {
      fail(id.str() + " has a node index out of range");
      continue;
    }
    if (j == k) fail(id.str() + " is a self-loop");
    if (!g.strictly_proper()) fail(id.str() + " is not strictly proper");
    if (!g.den().is_monic()) fail(id.str() + " denominator is not monic");
    try {
      factor_stability(g.den());
    } catch (const RootOnUnitCircle&) {
      fail(id.str() + " has a pole on the unit circle");
    }
  }

  for (int j = 1; j <= static_cast<int>(net.noise.size()); ++j) {
    const auto& ns = net.noise[j - 1];
    std::ostringstream id;
    id << "noise model of node " << j;
    if (ns.H.num().at(0) != 1.0 || !ns.H.den().is_monic())
      fail(id.str() + " is not monic");
    if (!poly_stable(ns.H.den())) fail(id.str() + " is unstable");
    if (!poly_stable(ns.H.num())) fail(id.str() + " is not minimum phase");
    if (!(ns.variance >= 0.0)) fail(id.str() + " has a negative variance");
  }

  for (size_t a = 0; a < net.references.size(); ++a) {
    const int node = net.references[a];
    if (node < 1 || node > net.L) fail("reference node index out of range");
    if (a > 0 && net.references[a] <= net.references[a - 1])
      fail("reference nodes must be sorted and unique");
  }
  if (!rep.violations.empty()) return rep;

  const Eigen::MatrixXd A = interconnection_state_matrix(net);
  if (A.rows() > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    rep.state_spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  if (rep.state_spectral_radius >= 1.0 - kStabilityTol) {
    std::ostringstream s;
    s << "closed loop unstable: interconnection spectral radius "
      << rep.state_spectral_radius;
    fail(s.str());
  }

  if (net.L <= 8 && !net.modules.empty()) {
    const Poly num = det_numerator(net);
    bool all_zero = true;
    for (double c : num.coeffs()) all_zero = all_zero && c == 0.0;
    if (all_zero) {
      fail("network interconnection is singular");
      return rep;
    }
    int inside_num = 0;
    for (const auto& z : roots(num)) {
      if (std::abs(z) >= 1.0 - kStabilityTol) {
        std::ostringstream s;
        s << "closed-loop pole at |z| = " << std::abs(z);
        fail(s.str());
      } else {
        ++inside_num;
      }
    }
    int inside_den = 0;
    for (const auto& [key, g] : net.modules)
      for (const auto& z : roots(g.den()))
        if (std::abs(z) < 1.0) ++inside_den;

    // In the z-plane, det(I - G(z)) = z^(T-D) * ztrans(num) / prod of
    // ztrans(den_k), with T the summed denominator degree and D the
    // numerator degree in q^-1; T - D extra zeros (or poles) sit at z = 0.
    int total_den_degree = 0;
    for (const auto& [key, g] : net.modules)
      total_den_degree += static_cast<int>(g.den().coeffs().size()) - 1;
    const int origin_order =
        total_den_degree - (static_cast<int>(num.coeffs().size()) - 1);

    constexpr int kGrid = 512;
    rep.min_det_on_circle = std::numeric_limits<double>::infinity();
    double arg_sum = 0.0;
    std::complex<double> prev = det_on_circle(net, 0.0);
    for (int m = 1; m <= kGrid; ++m) {
      const std::complex<double> d =
          det_on_circle(net, 2.0 * M_PI * m / kGrid);
      rep.min_det_on_circle =
          std::min(rep.min_det_on_circle, std::abs(prev));
      arg_sum += std::arg(d / prev);
      prev = d;
    }
    rep.det_winding = static_cast<int>(std::lround(arg_sum / (2.0 * M_PI)));
    if (rep.min_det_on_circle < 1e-9)
      fail("det(I - G) vanishes on the unit circle");
    else if (rep.violations.empty() &&
             rep.det_winding != inside_num + origin_order - inside_den)
      fail("determinant winding inconsistent with pole-zero counts");
  }
  return rep;
}

SimulationRecord simulate_full(const NetworkModel& net, int N,
                               std::uint64_t seed,
                               const SimulateOptions& opts) {
  if (N < 1) throw Error("sample count must be >= 1");
  if (opts.warmup < 0) throw Error("warm-up must be >= 0");
  const ValidationReport rep = validate(net);
  if (!rep.ok()) {
    std::string msg = "invalid network:";
    for (const auto& v : rep.violations) msg += " [" + v + "]";
    throw InvalidNetwork(msg);
  }

  const int total = opts.warmup + N;
  const int L = net.L;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(total, L);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(total, L);
  for (int j = 1; j <= L; ++j) {
    NormalRng noise_rng(substream_seed(seed, j, 0));
    const double sd = std::sqrt(net.noise[j - 1].variance);
    for (int t = 0; t < total; ++t) e(t, j - 1) = sd * noise_rng.normal();
    if (net.has_reference(j)) {
      NormalRng ref_rng(substream_seed(seed, j, 1));
      const double rsd = std::sqrt(opts.ref_variance);
      for (int t = 0; t < total; ++t) r(t, j - 1) = rsd * ref_rng.normal();
    }
  }

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(total, L);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(total, L);
  std::vector<std::pair<std::pair<int, int>, Eigen::VectorXd>> y;
  y.reserve(net.modules.size());
  for (const auto& [key, g] : net.modules)
    y.emplace_back(key, Eigen::VectorXd::Zero(total));

  for (int t = 0; t < total; ++t) {
    for (int j = 1; j <= L; ++j) {
      const auto& H = net.noise[j - 1].H;
      double acc = 0.0;
      for (int m = 0; m <= H.num().degree() && m <= t; ++m)
        acc += H.num().at(m) * e(t - m, j - 1);
      for (int m = 1; m <= H.den().degree() && m <= t; ++m)
        acc -= H.den().at(m) * v(t - m, j - 1);
      v(t, j - 1) = acc;
    }
    for (auto& [key, yv] : y) {
      const auto& g = net.module(key.first, key.second);
      double acc = 0.0;
      for (int m = 1; m <= g.num().degree() && m <= t; ++m)
        acc += g.num().at(m) * w(t - m, key.second - 1);
      for (int m = 1; m <= g.den().degree() && m <= t; ++m)
        acc -= g.den().at(m) * yv(t - m);
      yv(t) = acc;
    }
    for (int j = 1; j <= L; ++j) {
      double acc = r(t, j - 1) + v(t, j - 1);
      for (auto& [key, yv] : y)
        if (key.first == j) acc += yv(t);
      w(t, j - 1) = acc;
    }
  }
  if (!w.allFinite())
    throw IllConditioned("simulation produced non-finite samples");

  SimulationRecord rec;
  rec.data.N = N;
  rec.data.seed = seed;
  rec.data.w = w.bottomRows(N);
  rec.data.r = r.bottomRows(N);
  rec.e = e.bottomRows(N);
  return rec;
}

DataRecord simulate(const NetworkModel& net, int N, std::uint64_t seed,
                    const SimulateOptions& opts) {
  return simulate_full(net, N, seed, opts).data;
}

namespace {

struct NodeFactors {
  std::vector<int> inputs;
  std::map<int, StabilityFactorization> fact;  // per input denominator
  Poly Fa;                                     // product of anti-stable parts
  Poly FaStar;                                 // its mirror
  double sigma_bar2;
};

NodeFactors node_factors(const NetworkModel& net, int j) {
  if (j < 1 || j > net.L) throw Error("node index out of range");
  NodeFactors nf;
  nf.inputs = net.inputs_of(j);
  if (nf.inputs.empty()) throw Error("node has no incoming modules");
  nf.Fa = Poly::one();
  for (int k : nf.inputs) {
    auto f = factor_stability(net.module(j, k).den());
    nf.Fa = multiply(nf.Fa, f.antistable);
    nf.fact.emplace(k, std::move(f));
  }
  nf.FaStar =
      nf.Fa.degree() > 0 ? mirror_antistable(nf.Fa) : Poly::one();
  const double trailing = nf.Fa.coeffs().back();
  nf.sigma_bar2 = trailing * trailing * net.noise[j - 1].variance;
  return nf;
}

RationalTF check_stable(RationalTF tf, const char* what) {
  if (!poly_stable(tf.den(), 1e-8))
    throw InvalidNetwork(std::string(what) + " filter is unstable");
  return tf;
}

}  // namespace

TruthPredictorFilters truth_predictor_filters(const NetworkModel& net, int j,
                                              int i) {
  const NodeFactors nf = node_factors(net, j);
  if (!std::binary_search(nf.inputs.begin(), nf.inputs.end(), i))
    throw Error("target input is not an in-neighbor of the output node");
  const auto& H = net.noise[j - 1].H;
  const Poly& C = H.num();
  const Poly& D = H.den();

  TruthPredictorFilters out;
  out.sigma_bar2 = nf.sigma_bar2;
  const auto& gi = net.module(j, i);
  out.B_ji = gi.num();
  out.Fbar_ji = subtract(gi.den(), Poly::one());

  // Anti-stable parts of all inputs but `skip`, times `extra`.
  auto anti_except = [&](int skip) {
    Poly p = Poly::one();
    for (int k : nf.inputs)
      if (k != skip) p = multiply(p, nf.fact.at(k).antistable);
    return p;
  };

  out.Mj = check_stable(
      one_minus(RationalTF(
          multiply(D, anti_except(i)),
          multiply(C, multiply(nf.FaStar, nf.fact.at(i).stable)))),
      "self predictor");
  for (int k : nf.inputs) {
    if (k == i) continue;
    const auto& g = net.module(j, k);
    out.Mjk.emplace(
        k, check_stable(
               RationalTF(multiply(D, multiply(g.num(), anti_except(k))),
                          multiply(C, multiply(nf.FaStar,
                                               nf.fact.at(k).stable))),
               "input predictor"));
  }
  return out;
}

MisoGpFilters miso_gp_filters(const NetworkModel& net, int j) {
  const NodeFactors nf = node_factors(net, j);
  const auto& H = net.noise[j - 1].H;
  const Poly& C = H.num();
  const Poly& D = H.den();

  MisoGpFilters out;
  out.sigma_bar2 = nf.sigma_bar2;
  out.Mj = check_stable(
      one_minus(RationalTF(multiply(D, nf.Fa), multiply(C, nf.FaStar))),
      "self predictor");
  for (int k : nf.inputs) {
    Poly anti_rest = Poly::one();
    for (int m : nf.inputs)
      if (m != k) anti_rest = multiply(anti_rest, nf.fact.at(m).antistable);
    out.Mjk.emplace(
        k,
        check_stable(RationalTF(multiply(D, multiply(net.module(j, k).num(),
                                                     anti_rest)),
                                multiply(C, multiply(nf.FaStar,
                                                     nf.fact.at(k).stable))),
                     "input predictor"));
  }
  return out;
}

NetworkModel builtin_case(const std::string& name) {
  const bool case1 = name == "case1";
  if (!case1 && name != "case2")
    throw Error("unknown built-in network: " + name);

  auto tf = [](std::vector<double> num, std::vector<double> den) {
    return RationalTF(Poly(std::move(num)), Poly(std::move(den)));
  };

  NetworkModel net;
  net.L = 4;
  if (case1) {
    net.modules.emplace(std::make_pair(3, 1),
                        tf({0.0, 1.0, 0.05}, {1.0, 1.0, 0.6}));
    net.modules.emplace(std::make_pair(3, 2), tf({0.0, 0.09}, {1.0, 0.5}));
  } else {
    net.modules.emplace(std::make_pair(3, 1),
                        tf({0.0, 1.0, 0.05}, {1.0, 1.7, 1.073}));
    net.modules.emplace(
        std::make_pair(3, 2),
        tf({0.0, -0.7339, -0.1256, 0.04023, 0.011},
           {1.0, -1.089, -0.104, 0.052, 0.011}));
  }
  net.modules.emplace(
      std::make_pair(3, 4),
      tf({0.0, 1.184, -0.647, 0.151, -0.082},
         {1.0, -0.8, 0.279, -0.048, 0.01}));
  net.modules.emplace(std::make_pair(1, 4), tf({0.0, 0.4, -0.5}, {1.0, 0.3}));
  net.modules.emplace(std::make_pair(2, 1), tf({0.0, 0.4, -0.5}, {1.0, 0.3}));
  net.modules.emplace(std::make_pair(1, 2), tf({0.0, 0.4, 0.5}, {1.0, 0.3}));
  net.modules.emplace(std::make_pair(2, 3), tf({0.0, 0.4, 0.5}, {1.0, 0.3}));

  net.noise.resize(4);
  net.noise[0] = {tf({1.0}, {1.0, 0.2}), 0.05};
  net.noise[1] = {tf({1.0}, {1.0, 0.3}), 0.08};
  net.noise[2] = {tf({1.0, -0.505, 0.155, -0.01}, {1.0, -0.729, 0.236, -0.019}),
                  case1 ? 0.5 : 0.1};
  net.noise[3] = {tf({1.0}, {1.0}), 0.1};
  net.references = {2, 4};
  return net;
}

}  // namespace netid
