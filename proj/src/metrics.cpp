#include "netid/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "netid/errors.hpp"
#include "netid/poly.hpp"
#include "netid/rng.hpp"

namespace netid {

double fit_score(const Eigen::VectorXd& truth, const Eigen::VectorXd& est) {
  if (truth.size() != est.size()) throw Error("fit length mismatch");
  if (truth.size() == 0) throw Error("fit of empty vectors");
  const double denom = (truth.array() - truth.mean()).matrix().norm();
  if (denom == 0.0)
    throw ConstantTruth("fit undefined for a constant reference");
  return 1.0 - (truth - est).norm() / denom;
}

double fit_score(const std::vector<double>& truth,
                 const std::vector<double>& est) {
  return fit_score(
      Eigen::Map<const Eigen::VectorXd>(truth.data(), truth.size()),
      Eigen::Map<const Eigen::VectorXd>(est.data(), est.size()));
}

namespace {

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void aggregate(MethodSummary& ms, int n_theta) {
  std::vector<double> firs, fpars, s2s;
  std::vector<std::vector<double>> thetas;
  for (const auto& r : ms.runs) {
    if (!r.ok) {
      ++ms.failed;
      continue;
    }
    if (r.fit_ir) firs.push_back(*r.fit_ir);
    if (r.fit_par) fpars.push_back(*r.fit_par);
    if (r.sigma2) s2s.push_back(*r.sigma2);
    if (!r.theta.empty()) thetas.push_back(r.theta);
  }
  ms.median_fit_ir = median(firs);
  ms.median_fit_par = median(fpars);
  if (!s2s.empty())
    ms.mean_sigma2 =
        std::accumulate(s2s.begin(), s2s.end(), 0.0) / s2s.size();
  if (!thetas.empty() && n_theta > 0) {
    ms.mean_theta.assign(n_theta, 0.0);
    ms.std_theta.assign(n_theta, 0.0);
    for (const auto& th : thetas)
      for (int m = 0; m < n_theta; ++m) ms.mean_theta[m] += th[m];
    for (int m = 0; m < n_theta; ++m) ms.mean_theta[m] /= thetas.size();
    if (thetas.size() > 1) {
      for (const auto& th : thetas)
        for (int m = 0; m < n_theta; ++m) {
          const double d = th[m] - ms.mean_theta[m];
          ms.std_theta[m] += d * d;
        }
      for (int m = 0; m < n_theta; ++m)
        ms.std_theta[m] = std::sqrt(ms.std_theta[m] / (thetas.size() - 1));
    }
  }
}

}  // namespace

MCSummary run_montecarlo(const NetworkModel& net, int j, int i,
                         const MCOptions& opts) {
  if (opts.runs < 1) throw Error("need at least one run");
  NetworkModel sim_net = net;
  if (opts.override_node > 0) {
    if (opts.override_node > net.L) throw Error("override node out of range");
    sim_net.noise[opts.override_node - 1].variance = opts.override_variance;
  }

  const RationalTF& target = sim_net.module(j, i);
  const int n_b = target.num().degree();
  const int n_f = target.den().degree();
  MCSummary sum;
  sum.opts = opts;
  sum.j = j;
  sum.i = i;
  for (int m = 1; m <= n_b; ++m) sum.theta_true.push_back(target.num().at(m));
  for (int m = 1; m <= n_f; ++m) sum.theta_true.push_back(target.den().at(m));
  const Eigen::Map<const Eigen::VectorXd> theta_true(sum.theta_true.data(),
                                                     sum.theta_true.size());
  const std::vector<double> truth_ir =
      impulse_response(target, opts.ir_taps);

  MISOSetup setup;
  setup.j = j;
  setup.i = i;
  for (int k : sim_net.inputs_of(j))
    if (k != i) setup.gp_inputs.push_back(k);
  setup.n_b = n_b;
  setup.n_f = n_f;
  setup.l = opts.l;

  PemSpec pem_spec;
  pem_spec.j = j;
  pem_spec.inputs = sim_net.inputs_of(j);
  for (int k : pem_spec.inputs)
    pem_spec.orders[k] = PemOrders{sim_net.module(j, k).num().degree(),
                                   sim_net.module(j, k).den().degree()};
  pem_spec.n_c = sim_net.noise[j - 1].H.num().degree();
  pem_spec.n_d = sim_net.noise[j - 1].H.den().degree();

  for (int r = 0; r < opts.runs; ++r)
    sum.run_seeds.push_back(substream_seed(opts.seed, r, 0x4D43ULL));

  struct RunOut {
    MethodRun ebdm, np, pem;
  };
  std::vector<RunOut> outs(opts.runs);

  auto one_run = [&](int r) {
    const DataRecord data = simulate(sim_net, opts.N, sum.run_seeds[r]);
    if (opts.run_ebdm) {
      MethodRun& mr = outs[r].ebdm;
      try {
        EmOptions em = opts.em;
        em.ir_taps = opts.ir_taps;
        em.init_seed = sum.run_seeds[r];
        const IdentResult res = identify(data, setup, em);
        mr.fit_ir = fit_score(
            Eigen::Map<const Eigen::VectorXd>(truth_ir.data(), opts.ir_taps),
            Eigen::Map<const Eigen::VectorXd>(res.target_ir.data(),
                                              opts.ir_taps));
        mr.fit_par = fit_score(theta_true, res.eta.theta);
        mr.theta.assign(res.eta.theta.data(),
                        res.eta.theta.data() + res.eta.theta.size());
        mr.sigma2 = res.eta.sigma2;
        mr.iterations = res.trace.iterations;
        mr.ok = true;
      } catch (const std::exception& e) {
        mr.error = e.what();
      }
    }
    if (opts.run_nonparam) {
      MethodRun& mr = outs[r].np;
      try {
        NonparamOptions np = opts.np;
        np.ir_taps = opts.ir_taps;
        const NonparamResult res =
            identify_nonparametric(data, j, sim_net.inputs_of(j), opts.l, np);
        mr.fit_ir = fit_score(truth_ir, res.recovered.at(i));
        mr.sigma2 = res.sigma2;
        mr.iterations = res.trace.iterations;
        mr.ok = true;
      } catch (const std::exception& e) {
        mr.error = e.what();
      }
    }
    if (opts.run_baseline) {
      MethodRun& mr = outs[r].pem;
      try {
        PemOptions po = opts.pem;
        po.seed = substream_seed(sum.run_seeds[r], 0x42ULL, 0);
        const PemResult res = direct_pem(data, pem_spec, po);
        const auto& mod = res.modules.at(i);
        std::vector<double> bc(n_b + 1, 0.0), fc(n_f + 1, 0.0);
        fc[0] = 1.0;
        std::copy(mod.b.begin(), mod.b.end(), bc.begin() + 1);
        std::copy(mod.f.begin(), mod.f.end(), fc.begin() + 1);
        mr.fit_ir = fit_score(
            truth_ir,
            impulse_response(RationalTF(Poly(bc), Poly(fc)), opts.ir_taps));
        Eigen::VectorXd th(n_b + n_f);
        for (int m = 0; m < n_b; ++m) th(m) = mod.b[m];
        for (int m = 0; m < n_f; ++m) th(n_b + m) = mod.f[m];
        mr.fit_par = fit_score(theta_true, th);
        mr.theta.assign(th.data(), th.data() + th.size());
        mr.sigma2 = res.sigma2;
        mr.iterations = res.iterations;
        mr.ok = true;
      } catch (const std::exception& e) {
        mr.error = e.what();
      }
    }
  };

  const int T = std::max(1, opts.threads);
  if (T == 1) {
    for (int r = 0; r < opts.runs; ++r) one_run(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < T; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < opts.runs;
             r = next.fetch_add(1))
          one_run(r);
      });
    for (auto& th : pool) th.join();
  }

  auto collect = [&](const char* name, auto member) {
    MethodSummary ms;
    ms.name = name;
    for (int r = 0; r < opts.runs; ++r) ms.runs.push_back(outs[r].*member);
    aggregate(ms, n_b + n_f);
    sum.methods.push_back(std::move(ms));
  };
  if (opts.run_ebdm) collect("ebdm", &RunOut::ebdm);
  if (opts.run_nonparam) collect("nonparam", &RunOut::np);
  if (opts.run_baseline) collect("baseline", &RunOut::pem);
  return sum;
}

}  // namespace netid
