#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "netid/ebdm.hpp"
#include "netid/errors.hpp"
#include "netid/io.hpp"
#include "netid/metrics.hpp"
#include "netid/network.hpp"
#include "netid/nonparam.hpp"
#include "netid/pem.hpp"

namespace {

using nlohmann::json;

struct Target {
  int i = 0, j = 0;
};

Target parse_target(const std::string& s) {
  Target t;
  if (std::sscanf(s.c_str(), "%d:%d", &t.i, &t.j) != 2)
    throw netid::ParseError("--target expects i:j (input:output)");
  return t;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  size_t at = 0;
  while (at <= s.size()) {
    size_t next = s.find(',', at);
    if (next == std::string::npos) next = s.size();
    parts.push_back(s.substr(at, next - at));
    at = next + 1;
  }
  return parts;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const std::string& part : split_commas(s)) out.push_back(std::stoi(part));
  if (out.empty()) throw netid::ParseError("empty node list");
  return out;
}

netid::NetworkModel load_net(const std::string& case_name,
                             const std::string& path) {
  if (!case_name.empty() && !path.empty())
    throw netid::ParseError("give either --case or --network, not both");
  if (!case_name.empty()) return netid::builtin_case(case_name);
  if (!path.empty()) return netid::load_network(path);
  throw netid::ParseError("one of --case or --network is required");
}

json trace_json(const netid::EMTrace& tr) {
  return json{{"iterations", tr.iterations},
              {"termination", tr.termination},
              {"nll", tr.nll},
              {"rel_change", tr.rel_change}};
}

json method_summary_json(const netid::MethodSummary& ms,
                         const std::vector<std::uint64_t>& seeds) {
  json runs = json::array();
  for (size_t r = 0; r < ms.runs.size(); ++r) {
    const auto& mr = ms.runs[r];
    json jr{{"run", r}, {"seed", seeds[r]}, {"ok", mr.ok}};
    if (!mr.ok) jr["error"] = mr.error;
    if (mr.fit_ir) jr["fit_ir"] = *mr.fit_ir;
    if (mr.fit_par) jr["fit_par"] = *mr.fit_par;
    if (!mr.theta.empty()) jr["theta"] = mr.theta;
    if (mr.sigma2) jr["sigma2"] = *mr.sigma2;
    jr["iterations"] = mr.iterations;
    runs.push_back(std::move(jr));
  }
  json out{{"name", ms.name}, {"failed", ms.failed}, {"runs", runs}};
  if (ms.median_fit_ir) out["median_fit_ir"] = *ms.median_fit_ir;
  if (ms.median_fit_par) out["median_fit_par"] = *ms.median_fit_par;
  if (ms.mean_sigma2) out["mean_sigma2"] = *ms.mean_sigma2;
  if (!ms.mean_theta.empty()) {
    out["mean_theta"] = ms.mean_theta;
    out["std_theta"] = ms.std_theta;
  }
  return out;
}

json summary_json(const netid::MCSummary& sum) {
  json methods = json::array();
  for (const auto& ms : sum.methods)
    methods.push_back(method_summary_json(ms, sum.run_seeds));
  return json{{"target", {{"i", sum.i}, {"j", sum.j}}},
              {"runs", sum.opts.runs},
              {"samples", sum.opts.N},
              {"kernel_length", sum.opts.l},
              {"seed", sum.opts.seed},
              {"run_seeds", sum.run_seeds},
              {"theta_true", sum.theta_true},
              {"methods", methods}};
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  ~Timer() {
    const auto dt = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    std::fprintf(stderr, "elapsed %.3f s\n", dt);
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Simulation and local module identification for linear "
               "dynamic networks"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "Simulate a network to CSV");
  std::string sim_case, sim_net_path, sim_out = "data.csv";
  int sim_N = 500, sim_warmup = 500;
  std::uint64_t sim_seed = 1;
  double sim_refvar = 1.0;
  sim->add_option("--case", sim_case, "built-in network (case1|case2)");
  sim->add_option("--network", sim_net_path, "network JSON file");
  sim->add_option("--samples", sim_N, "samples to keep")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "master seed");
  sim->add_option("--warmup", sim_warmup, "discarded initial samples");
  sim->add_option("--ref-variance", sim_refvar, "reference signal variance");
  sim->add_option("--out", sim_out, "output CSV path");

  // ---- identify ----
  auto* idf = app.add_subcommand(
      "identify", "Estimate one module, GP models for the rest");
  std::string idf_data, idf_target, idf_inputs, idf_init = "default",
              idf_out = "result.json";
  int idf_nb = 1, idf_nf = 0, idf_l = 100,
      idf_maxit = netid::EmOptions{}.max_iter, idf_taps = 100;
  double idf_tol = netid::EmOptions{}.tol;
  std::uint64_t idf_seed = 0;
  idf->add_option("--data", idf_data, "input CSV")->required();
  idf->add_option("--target", idf_target, "target module i:j")->required();
  idf->add_option("--inputs", idf_inputs, "other input nodes (comma list)");
  idf->add_option("--nb", idf_nb, "numerator order")->required();
  idf->add_option("--nf", idf_nf, "denominator order")->required();
  idf->add_option("--kernel-length", idf_l, "GP impulse-response length");
  idf->add_option("--max-iter", idf_maxit, "iteration cap");
  idf->add_option("--tol", idf_tol, "relative convergence tolerance");
  idf->add_option("--init", idf_init, "default|random");
  idf->add_option("--seed", idf_seed, "seed for --init random");
  idf->add_option("--ir-taps", idf_taps, "reported impulse-response length");
  idf->add_option("--out", idf_out, "output JSON path");

  // ---- identify-np ----
  auto* np = app.add_subcommand(
      "identify-np", "Nonparametric GP estimate of a full MISO node");
  std::string np_data, np_target, np_inputs, np_out = "result.json";
  int np_l = 100, np_maxit = netid::NonparamOptions{}.max_iter, np_taps = 100;
  double np_tol = netid::NonparamOptions{}.tol;
  np->add_option("--data", np_data, "input CSV")->required();
  np->add_option("--target", np_target, "target module i:j")->required();
  np->add_option("--inputs", np_inputs, "other input nodes (comma list)");
  np->add_option("--kernel-length", np_l, "GP impulse-response length");
  np->add_option("--max-iter", np_maxit, "iteration cap");
  np->add_option("--tol", np_tol, "relative convergence tolerance");
  np->add_option("--ir-taps", np_taps, "recovered impulse-response length");
  np->add_option("--out", np_out, "output JSON path");

  // ---- baseline ----
  auto* bl = app.add_subcommand(
      "baseline", "Prediction-error estimate of the full MISO node");
  std::string bl_data, bl_target, bl_orders, bl_out = "result.json";
  int bl_nc = 0, bl_nd = 0, bl_maxit = 200, bl_multi = 5;
  std::uint64_t bl_seed = 0;
  bl->add_option("--data", bl_data, "input CSV")->required();
  bl->add_option("--target", bl_target, "target module i:j")->required();
  bl->add_option("--orders", bl_orders,
                 "per-input orders node:nb:nf, comma separated")
      ->required();
  bl->add_option("--nc", bl_nc, "noise numerator order");
  bl->add_option("--nd", bl_nd, "noise denominator order");
  bl->add_option("--multistart", bl_multi, "number of starts");
  bl->add_option("--max-iter", bl_maxit, "iteration cap per start");
  bl->add_option("--seed", bl_seed, "seed for the randomized starts");
  bl->add_option("--out", bl_out, "output JSON path");

  // ---- montecarlo ----
  auto* mc = app.add_subcommand(
      "montecarlo", "Repeated simulate-and-identify experiment");
  std::string mc_case, mc_net_path, mc_target, mc_methods = "ebdm",
              mc_sweep, mc_out = "summary.json";
  int mc_runs = 20, mc_N = 500, mc_l = 100, mc_taps = 100, mc_threads = 1;
  std::uint64_t mc_seed = 1;
  mc->add_option("--case", mc_case, "built-in network (case1|case2)");
  mc->add_option("--network", mc_net_path, "network JSON file");
  mc->add_option("--target", mc_target, "target module i:j")->required();
  mc->add_option("--runs", mc_runs, "Monte Carlo runs");
  mc->add_option("--samples", mc_N, "samples per run");
  mc->add_option("--kernel-length", mc_l, "GP impulse-response length");
  mc->add_option("--methods", mc_methods,
                 "comma list from ebdm,nonparam,baseline");
  mc->add_option("--seed", mc_seed, "master seed");
  mc->add_option("--threads", mc_threads, "worker threads");
  mc->add_option("--ir-taps", mc_taps, "impulse-response length for fits");
  mc->add_option("--noise-sweep", mc_sweep,
                 "node:v1,v2,... noise-variance sweep at one node");
  mc->add_option("--out", mc_out, "output JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    Timer timer;
    const auto net = load_net(sim_case, sim_net_path);
    netid::SimulateOptions so;
    so.warmup = sim_warmup;
    so.ref_variance = sim_refvar;
    netid::save_data(sim_out, netid::simulate(net, sim_N, sim_seed, so));
    return 0;
  }

  if (idf->parsed()) {
    Timer timer;
    const netid::DataRecord data = netid::load_data(idf_data);
    const Target t = parse_target(idf_target);
    netid::MISOSetup setup;
    setup.j = t.j;
    setup.i = t.i;
    if (!idf_inputs.empty()) setup.gp_inputs = parse_int_list(idf_inputs);
    setup.n_b = idf_nb;
    setup.n_f = idf_nf;
    setup.l = idf_l;
    netid::EmOptions em;
    em.max_iter = idf_maxit;
    em.tol = idf_tol;
    em.ir_taps = idf_taps;
    if (idf_init == "random") {
      em.random_init = true;
      em.init_seed = idf_seed;
    } else if (idf_init != "default") {
      throw netid::ParseError("--init must be default or random");
    }
    const netid::IdentResult res = netid::identify(data, setup, em);

    json gps = json::array();
    std::vector<int> blocks{t.j};
    blocks.insert(blocks.end(), setup.gp_inputs.begin(),
                  setup.gp_inputs.end());
    for (size_t b = 0; b < res.gp_ir.size(); ++b)
      gps.push_back(json{{"node", blocks[b]}, {"taps", res.gp_ir[b]}});
    const auto& th = res.eta.theta;
    json out{
        {"command", "identify"},
        {"data", idf_data},
        {"data_seed", data.seed},
        {"target", {{"i", t.i}, {"j", t.j}}},
        {"inputs", setup.gp_inputs},
        {"orders", {{"nb", idf_nb}, {"nf", idf_nf}}},
        {"kernel_length", idf_l},
        {"init", idf_init},
        {"estimate",
         {{"theta", std::vector<double>(th.data(), th.data() + th.size())},
          {"b", std::vector<double>(th.data(), th.data() + idf_nb)},
          {"f", std::vector<double>(th.data() + idf_nb,
                                    th.data() + idf_nb + idf_nf)},
          {"lambda", std::vector<double>(res.eta.lambda.data(),
                                         res.eta.lambda.data() +
                                             res.eta.lambda.size())},
          {"beta", std::vector<double>(res.eta.beta.data(),
                                       res.eta.beta.data() +
                                           res.eta.beta.size())},
          {"blocks", blocks},
          {"sigma2", res.eta.sigma2}}},
        {"trace", trace_json(res.trace)},
        {"target_impulse_response", res.target_ir},
        {"gp_impulse_responses", gps}};
    netid::write_file(idf_out, out.dump(2) + "\n");
    return 0;
  }

  if (np->parsed()) {
    Timer timer;
    const netid::DataRecord data = netid::load_data(np_data);
    const Target t = parse_target(np_target);
    std::vector<int> inputs{t.i};
    if (!np_inputs.empty())
      for (int k : parse_int_list(np_inputs)) inputs.push_back(k);
    std::sort(inputs.begin(), inputs.end());
    netid::NonparamOptions opt;
    opt.max_iter = np_maxit;
    opt.tol = np_tol;
    opt.ir_taps = np_taps;
    const netid::NonparamResult res =
        netid::identify_nonparametric(data, t.j, inputs, np_l, opt);

    json gps = json::array();
    std::vector<int> blocks{t.j};
    blocks.insert(blocks.end(), inputs.begin(), inputs.end());
    for (size_t b = 0; b < res.gp_ir.size(); ++b)
      gps.push_back(json{{"node", blocks[b]}, {"taps", res.gp_ir[b]}});
    json recov = json::array();
    for (const auto& [node, ir] : res.recovered)
      recov.push_back(json{{"node", node}, {"impulse_response", ir}});
    json out{{"command", "identify-np"},
             {"data", np_data},
             {"data_seed", data.seed},
             {"target", {{"i", t.i}, {"j", t.j}}},
             {"inputs", inputs},
             {"kernel_length", np_l},
             {"estimate",
              {{"lambda", std::vector<double>(res.lambda.data(),
                                              res.lambda.data() +
                                                  res.lambda.size())},
               {"beta", std::vector<double>(res.beta.data(),
                                            res.beta.data() +
                                                res.beta.size())},
               {"blocks", blocks},
               {"sigma2", res.sigma2}}},
             {"trace", trace_json(res.trace)},
             {"gp_impulse_responses", gps},
             {"recovered_modules", recov}};
    netid::write_file(np_out, out.dump(2) + "\n");
    return 0;
  }

  if (bl->parsed()) {
    Timer timer;
    const netid::DataRecord data = netid::load_data(bl_data);
    const Target t = parse_target(bl_target);
    netid::PemSpec spec;
    spec.j = t.j;
    spec.n_c = bl_nc;
    spec.n_d = bl_nd;
    for (const std::string& part : split_commas(bl_orders)) {
      int node, nb, nf;
      if (std::sscanf(part.c_str(), "%d:%d:%d", &node, &nb, &nf) != 3)
        throw netid::ParseError("--orders expects node:nb:nf entries");
      spec.inputs.push_back(node);
      spec.orders[node] = netid::PemOrders{nb, nf};
    }
    std::sort(spec.inputs.begin(), spec.inputs.end());
    netid::PemOptions po;
    po.multistart = bl_multi;
    po.max_iter = bl_maxit;
    po.seed = bl_seed;
    const netid::PemResult res = netid::direct_pem(data, spec, po);

    json mods = json::array();
    for (const auto& [node, mod] : res.modules)
      mods.push_back(json{{"node", node}, {"b", mod.b}, {"f", mod.f}});
    json out{{"command", "baseline"},
             {"data", bl_data},
             {"data_seed", data.seed},
             {"target", {{"i", t.i}, {"j", t.j}}},
             {"modules", mods},
             {"noise", {{"c", res.c}, {"d", res.d}}},
             {"sigma2", res.sigma2},
             {"sse", res.sse},
             {"best_start", res.best_start},
             {"start_sse", res.start_sse},
             {"converged", res.converged},
             {"iterations", res.iterations}};
    netid::write_file(bl_out, out.dump(2) + "\n");
    return 0;
  }

  if (mc->parsed()) {
    Timer timer;
    const auto net = load_net(mc_case, mc_net_path);
    const Target t = parse_target(mc_target);
    netid::MCOptions opts;
    opts.runs = mc_runs;
    opts.N = mc_N;
    opts.l = mc_l;
    opts.seed = mc_seed;
    opts.threads = mc_threads;
    opts.ir_taps = mc_taps;
    opts.run_ebdm = opts.run_nonparam = opts.run_baseline = false;
    for (const std::string& m : split_commas(mc_methods)) {
      if (m == "ebdm")
        opts.run_ebdm = true;
      else if (m == "nonparam")
        opts.run_nonparam = true;
      else if (m == "baseline")
        opts.run_baseline = true;
      else
        throw netid::ParseError("unknown method: " + m);
    }

    json out{{"command", "montecarlo"},
             {"network", mc_case.empty() ? mc_net_path : mc_case},
             {"methods", mc_methods},
             {"threads", mc_threads}};
    if (mc_sweep.empty()) {
      out["summary"] = summary_json(netid::run_montecarlo(net, t.j, t.i, opts));
    } else {
      const size_t colon = mc_sweep.find(':');
      if (colon == std::string::npos)
        throw netid::ParseError("--noise-sweep expects node:v1,v2,...");
      const int node = std::stoi(mc_sweep.substr(0, colon));
      json sweep = json::array();
      for (const std::string& part : split_commas(mc_sweep.substr(colon + 1))) {
        const double variance = std::stod(part);
        netid::MCOptions o = opts;
        o.override_node = node;
        o.override_variance = variance;
        sweep.push_back(
            json{{"node", node},
                 {"variance", variance},
                 {"summary", summary_json(netid::run_montecarlo(net, t.j,
                                                                t.i, o))}});
      }
      out["sweep"] = sweep;
    }
    netid::write_file(mc_out, out.dump(2) + "\n");
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const netid::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
