#include "netid/pem.hpp"

#include <cmath>
#include <limits>

#include "netid/errors.hpp"
#include "netid/poly.hpp"
#include "netid/rng.hpp"

namespace netid {

namespace {

// y = (num/den) x with zero initial conditions; num indexed from lag 0,
// den from lag 1 (monic denominator implied).
Eigen::VectorXd filt(const std::vector<double>& num0,
                     const std::vector<double>& den1,
                     const Eigen::VectorXd& x) {
  const int N = static_cast<int>(x.size());
  Eigen::VectorXd y(N);
  for (int t = 0; t < N; ++t) {
    double acc = 0.0;
    for (size_t m = 0; m < num0.size() && static_cast<int>(m) <= t; ++m)
      acc += num0[m] * x(t - m);
    for (size_t m = 1; m <= den1.size() && static_cast<int>(m) <= t; ++m)
      acc -= den1[m - 1] * y(t - m);
    y(t) = acc;
  }
  return y;
}

Eigen::VectorXd delayed(const Eigen::VectorXd& x, int m) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.size());
  y.tail(x.size() - m) = x.head(x.size() - m);
  return y;
}

bool coeffs_stable(const std::vector<double>& den1) {
  if (den1.empty()) return true;
  std::vector<double> full(den1.size() + 1, 1.0);
  std::copy(den1.begin(), den1.end(), full.begin() + 1);
  for (const auto& z : roots(Poly(full)))
    if (std::abs(z) >= 1.0 - 1e-9) return false;
  return true;
}

// Scale the coefficients so all roots shrink toward the origin until stable.
void shrink_stable(std::vector<double>& den1) {
  for (int tries = 0; tries < 400 && !coeffs_stable(den1); ++tries)
    for (size_t m = 0; m < den1.size(); ++m)
      den1[m] *= std::pow(0.95, static_cast<double>(m + 1));
}

struct Unpacked {
  std::vector<std::vector<double>> b, f;  // per input
  std::vector<double> c, d;
};

struct Layout {
  const PemSpec& spec;
  int dim = 0;
  explicit Layout(const PemSpec& s) : spec(s) {
    for (int k : s.inputs) {
      const auto& o = s.orders.at(k);
      dim += o.n_b + o.n_f;
    }
    dim += s.n_c + s.n_d;
  }
  Unpacked unpack(const Eigen::VectorXd& p) const {
    Unpacked u;
    int at = 0;
    for (int k : spec.inputs) {
      const auto& o = spec.orders.at(k);
      u.b.emplace_back(p.data() + at, p.data() + at + o.n_b);
      at += o.n_b;
      u.f.emplace_back(p.data() + at, p.data() + at + o.n_f);
      at += o.n_f;
    }
    u.c.assign(p.data() + at, p.data() + at + spec.n_c);
    at += spec.n_c;
    u.d.assign(p.data() + at, p.data() + at + spec.n_d);
    return u;
  }
  Eigen::VectorXd pack(const Unpacked& u) const {
    Eigen::VectorXd p(dim);
    int at = 0;
    for (size_t q = 0; q < spec.inputs.size(); ++q) {
      for (double x : u.b[q]) p(at++) = x;
      for (double x : u.f[q]) p(at++) = x;
    }
    for (double x : u.c) p(at++) = x;
    for (double x : u.d) p(at++) = x;
    return p;
  }
};

bool predictor_stable(const Unpacked& u) {
  for (const auto& f : u.f)
    if (!coeffs_stable(f)) return false;
  return coeffs_stable(u.c);
}

struct Residual {
  Eigen::VectorXd eps, xi;
  std::vector<Eigen::VectorXd> y;  // per-input module outputs
};

Residual residual(const Layout& lay, const Unpacked& u,
                  const DataRecord& data) {
  Residual r;
  const Eigen::VectorXd wj = data.w.col(lay.spec.j - 1);
  r.xi = wj;
  for (size_t q = 0; q < lay.spec.inputs.size(); ++q) {
    std::vector<double> num0(u.b[q].size() + 1, 0.0);
    std::copy(u.b[q].begin(), u.b[q].end(), num0.begin() + 1);
    r.y.push_back(filt(num0, u.f[q], data.w.col(lay.spec.inputs[q] - 1)));
    r.xi -= r.y.back();
  }
  std::vector<double> dnum(u.d.size() + 1, 1.0);
  std::copy(u.d.begin(), u.d.end(), dnum.begin() + 1);
  r.eps = filt(dnum, u.c, r.xi);
  return r;
}

Eigen::MatrixXd jacobian(const Layout& lay, const Unpacked& u,
                         const DataRecord& data, const Residual& r) {
  const int N = data.N;
  Eigen::MatrixXd J(N, lay.dim);
  std::vector<double> dnum(u.d.size() + 1, 1.0);
  std::copy(u.d.begin(), u.d.end(), dnum.begin() + 1);
  int at = 0;
  for (size_t q = 0; q < lay.spec.inputs.size(); ++q) {
    const auto& o = lay.spec.orders.at(lay.spec.inputs[q]);
    const Eigen::VectorXd uk =
        filt({1.0}, u.f[q], filt(dnum, u.c, data.w.col(lay.spec.inputs[q] - 1)));
    for (int m = 1; m <= o.n_b; ++m) J.col(at++) = -delayed(uk, m);
    const Eigen::VectorXd vk = filt({1.0}, u.f[q], filt(dnum, u.c, r.y[q]));
    for (int m = 1; m <= o.n_f; ++m) J.col(at++) = delayed(vk, m);
  }
  const Eigen::VectorXd ef = filt({1.0}, u.c, r.eps);
  for (int m = 1; m <= lay.spec.n_c; ++m) J.col(at++) = -delayed(ef, m);
  const Eigen::VectorXd xf = filt({1.0}, u.c, r.xi);
  for (int m = 1; m <= lay.spec.n_d; ++m) J.col(at++) = delayed(xf, m);
  return J;
}

Eigen::VectorXd arx_start(const Layout& lay, const DataRecord& data) {
  const auto& spec = lay.spec;
  int na = 0;
  for (int k : spec.inputs) na = std::max(na, spec.orders.at(k).n_f);
  int maxlag = na;
  int cols = na;
  for (int k : spec.inputs) {
    maxlag = std::max(maxlag, spec.orders.at(k).n_b);
    cols += spec.orders.at(k).n_b;
  }
  const int rows = data.N - maxlag;
  const Eigen::VectorXd wj = data.w.col(spec.j - 1);
  if (rows < cols) throw Error("not enough samples for the start estimate");
  Eigen::MatrixXd Phi(rows, cols);
  int at = 0;
  for (int k : spec.inputs)
    for (int m = 1; m <= spec.orders.at(k).n_b; ++m)
      Phi.col(at++) = data.w.col(k - 1).segment(maxlag - m, rows);
  for (int m = 1; m <= na; ++m)
    Phi.col(at++) = -wj.segment(maxlag - m, rows);
  const Eigen::VectorXd sol = Phi.colPivHouseholderQr().solve(wj.tail(rows));

  Unpacked u;
  at = 0;
  for (int k : spec.inputs) {
    const auto& o = spec.orders.at(k);
    u.b.emplace_back(sol.data() + at, sol.data() + at + o.n_b);
    at += o.n_b;
    std::vector<double> f(sol.data() + cols - na,
                          sol.data() + cols - na + o.n_f);
    shrink_stable(f);
    u.f.push_back(std::move(f));
  }
  u.c.assign(spec.n_c, 0.0);
  u.d.assign(spec.n_d, 0.0);
  return lay.pack(u);
}

}  // namespace

PemResult direct_pem(const DataRecord& data, const PemSpec& spec,
                     const PemOptions& opts) {
  for (int k : spec.inputs)
    if (!spec.orders.count(k)) throw Error("missing orders for an input");
  const Layout lay(spec);
  if (lay.dim < 1) throw Error("empty parameterization");

  const Eigen::VectorXd p_arx = arx_start(lay, data);
  PemResult best;
  best.sse = std::numeric_limits<double>::infinity();
  best.start_sse.assign(opts.multistart,
                        std::numeric_limits<double>::quiet_NaN());

  for (int s = 0; s < opts.multistart; ++s) {
    Eigen::VectorXd p = p_arx;
    if (s > 0) {
      NormalRng rng(substream_seed(opts.seed, s, 0x50454DULL));
      for (int m = 0; m < lay.dim; ++m)
        p(m) = p(m) * (1.0 + 0.3 * rng.normal()) + 0.05 * rng.normal();
      Unpacked u = lay.unpack(p);
      for (auto& f : u.f) shrink_stable(f);
      shrink_stable(u.c);
      p = lay.pack(u);
    }
    Unpacked u = lay.unpack(p);
    if (!predictor_stable(u)) continue;  // start abandoned

    Residual r = residual(lay, u, data);
    double sse = r.eps.squaredNorm();
    double mu = 1e-3;
    bool converged = false;
    int iters = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
      iters = it + 1;
      const Eigen::MatrixXd J = jacobian(lay, u, data, r);
      const Eigen::VectorXd g = J.transpose() * r.eps;
      if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol * (1.0 + sse)) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd H = J.transpose() * J;
      bool accepted = false;
      for (int a = 0; a < 40; ++a) {
        Eigen::MatrixXd Hd = H;
        Hd.diagonal().array() += mu * (1.0 + H.diagonal().array());
        const Eigen::VectorXd step = Hd.ldlt().solve(-g);
        const Eigen::VectorXd cand = p + step;
        const Unpacked uc = lay.unpack(cand);
        if (predictor_stable(uc)) {
          const Residual rc = residual(lay, uc, data);
          const double sse_c = rc.eps.squaredNorm();
          if (sse_c < sse) {
            const double drop = (sse - sse_c) / std::max(sse, 1e-300);
            p = cand;
            u = uc;
            r = rc;
            sse = sse_c;
            mu = std::max(mu * 0.1, 1e-12);
            accepted = true;
            if (drop < 1e-12) converged = true;
            break;
          }
        }
        mu *= 10.0;
      }
      if (!accepted || converged) {
        converged = converged || !accepted;
        break;
      }
    }

    best.start_sse[s] = sse;
    if (sse < best.sse) {
      best.sse = sse;
      best.best_start = s;
      best.converged = converged;
      best.iterations = iters;
      best.modules.clear();
      for (size_t q = 0; q < spec.inputs.size(); ++q)
        best.modules[spec.inputs[q]] = PemModule{u.b[q], u.f[q]};
      best.c = u.c;
      best.d = u.d;
      best.sigma2 = sse / data.N;
    }
  }
  if (best.best_start < 0)
    throw UnstablePredictor("every start lost predictor stability");
  return best;
}

}  // namespace netid
