// Independent reference implementations used as test oracles. Nothing here calls the
// library's solvers; only its plain data types are shared.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hyflow/network.hpp"

namespace oracle {

using hyflow::CMat;
using hyflow::Complex;
using hyflow::CVec;
using hyflow::Index;
using hyflow::RMat;
using hyflow::RVec;

// Column of (bus, phase letter index) in the full nodal matrix: slack a, b, c first, then
// non-slack buses by ascending id, phases in a, b, c order.
inline std::map<std::pair<int, int>, Index> full_columns(const hyflow::PhasedNetwork& net) {
  std::vector<hyflow::Bus> buses = net.buses();
  std::sort(buses.begin(), buses.end(), [](const auto& l, const auto& r) { return l.id < r.id; });
  std::map<std::pair<int, int>, Index> col;
  for (int p = 0; p < 3; ++p) col[{0, p}] = p;
  Index next = 3;
  for (const hyflow::Bus& b : buses) {
    if (b.id == 0) continue;
    for (int p = 0; p < 3; ++p)
      if (b.phases.contains(static_cast<hyflow::Phase>(p))) col[{b.id, p}] = next++;
  }
  return col;
}

// Element-by-element stamping of every line into the (3 + M) square nodal admittance.
inline CMat brute_force_admittance(const hyflow::PhasedNetwork& net) {
  const auto col = full_columns(net);
  const Index n = static_cast<Index>(col.size());
  CMat y = CMat::Zero(n, n);
  for (const hyflow::Line& line : net.lines()) {
    std::vector<int> ph;
    for (int p = 0; p < 3; ++p)
      if (line.phases.contains(static_cast<hyflow::Phase>(p))) ph.push_back(p);
    const CMat ys = line.series_impedance.inverse();
    const Index k = static_cast<Index>(ph.size());
    for (Index i = 0; i < k; ++i) {
      for (Index j = 0; j < k; ++j) {
        Complex half_shunt(0.0, 0.0);
        if (line.shunt_admittance.size() > 0) half_shunt = 0.5 * line.shunt_admittance(i, j);
        const Index fi = col.at({line.from, ph[i]}), fj = col.at({line.from, ph[j]});
        const Index ti = col.at({line.to, ph[i]}), tj = col.at({line.to, ph[j]});
        y(fi, fj) += ys(i, j) + half_shunt;
        y(ti, tj) += ys(i, j) + half_shunt;
        y(fi, tj) -= ys(i, j);
        y(ti, fj) -= ys(i, j);
      }
    }
  }
  return y;
}

// Single-phase two-bus feeder: slack 1/0 behind impedance z, net injection s at the far
// end. Returns the high-voltage root of
//   |v|^4 - (2 Re(s conj z) + |v0|^2) |v|^2 + |s z|^2 = 0
// together with its angle from v conj(v0) = |v|^2 - s conj(z).
inline Complex two_bus_voltage(Complex v0, Complex z, Complex s) {
  const Complex k = s * std::conj(z);
  const double bcoef = 2.0 * k.real() + std::norm(v0);
  const double disc = bcoef * bcoef - 4.0 * std::norm(k);
  const double m = 0.5 * (bcoef + std::sqrt(disc));
  return (m - k) / std::conj(v0);
}

// Damped Newton on the real form of F(v) = s - v .* conj(yn0 v0 + ynn v).
inline CVec newton_power_flow(const CMat& yn0, const CMat& ynn, const CVec& v0, const CVec& s, CVec v,
                              double tol = 1e-13, int max_iter = 100) {
  const Index m = ynn.rows();
  auto residual = [&](const CVec& x) {
    CVec f(m);
    for (Index i = 0; i < m; ++i) {
      Complex cur(0.0, 0.0);
      for (Index k = 0; k < v0.size(); ++k) cur += yn0(i, k) * v0[k];
      for (Index k = 0; k < m; ++k) cur += ynn(i, k) * x[k];
      f[i] = s[i] - x[i] * std::conj(cur);
    }
    return f;
  };
  for (int it = 0; it < max_iter; ++it) {
    const CVec f = residual(v);
    const double fn = f.cwiseAbs().maxCoeff();
    if (fn < tol) break;
    const CVec cur = yn0 * v0 + ynn * v;
    // dF = -conj(I) dv - v conj(Y) conj(dv), written on [Re dv; Im dv].
    RMat jac = RMat::Zero(2 * m, 2 * m);
    for (Index i = 0; i < m; ++i) {
      for (Index k = 0; k < m; ++k) {
        const Complex a = (i == k ? -std::conj(cur[i]) : Complex(0.0, 0.0));
        const Complex b = -v[i] * std::conj(ynn(i, k));
        // d/d(Re dv_k): a + b ; d/d(Im dv_k): j a - j b
        const Complex dr = a + b;
        const Complex di = Complex(0.0, 1.0) * (a - b);
        jac(i, k) = dr.real();
        jac(m + i, k) = dr.imag();
        jac(i, m + k) = di.real();
        jac(m + i, m + k) = di.imag();
      }
    }
    RVec rhs(2 * m);
    rhs << -f.real(), -f.imag();
    const RVec step = jac.fullPivLu().solve(rhs);
    CVec dv(m);
    dv.real() = step.head(m);
    dv.imag() = step.tail(m);
    double damp = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      if (residual(v + damp * dv).cwiseAbs().maxCoeff() < fn) break;
      damp *= 0.5;
    }
    v += damp * dv;
  }
  return v;
}

// d_i = 2 conj(s_i) t_i - sum_k yn0(i, k) v0_k, entry by entry.
inline CVec linear_rhs(const CMat& yn0, const CVec& v0, const CVec& s, const CVec& t) {
  CVec d(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    Complex acc = 2.0 * std::conj(s[i]) * t[i];
    for (Index k = 0; k < v0.size(); ++k) acc -= yn0(i, k) * v0[k];
    d[i] = acc;
  }
  return d;
}

// Ordinary least squares with intercept via the normal equations on [X 1].
struct AffineFit {
  RMat w;  // outputs x features
  RVec b;
};

inline AffineFit least_squares(const RMat& x, const RMat& z) {
  const Index n = x.rows(), d = x.cols();
  RMat xa(n, d + 1);
  xa << x, RVec::Ones(n);
  const RMat gram = xa.transpose() * xa;
  const RMat coef = gram.ldlt().solve(xa.transpose() * z);  // (d + 1) x outputs
  return {coef.topRows(d).transpose(), coef.row(d).transpose()};
}

// Dense primal-dual interior point for  min 1/2 v'Qv + c'v  s.t.  G v >= h, solving the
// full normal equations with LU at every step. Small problems only.
inline RVec dense_qp(const RMat& q, const RVec& c, const RMat& g, const RVec& h, int max_iter = 200) {
  const Index n = q.rows(), m = g.rows();
  RVec v = RVec::Zero(n);
  RVec s = (g * v - h).cwiseMax(1.0);
  RVec lam = RVec::Ones(m);
  for (int it = 0; it < max_iter; ++it) {
    const RVec rd = q * v + c - g.transpose() * lam;
    const RVec rp = g * v - s - h;
    const double mu = s.dot(lam) / static_cast<double>(m);
    if (rd.cwiseAbs().maxCoeff() < 1e-12 && rp.cwiseAbs().maxCoeff() < 1e-12 && mu < 1e-14) break;
    const double sigma = 0.1;
    const RVec w = lam.cwiseQuotient(s);
    const RMat k = q + g.transpose() * w.asDiagonal() * g;
    const RVec comp = RVec::Constant(m, sigma * mu) - lam.cwiseProduct(s);
    // Eliminating ds = G dv + rp and dlam = (comp - lam .* ds) ./ s leaves a system in dv.
    const RVec rhs = -rd + g.transpose() * (comp.cwiseQuotient(s) - w.cwiseProduct(rp));
    const RVec dv = k.fullPivLu().solve(rhs);
    const RVec ds = g * dv + rp;
    const RVec dlam = (comp - lam.cwiseProduct(ds)).cwiseQuotient(s);
    double step = 1.0;
    for (Index i = 0; i < m; ++i) {
      if (ds[i] < 0.0) step = std::min(step, -0.99 * s[i] / ds[i]);
      if (dlam[i] < 0.0) step = std::min(step, -0.99 * lam[i] / dlam[i]);
    }
    v += step * dv;
    s += step * ds;
    lam += step * dlam;
  }
  return v;
}

struct SvrReference {
  RVec w;
  double b = 0.0;
  double objective = 0.0;
};

// epsilon-SVR primal  min 1/2 |w|^2 + C sum(xi + xi*)  as a generic dense QP in
// (w, b, xi, xi*).
inline SvrReference reference_svr(const RMat& x, const RVec& z, double C, double eps) {
  const Index n = x.rows(), d = x.cols();
  const Index nv = d + 1 + 2 * n;
  RMat q = RMat::Zero(nv, nv);
  q.topLeftCorner(d, d).setIdentity();
  RVec c = RVec::Zero(nv);
  c.tail(2 * n).setConstant(C);
  RMat g = RMat::Zero(4 * n, nv);
  RVec h = RVec::Zero(4 * n);
  for (Index i = 0; i < n; ++i) {
    // w.x + b + xi >= z - eps
    g.block(i, 0, 1, d) = x.row(i);
    g(i, d) = 1.0;
    g(i, d + 1 + i) = 1.0;
    h[i] = z[i] - eps;
    // -w.x - b + xi* >= -z - eps
    g.block(n + i, 0, 1, d) = -x.row(i);
    g(n + i, d) = -1.0;
    g(n + i, d + 1 + n + i) = 1.0;
    h[n + i] = -z[i] - eps;
    g(2 * n + i, d + 1 + i) = 1.0;
    g(3 * n + i, d + 1 + n + i) = 1.0;
  }
  const RVec v = dense_qp(q, c, g, h);
  SvrReference ref;
  ref.w = v.head(d);
  ref.b = v[d];
  double loss = 0.0;
  for (Index i = 0; i < n; ++i)
    loss += std::max(0.0, std::abs(z[i] - x.row(i).dot(ref.w) - ref.b) - eps);
  ref.objective = 0.5 * ref.w.squaredNorm() + C * loss;
  return ref;
}

}  // namespace oracle
