#include "hyflow/svr.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace hyflow {

double svr_primal(const RMat& x, const RVec& z, const RVec& w, double b, double C, double eps) {
  const RVec r = z - x * w - RVec::Constant(z.size(), b);
  const double loss = (r.cwiseAbs().array() - eps).max(0.0).sum();
  return 0.5 * w.squaredNorm() + C * loss;
}

double svr_dual(const RMat& x, const RVec& z, const RVec& beta, double eps) {
  const RVec w = x.transpose() * beta;
  return -0.5 * w.squaredNorm() + z.dot(beta) - eps * beta.cwiseAbs().sum();
}

namespace {

double median(RVec v) {
  const auto n = static_cast<std::size_t>(v.size());
  std::sort(v.data(), v.data() + n);
  return n % 2 ? v[static_cast<Index>(n / 2)] : 0.5 * (v[static_cast<Index>(n / 2 - 1)] + v[static_cast<Index>(n / 2)]);
}

void finish(SvrFit& fit, const RMat& x, const RVec& z, double C, double eps) {
  fit.primal = svr_primal(x, z, fit.w, fit.b, C, eps);
  fit.gap = fit.primal - svr_dual(x, z, fit.beta, eps);
}

// Snaps multipliers to their bounds and solves the remaining KKT equalities exactly.
// The polished fit replaces the input only if it is consistent and no worse.
void polish(SvrFit& fit, const RMat& x, const RVec& z, double C, double eps) {
  const Index n = x.rows();
  const double snap = 1e-6 * C;
  const double tol = 1e-9 * (1.0 + z.cwiseAbs().maxCoeff());
  RVec beta = fit.beta;
  std::vector<Index> free;
  for (Index i = 0; i < n; ++i) {
    if (std::abs(beta[i]) <= snap) beta[i] = 0.0;
    else if (beta[i] >= C - snap) beta[i] = C;
    else if (beta[i] <= -C + snap) beta[i] = -C;
    else free.push_back(i);
  }
  const auto f = static_cast<Index>(free.size());
  if (f > 2 * (x.cols() + 1)) return;
  double b = fit.b;
  if (f > 0) {
    RVec fixed = beta;
    RMat xf(f, x.cols());
    for (Index k = 0; k < f; ++k) {
      fixed[free[k]] = 0.0;
      xf.row(k) = x.row(free[k]);
    }
    const RVec wf = x.transpose() * fixed;
    RMat kkt = RMat::Zero(f + 1, f + 1);
    kkt.topLeftCorner(f, f) = xf * xf.transpose();
    kkt.topRightCorner(f, 1).setOnes();
    kkt.bottomLeftCorner(1, f).setOnes();
    RVec rhs(f + 1);
    for (Index k = 0; k < f; ++k) {
      const Index i = free[k];
      rhs[k] = z[i] - (beta[i] > 0.0 ? eps : -eps) - x.row(i).dot(wf);
    }
    rhs[f] = -fixed.sum();
    const RVec sol = Eigen::CompleteOrthogonalDecomposition<RMat>(kkt).solve(rhs);
    if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > tol) return;
    for (Index k = 0; k < f; ++k) {
      const Index i = free[k];
      if (sol[k] * beta[i] < 0.0 || std::abs(sol[k]) > C) return;
      beta[i] = sol[k];
    }
    b = sol[f];
  } else if (std::abs(beta.sum()) > tol * C) {
    return;
  }
  SvrFit out = fit;
  out.beta = beta;
  out.w = x.transpose() * beta;
  out.b = b;
  const RVec r = z - x * out.w - RVec::Constant(n, b);
  for (Index i = 0; i < n; ++i) {
    if (beta[i] == 0.0 && std::abs(r[i]) > eps + tol) return;
    if (beta[i] == C && r[i] < eps - tol) return;
    if (beta[i] == -C && r[i] > -eps + tol) return;
  }
  finish(out, x, z, C, eps);
  if (out.primal <= fit.primal + 1e-12 * std::max(1.0, std::abs(fit.primal))) fit = std::move(out);
}

// Largest step in (0, 1] keeping v + s * dv >= 0, scaled back by `frac`.
double max_step(const RVec& v, const RVec& dv, double frac) {
  double s = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) s = std::min(s, -frac * v[i] / dv[i]);
  return s;
}

struct Newton {
  RVec du;
  double dlambda = 0.0;
};

// Box QP in u = [alpha; alpha*]:
//   min 1/2 u^T G G^T u + c^T u   s.t.  a^T u = 0,  0 <= u <= C
// with G = [X; -X], a = [1; -1], c = [eps - z; eps + z].
class BoxQp {
 public:
  BoxQp(const RMat& x, const RVec& z, double C, double eps)
      : x_(x), z_(z), C_(C), eps_(eps), n_(x.rows()), sample_space_(2 * x.rows() < x.cols()) {
    if (sample_space_) gram_ = x * x.transpose();
  }

  RVec gradient(const RVec& u) const {
    const RVec w = x_.transpose() * (u.head(n_) - u.tail(n_));
    const RVec xw = x_ * w;
    RVec g(2 * n_);
    g.head(n_) = xw - z_ + RVec::Constant(n_, eps_);
    g.tail(n_) = -xw + z_ + RVec::Constant(n_, eps_);
    return g;
  }

  // Factors S = I + G^T D^-1 G for the diagonal D of the current iterate, or G G^T + D
  // itself when that is the smaller matrix.
  void factor(const RVec& d) {
    dinv_ = d.cwiseInverse();
    if (sample_space_) {
      RMat m(2 * n_, 2 * n_);
      m << gram_, -gram_, -gram_, gram_;
      m.diagonal() += d;
      llt_.compute(m);
      if (llt_.info() != Eigen::Success) throw Error("svr: Newton matrix is not positive definite");
      ma_ = apply_inverse(a());
      ama_ = a().dot(ma_);
      return;
    }
    const RVec weight = dinv_.head(n_) + dinv_.tail(n_);
    const RMat xs = x_.array().colwise() * weight.array().sqrt();
    RMat s = xs.transpose() * xs;
    s.diagonal().array() += 1.0;
    llt_.compute(s);
    if (llt_.info() != Eigen::Success) throw Error("svr: reduced Newton matrix is not positive definite");
    ma_ = apply_inverse(a());
    ama_ = a().dot(ma_);
  }

  // (G G^T + D)^-1 v by the Woodbury identity.
  RVec apply_inverse(const RVec& v) const {
    if (sample_space_) return llt_.solve(v);
    const RVec dv = dinv_.cwiseProduct(v);
    const RVec t = llt_.solve(x_.transpose() * (dv.head(n_) - dv.tail(n_)));
    const RVec xt = x_ * t;
    RVec out(2 * n_);
    out.head(n_) = dv.head(n_) - dinv_.head(n_).cwiseProduct(xt);
    out.tail(n_) = dv.tail(n_) + dinv_.tail(n_).cwiseProduct(xt);
    return out;
  }

  RVec apply(const RVec& u, const RVec& d) const {
    const RVec xw = x_ * (x_.transpose() * (u.head(n_) - u.tail(n_)));
    RVec out = d.cwiseProduct(u);
    out.head(n_) += xw;
    out.tail(n_) -= xw;
    return out;
  }

  // Solves [M a; a^T 0] [du; dl] = [g; h] with one step of iterative refinement.
  Newton solve(const RVec& g, double h, const RVec& d) const {
    Newton s = solve_once(g, h);
    const RVec rg = g - apply(s.du, d) - a() * s.dlambda;
    const double rh = h - a().dot(s.du);
    const Newton c = solve_once(rg, rh);
    s.du += c.du;
    s.dlambda += c.dlambda;
    return s;
  }

  RVec a() const {
    RVec v(2 * n_);
    v.head(n_).setOnes();
    v.tail(n_).setConstant(-1.0);
    return v;
  }

 private:
  Newton solve_once(const RVec& g, double h) const {
    const RVec mg = apply_inverse(g);
    Newton s;
    s.dlambda = (a().dot(mg) - h) / ama_;
    s.du = mg - ma_ * s.dlambda;
    return s;
  }

  const RMat& x_;
  const RVec& z_;
  double C_;
  double eps_;
  Index n_;
  bool sample_space_;
  RMat gram_;
  RVec dinv_;
  RVec ma_;
  double ama_ = 1.0;
  Eigen::LLT<RMat> llt_;
};

void fit_interior_point(SvrFit& fit, const RMat& x, const RVec& z, double C, double eps, const SvrOptions& opts) {
  const Index n = x.rows();
  const Index m = 2 * n;
  BoxQp qp(x, z, C, eps);
  const RVec a = qp.a();

  RVec u = RVec::Constant(m, 0.5 * C);
  RVec zl = RVec::Ones(m);
  RVec zu = RVec::Ones(m);
  double lambda = median(z);
  const double scale = 1.0 + z.cwiseAbs().maxCoeff();
  constexpr double kFrac = 0.995;

  auto extract = [&] {
    fit.beta = u.head(n) - u.tail(n);
    fit.w = x.transpose() * fit.beta;
    fit.b = lambda;
    finish(fit, x, z, C, eps);
  };

  for (int it = 1; it <= opts.max_iterations; ++it) {
    fit.iterations = it;
    const RVec cu = RVec::Constant(m, C) - u;
    const RVec rd = qp.gradient(u) + a * lambda - zl + zu;
    const double rp = a.dot(u);
    const double mu = (u.dot(zl) + cu.dot(zu)) / static_cast<double>(2 * m);

    extract();
    const double rel_gap = std::abs(fit.gap) / std::max(1.0, std::abs(fit.primal));
    if (rd.cwiseAbs().maxCoeff() <= opts.gap_tolerance * scale && std::abs(rp) <= opts.gap_tolerance * C * n &&
        rel_gap <= opts.gap_tolerance && mu <= opts.gap_tolerance * C) {
      polish(fit, x, z, C, eps);
      return;
    }

    const RVec d = zl.cwiseQuotient(u) + zu.cwiseQuotient(cu);
    qp.factor(d);

    // Newton direction for target complementarity tau, with optional second-order terms.
    auto direction = [&](const RVec& target_l, const RVec& target_u, RVec& dzl, RVec& dzu) {
      const RVec g = -rd + target_l.cwiseQuotient(u) - target_u.cwiseQuotient(cu);
      Newton s = qp.solve(g, -rp, d);
      dzl = (target_l - zl.cwiseProduct(s.du)).cwiseQuotient(u);
      dzu = (target_u + zu.cwiseProduct(s.du)).cwiseQuotient(cu);
      return s;
    };

    RVec dzl, dzu;
    const Newton aff = direction(-u.cwiseProduct(zl), -cu.cwiseProduct(zu), dzl, dzu);
    const double step_aff = std::min({max_step(u, aff.du, 1.0), max_step(cu, -aff.du, 1.0), max_step(zl, dzl, 1.0),
                                      max_step(zu, dzu, 1.0)});
    const double mu_aff = ((u + step_aff * aff.du).dot(zl + step_aff * dzl) +
                           (cu - step_aff * aff.du).dot(zu + step_aff * dzu)) /
                          static_cast<double>(2 * m);
    const double sigma = std::pow(mu_aff / mu, 3);

    const RVec tl = RVec::Constant(m, sigma * mu) - u.cwiseProduct(zl) - aff.du.cwiseProduct(dzl);
    const RVec tu = RVec::Constant(m, sigma * mu) - cu.cwiseProduct(zu) + aff.du.cwiseProduct(dzu);
    const Newton cor = direction(tl, tu, dzl, dzu);
    const double step = std::min({max_step(u, cor.du, kFrac), max_step(cu, -cor.du, kFrac), max_step(zl, dzl, kFrac),
                                  max_step(zu, dzu, kFrac)});
    u += step * cor.du;
    lambda += step * cor.dlambda;
    zl += step * dzl;
    zu += step * dzu;
  }
  extract();
  throw SvrError("svr: interior point did not converge within " + std::to_string(opts.max_iterations) +
                     " iterations (duality gap " + std::to_string(fit.gap) + ")",
                 fit);
}

void fit_coordinate_descent(SvrFit& fit, const RMat& x, const RVec& z, double C, double eps, const SvrOptions& opts) {
  const Index n = x.rows();
  // Samples as contiguous columns for the inner products in the sweep.
  const RMat xt = x.transpose();
  // Constant augmented feature; its weight absorbs the running intercept correction.
  constexpr double kAug = 3.0;
  RVec qd(n);
  for (Index j = 0; j < n; ++j) qd[j] = xt.col(j).squaredNorm() + kAug * kAug;

  RVec& beta = fit.beta;
  RVec& w = fit.w;
  double beta_sum = 0.0;
  double b0 = median(z);

  const double eq_tol = 1e-10 * std::max(1.0, C);
  long passes = 0;
  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    fit.outer_rounds = outer;
    double violation = 0.0;
    do {
      violation = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double g = xt.col(j).dot(w) + kAug * kAug * beta_sum - (z[j] - b0);
        const double gp = g + eps;
        const double gn = g - eps;
        const double bj = beta[j];

        double v = 0.0;
        if (bj == 0.0) {
          if (gp < 0.0) v = -gp;
          else if (gn > 0.0) v = gn;
        } else if (bj >= C) {
          v = gp > 0.0 ? gp : 0.0;
        } else if (bj <= -C) {
          v = gn < 0.0 ? -gn : 0.0;
        } else if (bj > 0.0) {
          v = std::abs(gp);
        } else {
          v = std::abs(gn);
        }
        violation = std::max(violation, v);

        const double h = qd[j];
        double step;
        if (gp < h * bj) step = -gp / h;
        else if (gn > h * bj) step = -gn / h;
        else step = -bj;
        if (std::abs(step) < 1e-15) continue;
        const double nb = std::clamp(bj + step, -C, C);
        const double delta = nb - bj;
        if (delta == 0.0) continue;
        beta[j] = nb;
        beta_sum += delta;
        w.noalias() += delta * xt.col(j);
      }
      ++passes;
      if (passes >= opts.max_passes) {
        fit.b = b0 + kAug * kAug * beta_sum;
        fit.passes = passes;
        finish(fit, x, z, C, eps);
        throw SvrError("svr: no convergence within " + std::to_string(opts.max_passes) +
                           " passes (duality gap " + std::to_string(fit.gap) + ")",
                       fit);
      }
    } while (violation > opts.tolerance);

    // Multiplier update: fold the augmented weight into the intercept.
    const double correction = kAug * kAug * beta_sum;
    b0 += correction;
    if (std::abs(beta_sum) <= eq_tol) break;
  }

  // beta_sum is now within eq_tol of zero; its last correction is already folded into b0.
  fit.b = b0;
  fit.passes = passes;
  finish(fit, x, z, C, eps);
  if (std::abs(beta_sum) > eq_tol)
    throw SvrError("svr: intercept did not settle within " + std::to_string(opts.max_outer) + " rounds", fit);
}

}  // namespace

SvrFit fit_linear_svr(const RMat& x, const RVec& z, double C, double eps, const SvrOptions& opts) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (!(C > 0.0)) throw Error("svr: C must be positive");
  if (!(eps >= 0.0)) throw Error("svr: epsilon must be nonnegative");
  if (z.size() != n) throw Error("svr: target length does not match sample count");
  if (n == 0) throw Error("svr: empty training set");

  SvrFit fit;
  fit.w = RVec::Zero(d);
  fit.beta = RVec::Zero(n);

  // Every target fits inside one tube: the zero-weight model is optimal with zero slack.
  const double lo = z.minCoeff();
  const double hi = z.maxCoeff();
  if (hi - lo <= 2.0 * eps) {
    fit.b = std::clamp(median(z), hi - eps, lo + eps);
    fit.primal = 0.0;
    return fit;
  }

  if (opts.method == SvrSolver::interior_point)
    fit_interior_point(fit, x, z, C, eps, opts);
  else
    fit_coordinate_descent(fit, x, z, C, eps, opts);
  return fit;
}

}  // namespace hyflow

