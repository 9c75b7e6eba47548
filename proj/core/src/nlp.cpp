#include "mpcc/nlp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

constexpr double kBoundaryFraction = 0.995;
constexpr double kArmijoSlope = 1e-4;
constexpr double kMinStep = 1e-16;
constexpr double kDivergedNorm = 1e12;
constexpr double kSigmaClip = 1e10;  // primal-dual Σ safeguard

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

struct Evaluation {
  double f = 0.0;
  Vector grad, ci, ce;
  Matrix ji, je;
};

Evaluation evaluate(const Nlp& nlp, const Vector& z, bool derivatives) {
  Evaluation e;
  e.f = nlp.objective(z);
  if (nlp.n_ineq > 0) e.ci = nlp.c_ineq(z);
  if (nlp.n_eq > 0) e.ce = nlp.c_eq(z);
  if (derivatives) {
    e.grad = nlp.gradient(z);
    if (nlp.n_ineq > 0) e.ji = nlp.jac_ineq(z);
    if (nlp.n_eq > 0) e.je = nlp.jac_eq(z);
  }
  return e;
}

double constraint_l1(const Evaluation& e, const Vector& s) {
  double theta = 0.0;
  if (e.ce.size() > 0) theta += e.ce.lpNorm<1>();
  if (e.ci.size() > 0) theta += (e.ci - s).lpNorm<1>();
  return theta;
}

}  // namespace

const char* to_string(NlpStatus status) {
  switch (status) {
    case NlpStatus::Converged: return "Converged";
    case NlpStatus::IterLimit: return "IterLimit";
    case NlpStatus::LineSearchFail: return "LineSearchFail";
    case NlpStatus::Diverged: return "Diverged";
  }
  return "?";
}

KktResidual kkt_residual_nlp(const Nlp& nlp, const Vector& z,
                             const Vector& mult_ineq, const Vector& mult_eq) {
  if (z.size() != nlp.n_vars || mult_ineq.size() != nlp.n_ineq ||
      mult_eq.size() != nlp.n_eq)
    throw ContractError("kkt_residual_nlp: dimension mismatch");

  Vector r = nlp.gradient(z);
  KktResidual out;
  if (nlp.n_ineq > 0) {
    const Vector ci = nlp.c_ineq(z);
    r -= nlp.jac_ineq(z).transpose() * mult_ineq;
    out.feasibility = std::max(out.feasibility, inf_norm(ci.cwiseMin(0.0)));
    out.complementarity = inf_norm(ci.cwiseProduct(mult_ineq));
  }
  if (nlp.n_eq > 0) {
    const Vector ce = nlp.c_eq(z);
    r -= nlp.jac_eq(z).transpose() * mult_eq;
    out.feasibility = std::max(out.feasibility, inf_norm(ce));
  }
  out.stationarity = inf_norm(r);
  return out;
}

NlpResult solve_nlp(const Nlp& nlp, const Vector& z0, double eps,
                    const NlpOptions& opts) {
  if (eps <= 0.0) throw ContractError("solve_nlp: eps must be positive");
  if (z0.size() != nlp.n_vars) throw ContractError("solve_nlp: z0 size");
  const auto t_start = std::chrono::steady_clock::now();

  const int n = nlp.n_vars, mi = nlp.n_ineq, me = nlp.n_eq;
  const double mu_floor = eps / 10.0;

  Vector z = z0;
  Evaluation cur = evaluate(nlp, z, true);

  Vector s(mi), lambda(mi), y(me);
  if (mi > 0) s = cur.ci.cwiseMax(0.1);
  const bool warm =
      opts.mult_ineq0.size() == mi && opts.mult_eq0.size() == me &&
      (mi + me > 0) && (opts.mult_ineq0.size() + opts.mult_eq0.size() > 0);
  double mu = opts.mu0;
  if (warm) {
    lambda = opts.mult_ineq0.cwiseMax(1e-8);
    y = opts.mult_eq0;
    if (mi > 0)
      mu = std::min(opts.mu0, std::max(mu_floor, s.dot(lambda) / mi));
  } else {
    if (mi > 0) lambda = (mu * s.cwiseInverse()).cwiseMax(1e-8);
    y.setZero();
  }
  if (mi == 0) mu = mu_floor;

  // Quasi-Newton state, used only when no exact Hessian is supplied.
  const bool exact_hessian = static_cast<bool>(nlp.lagrangian_hessian);
  Matrix bfgs = Matrix::Identity(n, n);
  double delta_last = 0.0;  // inertia correction warm start

  // Fletcher-Leyffer style filter on (theta, barrier objective) pairs,
  // reset at every barrier reduction. An l1 merit was tried first but its
  // penalty parameter tracks the pi-scaled multipliers on penalised
  // subproblems and then vetoes genuine Newton steps; the filter has no
  // such coupling.
  std::vector<std::pair<double, double>> filter;
  double theta_cap = std::numeric_limits<double>::infinity();
  double phase_best = std::numeric_limits<double>::infinity();
  int phase_stall = 0;
  NlpResult res;
  res.status = NlpStatus::IterLimit;

  static const bool prof = std::getenv("MPCC_IPM_PROF") != nullptr;
  static double t_eval = 0, t_qr = 0, t_hr = 0, t_llt = 0, t_ls = 0, t_rest = 0;
  auto tick = []() { return std::chrono::steady_clock::now(); };
  auto tock = [](auto t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  auto finish = [&](NlpStatus status, int iters) {
    if (prof)
      std::fprintf(stderr,
                   "prof eval=%.2f qr=%.2f hr=%.2f llt=%.2f ls=%.2f\n",
                   t_eval, t_qr, t_hr, t_llt, t_ls);
    res.z = z;
    res.mult_ineq = lambda;
    res.mult_eq = y;
    res.status = status;
    res.iterations = iters;
    res.residuals = kkt_residual_nlp(nlp, z, lambda, y);
    res.kkt_residual = res.residuals.max();
    res.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
    return res;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (inf_norm(z) > kDivergedNorm) return finish(NlpStatus::Diverged, iter);

    Vector r_d = cur.grad;
    if (me > 0) r_d -= cur.je.transpose() * y;
    if (mi > 0) r_d -= cur.ji.transpose() * lambda;

    // eps-KKT test. Stationarity and complementarity are measured relative
    // to the multiplier scale (the usual interior-point convention): an
    // absolute 1e-6 residual is unreachable in doubles once multipliers
    // grow with a penalty parameter, while the scaled system still certifies
    // the same eps-KKT point. Reported residuals stay unscaled.
    const double err_stat = inf_norm(r_d);
    double err_feas = 0.0, err_comp = 0.0;
    double mult_l1 = y.size() > 0 ? y.lpNorm<1>() : 0.0;
    if (mi > 0) mult_l1 += lambda.lpNorm<1>();
    const double s_d =
        (mi + me) > 0
            ? std::max(1.0, mult_l1 / (100.0 * (mi + me)))
            : 1.0;
    if (me > 0) err_feas = inf_norm(cur.ce);
    if (mi > 0) {
      err_feas = std::max(err_feas, inf_norm(cur.ci.cwiseMin(0.0)));
      err_comp = inf_norm(cur.ci.cwiseProduct(lambda));
    }
    const double err =
        std::max(err_stat / s_d, std::max(err_feas, err_comp / s_d));
    if (err <= eps) return finish(NlpStatus::Converged, iter);

    // Barrier subproblem test drives the monotone mu reduction; a phase
    // that stops improving is cut short, since large-mu subproblems of
    // penalised programs can be the slowest ones. The merit penalty
    // re-adapts from below after each reduction.
    if (mi > 0 && mu > mu_floor) {
      double err_mu = inf_norm(r_d) / s_d;
      if (me > 0) err_mu = std::max(err_mu, inf_norm(cur.ce));
      err_mu = std::max(err_mu, inf_norm(cur.ci - s));
      err_mu = std::max(
          err_mu,
          inf_norm(s.cwiseProduct(lambda) - Vector::Constant(mi, mu)) / s_d);
      if (err_mu < phase_best) {
        phase_best = err_mu;
        phase_stall = 0;
      } else {
        ++phase_stall;
      }
      if (err_mu <= 10.0 * mu || phase_stall >= 30) {
        mu = std::max(mu_floor, 0.2 * mu);
        filter.clear();
        theta_cap = std::numeric_limits<double>::infinity();
        phase_best = std::numeric_limits<double>::infinity();
        phase_stall = 0;
      }
    }

    // Newton system, condensed to (dz, dy).
    Matrix w = exact_hessian ? nlp.lagrangian_hessian(z, 1.0, lambda, y) : bfgs;
    Vector sigma(mi), r_i(mi), comp_rhs(mi);
    if (mi > 0) {
      for (int i = 0; i < mi; ++i) {
        // Primal-dual Σ with the dual clipped to a κ-neighbourhood of μ/s.
        const double li = std::min(std::max(lambda[i], mu / (kSigmaClip * s[i])),
                                   kSigmaClip * mu / s[i]);
        sigma[i] = li / s[i];
      }
      r_i = cur.ci - s;
      comp_rhs = lambda - Vector::Constant(mi, mu).cwiseQuotient(s);
    }

    // K = W + JiᵀΣJi in operator form over exact-zero-pruned sparse views;
    // large instances have structurally sparse Hessians and constraint
    // Jacobians, and the null-space algebra below only needs K-products.
    const Eigen::SparseMatrix<double> w_s = w.sparseView();
    Eigen::SparseMatrix<double> ji_s;
    if (mi > 0) ji_s = cur.ji.sparseView();
    const auto apply_k = [&](const Matrix& x) {
      Matrix out = w_s * x;
      if (mi > 0)
        out += ji_s.transpose() *
               (sigma.asDiagonal() * (ji_s * x).eval()).eval();
      return out;
    };

    Vector rhs1 = -r_d;
    if (mi > 0) rhs1 -= cur.ji.transpose() * (comp_rhs + sigma.cwiseProduct(r_i));

    // Null-space decomposition along Jeᵀ = Q1 R; the inertia correction then
    // only has to make the reduced Hessian Q2ᵀKQ2 positive definite — K
    // itself may be indefinite off the constraint null space (penalised
    // objectives are). Everything here is independent of the bump, so the
    // regularisation retries below reuse it.
    Matrix q1, q2, h_r, kq1;
    Matrix r_tri;
    if (me > 0 && me < n) {
      auto t0 = tick();
      const Eigen::HouseholderQR<Matrix> qr(cur.je.transpose());
      const Matrix q_full = qr.householderQ() * Matrix::Identity(n, n);
      t_qr += tock(t0);
      r_tri = qr.matrixQR().topRows(me);
      double r_max = 0.0;
      for (int i = 0; i < me; ++i)
        r_max = std::max(r_max, std::abs(r_tri(i, i)));
      for (int i = 0; i < me; ++i)
        if (std::abs(r_tri(i, i)) <= 1e-12 * std::max(1.0, r_max))
          return finish(NlpStatus::LineSearchFail, iter);
      q1 = q_full.leftCols(me);
      q2 = q_full.rightCols(n - me);
      auto t1 = tick();
      h_r = q2.transpose() * apply_k(q2);
      h_r = 0.5 * (h_r + h_r.transpose()).eval();
      t_hr += tock(t1);
    } else if (me >= n) {
      return finish(NlpStatus::LineSearchFail, iter);
    }

    // The bump decays gradually between iterations so the step character
    // does not flicker; a failed line search escalates it and recomputes.
    const auto correct_and_factor = [&](const Matrix& h,
                                        Eigen::LLT<Matrix>& llt) {
      double delta = delta_last > 1e-10 ? 0.8 * delta_last : 0.0;
      const int dim = static_cast<int>(h.rows());
      for (int tries = 0;; ++tries) {
        llt.compute(delta == 0.0
                        ? h
                        : Matrix(h + delta * Matrix::Identity(dim, dim)));
        if (llt.info() == Eigen::Success) {
          delta_last = delta;
          return true;
        }
        delta = delta == 0.0 ? 1e-8 : delta * (delta_last > 0.0 ? 2.0 : 10.0);
        if (tries > 80) return false;
      }
    };

    const double theta0 = constraint_l1(cur, s);
    double barrier0 = cur.f;
    if (mi > 0)
      for (int i = 0; i < mi; ++i) barrier0 -= mu * std::log(s[i]);
    const double step_scale = std::max(1.0, inf_norm(z));
    if (!std::isfinite(theta_cap)) theta_cap = 1e4 * std::max(1.0, theta0);
    const double theta_small = 1e-4 * std::max(1.0, theta0);

    // Filter acceptance constants (standard choices).
    constexpr double kGammaTheta = 1e-5;
    constexpr double kGammaPhi = 1e-5;
    const auto filter_accepts = [&](double th, double ph) {
      if (!(th <= theta_cap)) return false;
      for (const auto& [tj, pj] : filter)
        if (th >= (1.0 - kGammaTheta) * tj && ph >= pj - kGammaPhi * tj)
          return false;
      return true;
    };

    Vector dz, dy = Vector::Zero(me), ds(mi), dlambda(mi);
    Vector z_trial, s_trial;
    Evaluation trial;
    double alpha = 0.0, alpha_d = 1.0;
    bool accepted = false;

    for (int reg_round = 0; reg_round < 4 && !accepted; ++reg_round) {
      Eigen::LLT<Matrix> llt;
      auto t2 = tick();
      if (me > 0) {
        if (!correct_and_factor(h_r, llt))
          return finish(NlpStatus::LineSearchFail, iter);
        const Vector u = r_tri.template triangularView<Eigen::Upper>()
                             .transpose()
                             .solve(-cur.ce);
        const Vector q1u = q1 * u;
        const Vector v =
            llt.solve(q2.transpose() * (rhs1 - apply_k(q1u)));
        dz = q1u + q2 * v;
        dy = r_tri.template triangularView<Eigen::Upper>().solve(
            q1.transpose() * (apply_k(dz) - rhs1));
      } else {
        Matrix k = w;
        if (mi > 0) {
          const Matrix js = sigma.cwiseSqrt().asDiagonal() * cur.ji;
          k.selfadjointView<Eigen::Lower>().rankUpdate(js.transpose());
          k.triangularView<Eigen::StrictlyUpper>() =
              k.triangularView<Eigen::StrictlyLower>().transpose();
        }
        if (!correct_and_factor(k, llt))
          return finish(NlpStatus::LineSearchFail, iter);
        dz = llt.solve(rhs1);
      }

      t_llt += tock(t2);
      if (mi > 0) {
        ds = cur.ji * dz + r_i;
        dlambda = -comp_rhs - sigma.cwiseProduct(ds);
      }

      // Fraction-to-boundary limits.
      double alpha_p = 1.0;
      alpha_d = 1.0;
      for (int i = 0; i < mi; ++i) {
        if (ds[i] < 0.0)
          alpha_p = std::min(alpha_p, -kBoundaryFraction * s[i] / ds[i]);
        if (dlambda[i] < 0.0)
          alpha_d =
              std::min(alpha_d, -kBoundaryFraction * lambda[i] / dlambda[i]);
      }

      double slope = cur.grad.dot(dz);
      if (mi > 0) slope -= mu * (ds.cwiseQuotient(s)).sum();

      const auto barrier_at = [&](const Vector& zz, const Vector& ss,
                                  Evaluation& out) {
        out = evaluate(nlp, zz, false);
        double phi = out.f;
        if (mi > 0)
          for (int i = 0; i < mi; ++i) phi -= mu * std::log(ss[i]);
        return phi;
      };

      // Trial acceptance: filter membership plus either Armijo progress on
      // the barrier objective (f-type steps near feasibility) or sufficient
      // progress in one of (theta, phi).
      bool accepted_f_type = false;
      const auto acceptable = [&](double th, double ph, double a) {
        if (!std::isfinite(th) || !std::isfinite(ph)) return false;
        if (!filter_accepts(th, ph)) return false;
        const bool f_type = theta0 <= theta_small && slope < 0.0;
        if (f_type && ph <= barrier0 + kArmijoSlope * a * slope) {
          accepted_f_type = true;
          return true;
        }
        accepted_f_type = false;
        return th <= (1.0 - kGammaTheta) * theta0 ||
               ph <= barrier0 - kGammaPhi * theta0;
      };

      alpha = alpha_p;
      auto t3 = tick();
      for (int ls = 0;; ++ls) {
        z_trial = z + alpha * dz;
        s_trial = mi > 0 ? (s + alpha * ds).eval() : s;
        double phi = barrier_at(z_trial, s_trial, trial);
        double theta_trial = constraint_l1(trial, s_trial);
        if (acceptable(theta_trial, phi, alpha)) {
          accepted = true;
          break;
        }

        // One second-order correction against the Maratos effect: re-solve
        // the range-space part with the constraint values at the rejected
        // point folded in.
        if (ls == 0 && me > 0 && std::isfinite(phi)) {
          const Vector ce_trial = nlp.c_eq(z_trial);
          const Vector u_soc = r_tri.template triangularView<Eigen::Upper>()
                                   .transpose()
                                   .solve(-ce_trial);
          const Vector dz_soc = q1 * u_soc;
          Vector s_soc = s_trial;
          bool soc_ok = true;
          if (mi > 0) {
            const Vector ds_soc = cur.ji * dz_soc;
            s_soc += ds_soc;
            for (int i = 0; i < mi && soc_ok; ++i)
              soc_ok = s_soc[i] >= (1.0 - kBoundaryFraction) * s[i];
          }
          if (soc_ok) {
            Evaluation soc_eval;
            const Vector z_soc = z_trial + dz_soc;
            const double phi_soc = barrier_at(z_soc, s_soc, soc_eval);
            const double theta_soc = constraint_l1(soc_eval, s_soc);
            if (acceptable(theta_soc, phi_soc, alpha)) {
              z_trial = z_soc;
              s_trial = s_soc;
              trial = soc_eval;
              accepted = true;
              break;
            }
          }
        }

        alpha *= 0.5;
        if (alpha * inf_norm(dz) <= kMinStep * step_scale) break;
      }

      t_ls += tock(t3);
      if (accepted && !accepted_f_type) {
        // theta-type step: block this corner of the (theta, phi) plane.
        filter.emplace_back(std::max((1.0 - kGammaTheta) * theta0, 1e-16),
                            barrier0 - kGammaPhi * theta0);
        if (filter.size() > 200)
          filter.erase(filter.begin(), filter.begin() + 100);
      }
      if (!accepted) {
        // More curvature, new step. Newton directions under heavy bumps act
        // like scaled gradients and eventually must produce descent.
        delta_last = std::max(delta_last * 10.0, 1e-4);
      }
    }
    if (!accepted) return finish(NlpStatus::LineSearchFail, iter);

    // MPCC_IPM_TRACE=1 prints the iteration log; debugging aid only.
    static const bool trace = std::getenv("MPCC_IPM_TRACE") != nullptr;
    if (trace)
      std::fprintf(stderr,
                   "ipm %4d mu=%8.2e st=%8.2e fe=%8.2e co=%8.2e "
                   "theta=%8.2e alpha=%8.2e ad=%8.2e delta=%8.2e\n",
                   iter, mu, err_stat, err_feas, err_comp, theta0, alpha,
                   alpha_d, delta_last);

    const Vector z_old = z;
    z = z_trial;
    if (mi > 0) {
      s = s_trial;
      // Duals move with the accepted primal fraction (capped by their own
      // boundary rule) so the Newton triple stays consistent when the line
      // search cuts the step, then snap back into the kappa-neighbourhood
      // of the central path so stray multipliers cannot poison the Hessian.
      lambda += std::min(alpha_d, alpha) * dlambda;
      for (int i = 0; i < mi; ++i)
        lambda[i] = std::min(std::max(lambda[i], mu / (kSigmaClip * s[i])),
                             kSigmaClip * mu / s[i]);
    }
    y += alpha * dy;

    auto t4 = tick();
    Evaluation next = evaluate(nlp, z, true);
    t_eval += tock(t4);

    if (!exact_hessian) {
      // Damped BFGS on the Lagrangian gradient.
      Vector gl_new = next.grad;
      Vector gl_old = cur.grad;
      if (me > 0) {
        gl_new -= next.je.transpose() * y;
        gl_old -= cur.je.transpose() * y;
      }
      if (mi > 0) {
        gl_new -= next.ji.transpose() * lambda;
        gl_old -= cur.ji.transpose() * lambda;
      }
      const Vector sk = z - z_old;
      Vector yk = gl_new - gl_old;
      const Vector bs = bfgs * sk;
      const double sbs = sk.dot(bs);
      double sy = sk.dot(yk);
      if (sbs > 1e-16) {
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          yk = theta * yk + (1.0 - theta) * bs;
          sy = sk.dot(yk);
        }
        if (sy > 1e-16)
          bfgs += yk * yk.transpose() / sy - bs * bs.transpose() / sbs;
      }
    }

    cur = next;
  }
  return finish(NlpStatus::IterLimit, opts.max_iter);
}

}  // namespace mpcc
