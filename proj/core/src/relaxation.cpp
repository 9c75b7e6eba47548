#include "mpcc/relaxation.hpp"

#include <chrono>
#include <cmath>

#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

// w += scale * (a bᵀ + b aᵀ) for sparse rows, touching only nonzeros.
void add_symmetric_outer(Matrix& w, const Eigen::RowVectorXd& a,
                         const Eigen::RowVectorXd& b, double scale) {
  std::vector<int> ia, ib;
  for (int j = 0; j < a.size(); ++j)
    if (a[j] != 0.0) ia.push_back(j);
  for (int j = 0; j < b.size(); ++j)
    if (b[j] != 0.0) ib.push_back(j);
  for (int j1 : ia)
    for (int j2 : ib) {
      const double v = scale * a[j1] * b[j2];
      w(j1, j2) += v;
      w(j2, j1) += v;
    }
}

}  // namespace

Nlp build_relaxed(const MpccProblem& problem, double tau) {
  if (tau < 0.0) throw ContractError("build_relaxed: tau must be >= 0");
  const int p = problem.n_ineq, q = problem.n_eq, r = problem.n_comp;

  Nlp nlp;
  nlp.name = problem.name + "/relaxed";
  nlp.n_vars = problem.n_vars;
  nlp.n_ineq = p + 3 * r;
  nlp.n_eq = q;

  nlp.objective = problem.f;
  nlp.gradient = problem.grad_f;
  nlp.c_ineq = [problem, tau, p, r](const Vector& z) {
    Vector out(p + 3 * r);
    if (p > 0) out.head(p) = problem.g(z);
    if (r > 0) {
      const Vector Gv = problem.G(z);
      const Vector Hv = problem.H(z);
      out.segment(p, r) = Gv;
      out.segment(p + r, r) = Hv;
      out.tail(r) = Vector::Constant(r, tau) - Gv.cwiseProduct(Hv);
    }
    return out;
  };
  nlp.jac_ineq = [problem, p, r](const Vector& z) {
    Matrix j(p + 3 * r, problem.n_vars);
    if (p > 0) j.topRows(p) = problem.jac_g(z);
    if (r > 0) {
      const Matrix jg = problem.jac_G(z);
      const Matrix jh = problem.jac_H(z);
      const Vector Gv = problem.G(z);
      const Vector Hv = problem.H(z);
      j.middleRows(p, r) = jg;
      j.middleRows(p + r, r) = jh;
      for (int i = 0; i < r; ++i)
        j.row(p + 2 * r + i) = -(Hv[i] * jg.row(i) + Gv[i] * jh.row(i));
    }
    return j;
  };
  if (q > 0) {
    nlp.c_eq = problem.h;
    nlp.jac_eq = problem.jac_h;
  }

  if (problem.lagrangian_hessian) {
    nlp.lagrangian_hessian = [problem, p, r](const Vector& z, double sigma,
                                             const Vector& mult_ineq,
                                             const Vector& mult_eq) {
      const Vector lam_g = mult_ineq.head(p);
      const Vector lam_G = mult_ineq.segment(p, r);
      const Vector lam_H = mult_ineq.segment(p + r, r);
      const Vector lam_GH = mult_ineq.tail(r);
      Vector nu_G = lam_G, nu_H = lam_H;
      Matrix w;
      if (r > 0) {
        const Vector Gv = problem.G(z);
        const Vector Hv = problem.H(z);
        nu_G -= lam_GH.cwiseProduct(Hv);
        nu_H -= lam_GH.cwiseProduct(Gv);
        w = problem.lagrangian_hessian(z, sigma, lam_g, mult_eq, nu_G, nu_H);
        const Matrix jg = problem.jac_G(z);
        const Matrix jh = problem.jac_H(z);
        for (int i = 0; i < r; ++i) {
          if (lam_GH[i] == 0.0) continue;
          add_symmetric_outer(w, jg.row(i), jh.row(i), lam_GH[i]);
        }
      } else {
        w = problem.lagrangian_hessian(z, sigma, lam_g, mult_eq, nu_G, nu_H);
      }
      return w;
    };
  }
  return nlp;
}

namespace {

// Theorem-style composition: keep the pair multipliers where the pair
// function vanishes, fold active product rows in with a minus sign, zero
// elsewhere.
MultiplierSet composed_multipliers(const MpccProblem& problem,
                                   const NlpResult& inner, double tau,
                                   const Vector& z, double act_tol) {
  const int p = problem.n_ineq, r = problem.n_comp;
  MultiplierSet m;
  m.nu_g = inner.mult_ineq.head(p);
  m.nu_h = inner.mult_eq;
  m.nu_G = Vector::Zero(r);
  m.nu_H = Vector::Zero(r);
  if (r == 0) return m;

  const Vector lam_G = inner.mult_ineq.segment(p, r);
  const Vector lam_H = inner.mult_ineq.segment(p + r, r);
  const Vector lam_GH = inner.mult_ineq.tail(r);
  const Vector Gv = problem.G(z);
  const Vector Hv = problem.H(z);
  for (int i = 0; i < r; ++i) {
    const bool product_active = tau - Gv[i] * Hv[i] <= act_tol;
    if (Gv[i] <= act_tol)
      m.nu_G[i] = lam_G[i];
    else if (product_active)
      m.nu_G[i] = -lam_GH[i] * Hv[i];
    if (Hv[i] <= act_tol)
      m.nu_H[i] = lam_H[i];
    else if (product_active)
      m.nu_H[i] = -lam_GH[i] * Gv[i];
  }
  return m;
}

SolveTrace run_relaxation(const MpccProblem& problem, const Vector& z0,
                          const RelaxationParams& params, bool sequential,
                          double fixed_tau, double fixed_eps) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveTrace trace;
  Vector z = z0;
  NlpOptions opts;
  opts.max_iter = params.inner_max_iter;

  NlpResult inner;
  double tau = sequential ? params.tau0 : fixed_tau;
  const int rounds = sequential ? params.max_outer : 1;

  int consecutive_failures = 0;
  bool have_best = false;
  Vector best_z;
  NlpResult best_inner;
  double best_tau = tau, best_comp = 0.0, best_f = 0.0;

  for (int t = 0; t < rounds; ++t) {
    if (sequential)
      tau = std::max(params.tau0 * std::pow(params.tau_factor, t),
                     params.tau_floor);
    const double eps =
        sequential
            ? std::max(params.eps0 * std::pow(params.eps_factor, t),
                       params.eps_floor)
            : fixed_eps;

    const Nlp nlp = build_relaxed(problem, tau);
    inner = solve_nlp(nlp, z, eps, opts);
    z = inner.z;

    TraceRecord rec;
    rec.outer = t + 1;
    rec.param = tau;
    rec.eps = eps;
    rec.z = z;
    rec.inner_iterations = inner.iterations;
    rec.inner_status = inner.status;
    rec.kkt = inner.residuals;
    rec.comp_violation = complementarity_violation(problem, z);
    rec.product = problem.n_comp > 0 ? problem.G(z).dot(problem.H(z)) : 0.0;
    rec.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
    trace.records.push_back(rec);

    const double f_here = problem.f(z);
    if (!have_best || rec.comp_violation < best_comp - 1e-12 ||
        (std::abs(rec.comp_violation - best_comp) <= 1e-12 &&
         f_here < best_f)) {
      have_best = true;
      best_z = z;
      best_inner = inner;
      best_tau = tau;
      best_comp = rec.comp_violation;
      best_f = f_here;
    }

    // Algorithm stop test: the componentwise complementarity criterion
    // gates Converged; the product criterion is recorded alongside in the
    // trace. Weak inner outcomes (iteration cap, stalled line search) keep
    // the homotopy going, which often recovers at the next parameter.
    if (rec.comp_violation <= params.eps_exit) {
      trace.status = SolveStatus::Converged;
      break;
    }
    if (inner.status == NlpStatus::Diverged) {
      trace.status = SolveStatus::InnerFailure;
      break;
    }
    // Two consecutive failed rounds without reaching a new best iterate:
    // further parameter growth almost never recovers, so stop early with
    // the best point instead of burning the remaining rounds.
    if (inner.status != NlpStatus::Converged &&
        rec.comp_violation > best_comp) {
      if (++consecutive_failures >= 2) {
        trace.status = SolveStatus::InnerFailure;
        break;
      }
    } else {
      consecutive_failures = 0;
    }
    trace.status = inner.status == NlpStatus::Converged
                       ? SolveStatus::NotConverged
                       : SolveStatus::InnerFailure;

    opts.mult_ineq0 = inner.mult_ineq;
    opts.mult_eq0 = inner.mult_eq;
  }

  if (trace.status != SolveStatus::Converged && have_best) {
    z = best_z;
    inner = best_inner;
    tau = best_tau;
  }
  trace.z = z;
  trace.final_param = tau;
  trace.objective = problem.f(z);
  const double act_tol = std::max(1e-8, params.eps_exit);
  trace.multipliers = composed_multipliers(problem, inner, tau, z, act_tol);
  trace.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  return trace;
}

}  // namespace

SolveTrace solve_sequential_relaxation(const MpccProblem& problem,
                                       const Vector& z0,
                                       const RelaxationParams& params) {
  return run_relaxation(problem, z0, params, true, 0.0, 0.0);
}

SolveTrace solve_exact_relaxation(const MpccProblem& problem, const Vector& z0,
                                  double tau, double eps,
                                  const RelaxationParams& params) {
  if (tau < 0.0) throw ContractError("solve_exact_relaxation: tau >= 0");
  return run_relaxation(problem, z0, params, false, tau, eps);
}

}  // namespace mpcc
