#include "mpcc/penalisation.hpp"

#include <chrono>
#include <cmath>

#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

Vector stack3(const Vector& a, const Vector& b, const Vector& c) {
  Vector out(a.size() + b.size() + c.size());
  out << a, b, c;
  return out;
}

}  // namespace


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
const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::NotConverged: return "NotConverged";
    case SolveStatus::InnerFailure: return "InnerFailure";
    case SolveStatus::LineSearchFail: return "LineSearchFail";
    case SolveStatus::SingularJacobian: return "SingularJacobian";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

Nlp build_penalised(const MpccProblem& problem, double pi) {
  if (pi < 0.0) throw ContractError("build_penalised: pi must be >= 0");
  const int p = problem.n_ineq, q = problem.n_eq, r = problem.n_comp;

  Nlp nlp;
  nlp.name = problem.name + "/penalised";
  nlp.n_vars = problem.n_vars;
  nlp.n_ineq = p + 2 * r;
  nlp.n_eq = q;

  nlp.objective = [problem, pi, r](const Vector& z) {
    double val = problem.f(z);
    if (r > 0 && pi != 0.0) val += pi * problem.G(z).dot(problem.H(z));
    return val;
  };
  nlp.gradient = [problem, pi, r](const Vector& z) {
    Vector grad = problem.grad_f(z);
    if (r > 0 && pi != 0.0) {
      grad += pi * (problem.jac_G(z).transpose() * problem.H(z) +
                    problem.jac_H(z).transpose() * problem.G(z));
    }
    return grad;
  };
  nlp.c_ineq = [problem, p, r](const Vector& z) {
    Vector gv = p > 0 ? problem.g(z) : Vector(0);
    Vector Gv = r > 0 ? problem.G(z) : Vector(0);
    Vector Hv = r > 0 ? problem.H(z) : Vector(0);
    return stack3(gv, Gv, Hv);
  };
  nlp.jac_ineq = [problem, p, r](const Vector& z) {
    Matrix j(p + 2 * r, problem.n_vars);
    if (p > 0) j.topRows(p) = problem.jac_g(z);
    if (r > 0) {
      j.middleRows(p, r) = problem.jac_G(z);
      j.bottomRows(r) = problem.jac_H(z);
    }
    return j;
  };
  if (q > 0) {
    nlp.c_eq = problem.h;
    nlp.jac_eq = problem.jac_h;
  }

  if (problem.lagrangian_hessian) {
    nlp.lagrangian_hessian = [problem, pi, p, q, r](const Vector& z,
                                                    double sigma,
                                                    const Vector& mult_ineq,
                                                    const Vector& mult_eq) {
      const Vector lam_g = mult_ineq.head(p);
      const Vector lam_G = mult_ineq.segment(p, r);
      const Vector lam_H = mult_ineq.tail(r);
      Vector nu_G = lam_G, nu_H = lam_H;
      Matrix w;
      if (r > 0 && pi != 0.0) {
        const Vector Gv = problem.G(z);
        const Vector Hv = problem.H(z);
        nu_G -= sigma * pi * Hv;
        nu_H -= sigma * pi * Gv;
        w = problem.lagrangian_hessian(z, sigma, lam_g, mult_eq, nu_G, nu_H);
        const Matrix jg = problem.jac_G(z);
        const Matrix jh = problem.jac_H(z);
        // Product-rule cross terms pi * (∇G_i ∇H_iᵀ + ∇H_i ∇G_iᵀ).
        for (int i = 0; i < r; ++i)
          add_symmetric_outer(w, jg.row(i), jh.row(i), sigma * pi);
      } else {
        w = problem.lagrangian_hessian(z, sigma, lam_g, mult_eq, nu_G, nu_H);
      }
      return w;
    };
  }
  return nlp;
}

namespace {

MultiplierSet augmented_multipliers(const MpccProblem& problem,
                                    const NlpResult& inner, double pi,
                                    const Vector& z) {
  const int p = problem.n_ineq, r = problem.n_comp;
  MultiplierSet m;
  m.nu_g = inner.mult_ineq.head(p);
  m.nu_h = inner.mult_eq;
  m.nu_G = inner.mult_ineq.segment(p, r);
  m.nu_H = inner.mult_ineq.tail(r);
  if (r > 0 && pi != 0.0) {
    m.nu_G -= pi * problem.H(z);
    m.nu_H -= pi * problem.G(z);
  }
  return m;
}

SolveTrace run_penalisation(const MpccProblem& problem, const Vector& z0,
                            const PenalisationParams& params, bool sequential,
                            double fixed_pi, double fixed_eps) {
  const auto t_start = std::chrono::steady_clock::now();
  SolveTrace trace;
  Vector z = z0;
  NlpOptions opts;
  opts.max_iter = params.inner_max_iter;

  NlpResult inner;
  double pi = sequential ? params.pi0 : fixed_pi;
  const int rounds = sequential ? params.max_outer : 1;

  // Best round so far: late rounds with very large parameters can damage a
  // good earlier iterate, so non-converged exits return the best one.
  int consecutive_failures = 0;
  bool have_best = false;
  Vector best_z;
  NlpResult best_inner;
  double best_pi = pi, best_comp = 0.0, best_f = 0.0;

  for (int t = 0; t < rounds; ++t) {
    if (sequential) pi = params.pi0 * std::pow(params.pi_factor, t);
    const double eps =
        sequential
            ? std::max(params.eps0 * std::pow(params.eps_factor, t),
                       params.eps_floor)
            : fixed_eps;

    const Nlp nlp = build_penalised(problem, pi);
    inner = solve_nlp(nlp, z, eps, opts);
    z = inner.z;

    TraceRecord rec;
    rec.outer = t + 1;
    rec.param = pi;
    rec.eps = eps;
    rec.z = z;
    rec.inner_iterations = inner.iterations;
    rec.inner_status = inner.status;
    rec.kkt = inner.residuals;
    rec.comp_violation = complementarity_violation(problem, z);
    rec.product =
        problem.n_comp > 0 ? problem.G(z).dot(problem.H(z)) : 0.0;
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
      best_pi = pi;
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
    // Iteration limits and stalled line searches still leave a usable
    // iterate; the homotopy continues and often recovers at the next
    // parameter value.
    trace.status = inner.status == NlpStatus::Converged
                       ? SolveStatus::NotConverged
                       : SolveStatus::InnerFailure;

    // Warm-start the next round from this round's multipliers.
    opts.mult_ineq0 = inner.mult_ineq;
    opts.mult_eq0 = inner.mult_eq;
  }

  if (trace.status != SolveStatus::Converged && have_best) {
    z = best_z;
    inner = best_inner;
    pi = best_pi;
  }
  trace.z = z;
  trace.final_param = pi;
  trace.objective = problem.f(z);
  trace.multipliers = augmented_multipliers(problem, inner, pi, z);
  trace.wall_time = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
  return trace;
}

}  // namespace

SolveTrace solve_sequential_penalisation(const MpccProblem& problem,
                                         const Vector& z0,
                                         const PenalisationParams& params) {
  return run_penalisation(problem, z0, params, true, 0.0, 0.0);
}

SolveTrace solve_exact_penalisation(const MpccProblem& problem,
                                    const Vector& z0, double pi, double eps,
                                    const PenalisationParams& params) {
  if (pi < 0.0) throw ContractError("solve_exact_penalisation: pi >= 0");
  return run_penalisation(problem, z0, params, false, pi, eps);
}

}  // namespace mpcc
