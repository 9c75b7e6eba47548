#include "mpcc/problem.hpp"

#include <cmath>

#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

}  // namespace

const char* to_string(StationarityLevel level) {
  switch (level) {
    case StationarityLevel::None: return "None";
    case StationarityLevel::W: return "W";
    case StationarityLevel::A: return "A";
    case StationarityLevel::C: return "C";
    case StationarityLevel::M: return "M";
    case StationarityLevel::S: return "S";
  }
  return "?";
}

IndexSets compute_index_sets(const MpccProblem& problem, const Vector& z,
                             double tol) {
  require(tol > 0.0, "compute_index_sets: tol must be positive");
  IndexSets sets;
  sets.tol = tol;

  if (problem.n_ineq > 0) {
    const Vector gv = problem.g(z);
    require(gv.size() == problem.n_ineq, "compute_index_sets: g size");
    for (int i = 0; i < problem.n_ineq; ++i)
      if (std::abs(gv[i]) <= tol) sets.I_g.push_back(i);
  }

  if (problem.n_comp > 0) {
    const Vector Gv = problem.G(z);
    const Vector Hv = problem.H(z);
    require(Gv.size() == problem.n_comp && Hv.size() == problem.n_comp,
            "compute_index_sets: G/H size");
    for (int i = 0; i < problem.n_comp; ++i) {
      if (Gv[i] < -tol)
        throw FeasibilityError("compute_index_sets: G_" + std::to_string(i) +
                               " = " + std::to_string(Gv[i]) + " < -tol");
      if (Hv[i] < -tol)
        throw FeasibilityError("compute_index_sets: H_" + std::to_string(i) +
                               " = " + std::to_string(Hv[i]) + " < -tol");
      const bool g_active = Gv[i] <= tol;
      const bool h_active = Hv[i] <= tol;
      if (g_active && h_active)
        sets.I_GH.push_back(i);
      else if (g_active)
        sets.I_G.push_back(i);
      else if (h_active)
        sets.I_H.push_back(i);
      // both strictly positive: complementarity violated at i, no set
    }
  }
  return sets;
}

double complementarity_violation(const MpccProblem& problem, const Vector& z) {
  if (problem.n_comp == 0) return 0.0;
  const Vector Gv = problem.G(z);
  const Vector Hv = problem.H(z);
  double worst = 0.0;
  for (int i = 0; i < problem.n_comp; ++i)
    worst = std::max(worst, std::min(std::abs(Gv[i]), std::abs(Hv[i])));
  return worst;
}

Vector lagrangian_grad(const MpccProblem& problem, const Vector& z,
                       const MultiplierSet& m) {
  require(z.size() == problem.n_vars, "lagrangian_grad: z size");
  require(m.nu_g.size() == problem.n_ineq, "lagrangian_grad: nu_g size");
  require(m.nu_h.size() == problem.n_eq, "lagrangian_grad: nu_h size");
  require(m.nu_G.size() == problem.n_comp, "lagrangian_grad: nu_G size");
  require(m.nu_H.size() == problem.n_comp, "lagrangian_grad: nu_H size");

  Vector grad = problem.grad_f(z);
  require(grad.size() == problem.n_vars, "lagrangian_grad: grad_f size");
  if (problem.n_ineq > 0) grad -= problem.jac_g(z).transpose() * m.nu_g;
  if (problem.n_eq > 0) grad -= problem.jac_h(z).transpose() * m.nu_h;
  if (problem.n_comp > 0) {
    grad -= problem.jac_G(z).transpose() * m.nu_G;
    grad -= problem.jac_H(z).transpose() * m.nu_H;
  }
  return grad;
}

StationarityVerdict classify_stationarity(const MpccProblem& problem,
                                          const Vector& z,
                                          const MultiplierSet& m, double tol) {
  // Feasibility gate; compute_index_sets flags G/H sign violations.
  if (problem.n_ineq > 0) {
    const Vector gv = problem.g(z);
    for (int i = 0; i < problem.n_ineq; ++i)
      if (gv[i] < -tol)
        throw FeasibilityError("classify_stationarity: g_" +
                               std::to_string(i) + " < -tol");
  }
  if (problem.n_eq > 0) {
    const Vector hv = problem.h(z);
    for (int i = 0; i < problem.n_eq; ++i)
      if (std::abs(hv[i]) > tol)
        throw FeasibilityError("classify_stationarity: h_" +
                               std::to_string(i) + " != 0");
  }
  const IndexSets sets = compute_index_sets(problem, z, tol);
  if (complementarity_violation(problem, z) > tol)
    throw FeasibilityError("classify_stationarity: complementarity violated");

  StationarityVerdict verdict;
  verdict.residual = lagrangian_grad(problem, z, m).lpNorm<Eigen::Infinity>();

  bool weak = true;
  if (verdict.residual > tol) {
    verdict.violated_conditions.push_back("stationarity");
    weak = false;
  }

  // Base multiplier conditions: νg_i >= 0 on the active set, νg_i = 0 off it;
  // νH_i = 0 on I_G and νG_i = 0 on I_H.
  std::vector<bool> g_active(problem.n_ineq, false);
  for (int i : sets.I_g) g_active[i] = true;
  for (int i = 0; i < problem.n_ineq; ++i) {
    if (g_active[i] ? (m.nu_g[i] < -tol) : (std::abs(m.nu_g[i]) > tol)) {
      verdict.violated_conditions.push_back("nu_g[" + std::to_string(i) + "]");
      weak = false;
    }
  }
  for (int i : sets.I_G)
    if (std::abs(m.nu_H[i]) > tol) {
      verdict.violated_conditions.push_back("nu_H[" + std::to_string(i) + "]");
      weak = false;
    }
  for (int i : sets.I_H)
    if (std::abs(m.nu_G[i]) > tol) {
      verdict.violated_conditions.push_back("nu_G[" + std::to_string(i) + "]");
      weak = false;
    }

  if (!weak) {
    verdict.level = StationarityLevel::None;
    return verdict;
  }

  // Grade the biactive multipliers.
  bool a_ok = true, c_ok = true, m_ok = true, s_ok = true;
  for (int i : sets.I_GH) {
    const double a = m.nu_G[i];
    const double b = m.nu_H[i];
    const bool both_nonneg = a >= -tol && b >= -tol;
    if (!(a >= -tol || b >= -tol)) a_ok = false;
    if (!(a * b >= -tol)) c_ok = false;
    if (!(both_nonneg || std::abs(a * b) <= tol)) m_ok = false;
    if (!both_nonneg) s_ok = false;
  }
  if (s_ok)
    verdict.level = StationarityLevel::S;
  else if (m_ok)
    verdict.level = StationarityLevel::M;
  else if (a_ok)
    verdict.level = StationarityLevel::A;
  else if (c_ok)
    verdict.level = StationarityLevel::C;
  else
    verdict.level = StationarityLevel::W;

  if (!a_ok) verdict.violated_conditions.push_back("biactive(A)");
  if (!c_ok) verdict.violated_conditions.push_back("biactive(C)");
  if (!m_ok) verdict.violated_conditions.push_back("biactive(M)");
  if (!s_ok) verdict.violated_conditions.push_back("biactive(S)");
  return verdict;
}

}  // namespace mpcc
