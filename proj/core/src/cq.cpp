#include "mpcc/cq.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "mpcc/detail/linprog.hpp"
#include "mpcc/errors.hpp"

namespace mpcc {

namespace {

constexpr double kDependentTol = 1e-8;
constexpr double kClearTol = 1e-10;
constexpr double kBig = 1e8;

Matrix stack_columns(const std::vector<Vector>& vecs, int dim) {
  Matrix m(dim, static_cast<Eigen::Index>(vecs.size()));
  for (size_t j = 0; j < vecs.size(); ++j) {
    if (vecs[j].size() != dim)
      throw ContractError("cq: vectors must share one dimension");
    m.col(static_cast<Eigen::Index>(j)) = vecs[j];
  }
  return m;
}

double family_scale(const Matrix& A, const Matrix& B) {
  double s = 1.0;
  if (A.cols() > 0) s = std::max(s, A.cwiseAbs().maxCoeff());
  if (B.cols() > 0) s = std::max(s, B.cwiseAbs().maxCoeff());
  return s;
}

// Least squares mu minimizing ‖A lambda + B mu‖₂.
Vector recover_mu(const Matrix& B, const Vector& rhs) {
  if (B.cols() == 0) return Vector(0);
  return B.colPivHouseholderQr().solve(-rhs);
}

// max t s.t. Bᵀd = 0, Aᵀd >= t, d in [-1,1]^n. Returns (d, t).
std::pair<Vector, double> direction_witness(const Matrix& A, const Matrix& B) {
  const int n = static_cast<int>(A.rows() > 0 ? A.rows() : B.rows());
  const int na = static_cast<int>(A.cols());
  const int nb = static_cast<int>(B.cols());
  if (na == 0) return {Vector::Zero(n), 0.0};

  // Variables: [d (n), t (1), s (na)] with Aᵀd - t - s = 0 and Bᵀd = 0.
  const int cols = n + 1 + na;
  Matrix lp_a = Matrix::Zero(na + nb, cols);
  lp_a.topLeftCorner(na, n) = A.transpose();
  lp_a.block(0, n, na, 1).setConstant(-1.0);
  lp_a.block(0, n + 1, na, na) = -Matrix::Identity(na, na);
  if (nb > 0) lp_a.bottomLeftCorner(nb, n) = B.transpose();

  Vector b = Vector::Zero(na + nb);
  Vector c = Vector::Zero(cols);
  c[n] = -1.0;  // maximize t
  Vector lb = Vector::Constant(cols, 0.0), ub = Vector::Constant(cols, kBig);
  lb.head(n).setConstant(-1.0);
  ub.head(n).setConstant(1.0);
  lb[n] = -1.0;
  ub[n] = 1.0;

  const auto res = detail::solve_lp(lp_a, b, c, lb, ub);
  if (res.status != detail::LpResult::Status::Optimal)
    return {Vector::Zero(n), 0.0};
  return {res.x.head(n), res.x[n]};
}

void check_feasible(const MpccProblem& p, const Vector& z, double tol) {
  if (p.n_ineq > 0) {
    const Vector gv = p.g(z);
    for (int i = 0; i < p.n_ineq; ++i)
      if (gv[i] < -tol)
        throw FeasibilityError("cq check: g_" + std::to_string(i) + " < -tol");
  }
  if (p.n_eq > 0) {
    const Vector hv = p.h(z);
    for (int i = 0; i < p.n_eq; ++i)
      if (std::abs(hv[i]) > tol)
        throw FeasibilityError("cq check: h_" + std::to_string(i) + " != 0");
  }
  if (complementarity_violation(p, z) > tol)
    throw FeasibilityError("cq check: complementarity violated");
}

struct GradientFamilies {
  std::vector<Vector> strict;    // sign-constrained family A
  std::vector<Vector> equality;  // free family B
};

GradientFamilies build_families(const MpccProblem& p, const Vector& z,
                                const IndexSets& sets, CqKind kind) {
  GradientFamilies fam;
  Matrix jg, jh, jG, jH;
  if (p.n_ineq > 0) jg = p.jac_g(z);
  if (p.n_eq > 0) jh = p.jac_h(z);
  if (p.n_comp > 0) {
    jG = p.jac_G(z);
    jH = p.jac_H(z);
  }

  for (int i : sets.I_g) fam.strict.push_back(jg.row(i).transpose());
  for (int i = 0; i < p.n_eq; ++i)
    fam.equality.push_back(jh.row(i).transpose());

  const bool biactive_strict = (kind == CqKind::MfcqR);
  for (int i : sets.I_G) fam.equality.push_back(jG.row(i).transpose());
  for (int i : sets.I_H) fam.equality.push_back(jH.row(i).transpose());
  for (int i : sets.I_GH) {
    auto& g_side = biactive_strict ? fam.strict : fam.equality;
    g_side.push_back(jG.row(i).transpose());
    g_side.push_back(jH.row(i).transpose());
  }
  return fam;
}

}  // namespace

CqVerdict positive_linear_independence(const std::vector<Vector>& A,
                                       const std::vector<Vector>& B) {
  CqVerdict v;
  v.which_cq = CqKind::MfcqR;  // callers overwrite; default tag only
  const size_t na = A.size(), nb = B.size();
  if (na == 0 && nb == 0) {
    v.holds = true;
    return v;
  }
  const int dim =
      static_cast<int>(na > 0 ? A.front().size() : B.front().size());
  const Matrix ma = stack_columns(A, dim);
  const Matrix mb = stack_columns(B, dim);
  const double scale = family_scale(ma, mb);

  // A nontrivial kernel of B alone is already a dependence certificate.
  if (nb > 0) {
    Eigen::JacobiSVD<Matrix> svd(mb, Eigen::ComputeThinV);
    const double smax = svd.singularValues()[0];
    const int rank = static_cast<int>(
        (svd.singularValues().array() > 1e-10 * std::max(smax, 1e-300))
            .count());
    if (rank < static_cast<int>(nb)) {
      Vector mu = svd.matrixV().col(static_cast<Eigen::Index>(nb) - 1);
      mu /= mu.lpNorm<Eigen::Infinity>();
      v.holds = false;
      v.lambda = Vector::Zero(static_cast<Eigen::Index>(na));
      v.mu = mu;
      v.certificate_residual = (mb * mu).lpNorm<Eigen::Infinity>();
      v.marginal = v.certificate_residual > kClearTol * scale;
      return v;
    }
  }

  double best_residual = std::numeric_limits<double>::infinity();
  Vector best_lambda;
  if (na > 0) {
    // Project A onto the orthogonal complement of span(B), then minimize the
    // l1 residual of Â lambda over the simplex Σ lambda = 1, lambda >= 0.
    Matrix ahat = ma;
    if (nb > 0) {
      Eigen::HouseholderQR<Matrix> qr(mb);
      Matrix q = qr.householderQ() * Matrix::Identity(dim, static_cast<int>(nb));
      ahat -= q * (q.transpose() * ma);
    }
    const int cols = static_cast<int>(na) + 2 * dim;  // lambda, u, v
    Matrix lp_a = Matrix::Zero(dim + 1, cols);
    lp_a.topLeftCorner(dim, static_cast<int>(na)) = ahat;
    lp_a.block(0, static_cast<int>(na), dim, dim) =
        Matrix::Identity(dim, dim);
    lp_a.block(0, static_cast<int>(na) + dim, dim, dim) =
        -Matrix::Identity(dim, dim);
    lp_a.row(dim).head(static_cast<int>(na)).setOnes();
    Vector b = Vector::Zero(dim + 1);
    b[dim] = 1.0;
    Vector c = Vector::Zero(cols);
    c.tail(2 * dim).setOnes();
    Vector lb = Vector::Zero(cols);
    Vector ub = Vector::Constant(cols, kBig);
    ub.head(static_cast<int>(na)).setConstant(1.0);

    const auto res = detail::solve_lp(lp_a, b, c, lb, ub);
    if (res.status == detail::LpResult::Status::Optimal) {
      best_residual = res.objective;
      best_lambda = res.x.head(static_cast<int>(na));
    }
  }

  if (na > 0 && best_residual <= kDependentTol * scale) {
    Vector lambda = best_lambda.cwiseMax(0.0);
    Vector mu = recover_mu(mb, ma * lambda);
    double norm = lambda.lpNorm<Eigen::Infinity>();
    if (mu.size() > 0) norm = std::max(norm, mu.lpNorm<Eigen::Infinity>());
    lambda /= norm;
    if (mu.size() > 0) mu /= norm;
    Vector sum = ma * lambda;
    if (mu.size() > 0) sum += mb * mu;
    v.holds = false;
    v.lambda = lambda;
    v.mu = mu;
    v.certificate_residual = sum.lpNorm<Eigen::Infinity>();
    v.marginal = v.certificate_residual > kClearTol * scale;
    return v;
  }

  v.holds = true;
  auto [d, margin] = direction_witness(ma, mb);
  v.direction = d;
  v.certificate_residual = margin;
  v.marginal = na > 0 && margin < kDependentTol * scale;
  return v;
}

CqVerdict check_mpcc_licq(const MpccProblem& problem, const Vector& z,
                          double tol) {
  check_feasible(problem, z, tol);
  const IndexSets sets = compute_index_sets(problem, z, tol);
  const GradientFamilies fam =
      build_families(problem, z, sets, CqKind::MfcqT);

  std::vector<Vector> family = fam.equality;
  family.insert(family.end(), fam.strict.begin(), fam.strict.end());

  CqVerdict v;
  v.which_cq = CqKind::Licq;
  if (family.empty()) {
    v.holds = true;
    return v;
  }
  const Matrix m = stack_columns(family, problem.n_vars);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinV);
  const double smax = svd.singularValues()[0];
  const int rank = static_cast<int>(
      (svd.singularValues().array() > 1e-10 * std::max(smax, 1e-300)).count());
  v.holds = rank == static_cast<int>(family.size());
  if (!v.holds) {
    Vector mu = svd.matrixV().col(m.cols() - 1);
    mu /= mu.lpNorm<Eigen::Infinity>();
    v.mu = mu;
    v.certificate_residual = (m * mu).lpNorm<Eigen::Infinity>();
    v.marginal = v.certificate_residual > kClearTol * std::max(smax, 1.0);
  } else {
    const double smin = svd.singularValues().minCoeff();
    v.certificate_residual = smin;
    v.marginal = smin < kDependentTol * std::max(smax, 1.0);
  }
  return v;
}

namespace {

CqVerdict check_mfcq(const MpccProblem& problem, const Vector& z, double tol,
                     CqKind kind) {
  check_feasible(problem, z, tol);
  const IndexSets sets = compute_index_sets(problem, z, tol);
  const GradientFamilies fam = build_families(problem, z, sets, kind);
  CqVerdict v = positive_linear_independence(fam.strict, fam.equality);
  v.which_cq = kind;
  return v;
}

}  // namespace

CqVerdict check_mpcc_mfcq_t(const MpccProblem& problem, const Vector& z,
                            double tol) {
  return check_mfcq(problem, z, tol, CqKind::MfcqT);
}

CqVerdict check_mpcc_mfcq_r(const MpccProblem& problem, const Vector& z,
                            double tol) {
  return check_mfcq(problem, z, tol, CqKind::MfcqR);
}

}  // namespace mpcc
