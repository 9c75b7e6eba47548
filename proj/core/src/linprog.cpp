#include "mpcc/detail/linprog.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "mpcc/errors.hpp"

namespace mpcc::detail {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;

enum class At { Lower, Upper, Basic };

// Two-phase bounded-variable simplex with Bland pricing and a Harris-style
// two-pass ratio test. The basis inverse is product-form updated and
// periodically refactorized, at which point the basic values are recomputed
// from scratch; degenerate instances can still drift, so the driver verifies
// the final point and reruns in refactor-every-pivot mode when needed.
struct Simplex {
  const Matrix& a;
  const Vector& b;
  int m, n, total;
  Vector lo, hi, x, cost;
  std::vector<At> where;
  std::vector<int> basis;
  Vector art_sign;
  Matrix binv;
  int refactor_every;
  int pivots = 0;

  Simplex(const Matrix& a_in, const Vector& b_in, const Vector& c,
          const Vector& lb, const Vector& ub, int refactor)
      : a(a_in),
        b(b_in),
        m(static_cast<int>(a_in.rows())),
        n(static_cast<int>(a_in.cols())),
        total(n + m),
        refactor_every(refactor) {
    lo.resize(total);
    hi.resize(total);
    x.resize(total);
    lo.head(n) = lb;
    hi.head(n) = ub;
    lo.tail(m).setZero();
    hi.tail(m).setConstant(std::numeric_limits<double>::infinity());
    cost = Vector::Zero(total);
    cost.tail(m).setOnes();  // phase-1 objective

    where.assign(static_cast<size_t>(total), At::Lower);
    for (int j = 0; j < n; ++j) {
      const bool lo_fin = std::isfinite(lo[j]);
      const bool hi_fin = std::isfinite(hi[j]);
      if (lo_fin && (!hi_fin || std::abs(lo[j]) <= std::abs(hi[j]))) {
        x[j] = lo[j];
      } else if (hi_fin) {
        where[static_cast<size_t>(j)] = At::Upper;
        x[j] = hi[j];
      } else {
        x[j] = 0.0;
      }
    }

    const Vector resid = b - a * x.head(n);
    art_sign.resize(m);
    basis.resize(static_cast<size_t>(m));
    binv = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      art_sign[i] = resid[i] < 0.0 ? -1.0 : 1.0;
      basis[static_cast<size_t>(i)] = n + i;
      where[static_cast<size_t>(n + i)] = At::Basic;
      x[n + i] = std::abs(resid[i]);
      binv(i, i) = art_sign[i];
    }
    (void)c;  // phase-2 cost installed later
  }

  Vector column(int j) const {
    if (j < n) return a.col(j);
    Vector e = Vector::Zero(m);
    e[j - n] = art_sign[j - n];
    return e;
  }

  void refactor_and_recompute() {
    Matrix basis_mat(m, m);
    for (int i = 0; i < m; ++i) basis_mat.col(i) = column(basis[static_cast<size_t>(i)]);
    binv = basis_mat.partialPivLu().inverse();
    Vector r = b;
    for (int j = 0; j < total; ++j)
      if (where[static_cast<size_t>(j)] != At::Basic && x[j] != 0.0)
        r -= column(j) * x[j];
    const Vector xb = binv * r;
    for (int i = 0; i < m; ++i) x[basis[static_cast<size_t>(i)]] = xb[i];
  }

  double primal_infeasibility() const {
    Vector ax = Vector::Zero(m);
    for (int j = 0; j < total; ++j)
      if (x[j] != 0.0) ax += column(j) * x[j];
    double err = (ax - b).lpNorm<Eigen::Infinity>();
    for (int j = 0; j < total; ++j) {
      if (std::isfinite(lo[j])) err = std::max(err, lo[j] - x[j]);
      if (std::isfinite(hi[j])) err = std::max(err, x[j] - hi[j]);
    }
    return err;
  }

  // One simplex phase; returns true on optimality, false on iteration or
  // unboundedness trouble (status set by the caller from `failure`).
  enum class PhaseEnd { Optimal, Unbounded, IterLimit };

  PhaseEnd run(bool phase_one, int max_pivots) {
    while (true) {
      if (pivots >= max_pivots) return PhaseEnd::IterLimit;

      Vector cb(m);
      for (int i = 0; i < m; ++i) cb[i] = cost[basis[static_cast<size_t>(i)]];
      const Vector y = binv.transpose() * cb;

      int enter = -1;
      double dir = 0.0;
      for (int j = 0; j < total && enter < 0; ++j) {
        if (where[static_cast<size_t>(j)] == At::Basic) continue;
        if (!phase_one && j >= n) continue;  // artificials retired
        const double d = cost[j] - y.dot(column(j));
        if (where[static_cast<size_t>(j)] == At::Lower &&
            d < -kReducedCostTol) {
          enter = j;
          dir = 1.0;
        } else if (where[static_cast<size_t>(j)] == At::Upper &&
                   d > kReducedCostTol) {
          enter = j;
          dir = -1.0;
        }
      }
      if (enter < 0) return PhaseEnd::Optimal;

      const Vector w = binv * column(enter);
      const double piv_tol = 1e-9 * (1.0 + w.lpNorm<Eigen::Infinity>());

      // Harris pass 1: tightest ratio.
      double t_max = hi[enter] - lo[enter];  // bound-flip span
      for (int i = 0; i < m; ++i) {
        const double step = dir * w[i];
        const int bi = basis[static_cast<size_t>(i)];
        if (step > piv_tol) {
          t_max = std::min(t_max, (x[bi] - lo[bi]) / step);
        } else if (step < -piv_tol && std::isfinite(hi[bi])) {
          t_max = std::min(t_max, (hi[bi] - x[bi]) / (-step));
        }
      }
      if (!std::isfinite(t_max)) return PhaseEnd::Unbounded;
      t_max = std::max(t_max, 0.0);

      // Harris pass 2: among blocking rows near the tightest ratio, take
      // the one with the largest pivot magnitude.
      int leave = -1;
      double leave_bound = 0.0, best_piv = 0.0;
      const double slack = t_max + 1e-9 * (1.0 + t_max);
      for (int i = 0; i < m; ++i) {
        const double step = dir * w[i];
        const int bi = basis[static_cast<size_t>(i)];
        double room, bound;
        if (step > piv_tol) {
          room = (x[bi] - lo[bi]) / step;
          bound = lo[bi];
        } else if (step < -piv_tol && std::isfinite(hi[bi])) {
          room = (hi[bi] - x[bi]) / (-step);
          bound = hi[bi];
        } else {
          continue;
        }
        if (room <= slack && std::abs(w[i]) > best_piv) {
          best_piv = std::abs(w[i]);
          leave = i;
          leave_bound = bound;
        }
      }
      for (int i = 0; i < m; ++i)
        x[basis[static_cast<size_t>(i)]] -= t_max * dir * w[i];
      x[enter] += t_max * dir;

      if (leave < 0) {
        // No blocking row: the entering variable flips to its other bound.
        where[static_cast<size_t>(enter)] =
            dir > 0.0 ? At::Upper : At::Lower;
        x[enter] = dir > 0.0 ? hi[enter] : lo[enter];
        continue;
      }

      const int out = basis[static_cast<size_t>(leave)];
      x[out] = leave_bound;
      where[static_cast<size_t>(out)] =
          leave_bound == lo[out] ? At::Lower : At::Upper;
      basis[static_cast<size_t>(leave)] = enter;
      where[static_cast<size_t>(enter)] = At::Basic;

      ++pivots;
      if (pivots % refactor_every == 0 || best_piv < 1e-6) {
        refactor_and_recompute();
      } else {
        const double piv = w[leave];
        const Vector row = binv.row(leave) / piv;
        for (int i = 0; i < m; ++i) {
          if (i == leave) continue;
          binv.row(i) -= w[i] * row.transpose();
        }
        binv.row(leave) = row.transpose();
      }
    }
  }
};

LpResult attempt(const Matrix& a, const Vector& b, const Vector& c,
                 const Vector& lb, const Vector& ub, int max_pivots,
                 int refactor_every) {
  Simplex simplex(a, b, c, lb, ub, refactor_every);
  const double scale = 1.0 + b.lpNorm<Eigen::Infinity>();

  auto end = simplex.run(true, max_pivots);
  simplex.refactor_and_recompute();
  if (end == Simplex::PhaseEnd::IterLimit)
    return {LpResult::Status::IterLimit, simplex.x.head(simplex.n), 0.0};
  double art_total = 0.0;
  for (int i = 0; i < simplex.m; ++i)
    art_total += std::abs(simplex.x[simplex.n + i]);
  if (end == Simplex::PhaseEnd::Optimal && art_total > kFeasTol * scale)
    return {LpResult::Status::Infeasible, simplex.x.head(simplex.n),
            art_total};
  if (end == Simplex::PhaseEnd::Unbounded)
    return {LpResult::Status::Infeasible, simplex.x.head(simplex.n),
            art_total};

  for (int i = simplex.n; i < simplex.total; ++i) simplex.hi[i] = 0.0;
  simplex.cost.setZero();
  simplex.cost.head(simplex.n) = c;

  end = simplex.run(false, max_pivots);
  simplex.refactor_and_recompute();
  const Vector xs = simplex.x.head(simplex.n);
  if (end == Simplex::PhaseEnd::Unbounded)
    return {LpResult::Status::Unbounded, xs, c.dot(xs)};
  if (end == Simplex::PhaseEnd::IterLimit)
    return {LpResult::Status::IterLimit, xs, c.dot(xs)};

  if (simplex.primal_infeasibility() > kFeasTol * scale)
    return {LpResult::Status::IterLimit, xs, c.dot(xs)};  // drift: retry
  return {LpResult::Status::Optimal, xs, c.dot(xs)};
}

}  // namespace

LpResult solve_lp(const Matrix& a, const Vector& b, const Vector& c,
                  const Vector& lb, const Vector& ub, int max_pivots) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  if (b.size() != m || c.size() != n || lb.size() != n || ub.size() != n)
    throw ContractError("solve_lp: dimension mismatch");
  for (int j = 0; j < n; ++j)
    if (lb[j] > ub[j]) throw ContractError("solve_lp: empty bound interval");

  // Fast mode first; fall back to refactorizing every pivot when the
  // verified result is untrustworthy.
  LpResult res = attempt(a, b, c, lb, ub, max_pivots, 25);
  if (res.status == LpResult::Status::Optimal ||
      res.status == LpResult::Status::Infeasible ||
      res.status == LpResult::Status::Unbounded)
    return res;
  return attempt(a, b, c, lb, ub, max_pivots, 1);
}

}  // namespace mpcc::detail
