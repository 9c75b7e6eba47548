#include "mpcc/hypertune.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "mpcc/errors.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

namespace {

Dataset subset(const Dataset& data, const std::vector<int>& idx,
               const std::string& tag) {
  Dataset out;
  out.name = data.name.empty() ? tag : data.name + "/" + tag;
  out.standardized = data.standardized;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), data.d());
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (size_t i = 0; i < idx.size(); ++i) {
    out.X.row(static_cast<Eigen::Index>(i)) = data.X.row(idx[i]);
    out.y[static_cast<Eigen::Index>(i)] = data.y[idx[i]];
  }
  return out;
}

bool both_classes(const Vector& y) {
  bool pos = false, neg = false;
  for (int i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg) = true;
  return pos && neg;
}

Matrix squared_distances(const Matrix& A, const Matrix& B) {
  Matrix d(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      d(i, j) = (A.row(i) - B.row(j)).squaredNorm();
  return d;
}

// exp(-gamma d), clamped on both sides: stray negative gamma iterates must
// not overflow, and far-out exponents flush to exact zero instead of
// producing subnormals (which would poison the arithmetic speed).
Matrix rbf_values(const Matrix& sqdist, double gamma) {
  Eigen::ArrayXXd e = (-gamma * sqdist.array()).min(700.0);
  return (e < -700.0).select(0.0, e.exp()).matrix();
}

}  // namespace

// ---------------------------------------------------------------------------
// FoldPlan

std::vector<int> FoldPlan::training_indices(int k) const {
  std::vector<char> excluded(static_cast<size_t>(data.n()), 0);
  for (int i : test) excluded[static_cast<size_t>(i)] = 1;
  for (int i : validation[static_cast<size_t>(k)])
    excluded[static_cast<size_t>(i)] = 1;
  std::vector<int> out;
  for (int i = 0; i < data.n(); ++i)
    if (!excluded[static_cast<size_t>(i)]) out.push_back(i);
  return out;
}

Dataset FoldPlan::training_set(int k) const {
  return subset(data, training_indices(k), "train" + std::to_string(k));
}

Dataset FoldPlan::validation_set(int k) const {
  return subset(data, validation[static_cast<size_t>(k)],
                "val" + std::to_string(k));
}

Dataset FoldPlan::test_set() const { return subset(data, test, "test"); }

Dataset FoldPlan::modeled_set() const {
  std::vector<char> is_test(static_cast<size_t>(data.n()), 0);
  for (int i : test) is_test[static_cast<size_t>(i)] = 1;
  std::vector<int> idx;
  for (int i = 0; i < data.n(); ++i)
    if (!is_test[static_cast<size_t>(i)]) idx.push_back(i);
  return subset(data, idx, "modeled");
}

int FoldPlan::modeled_count() const {
  return data.n() - static_cast<int>(test.size());
}

FoldPlan make_folds(const Dataset& dataset, int K, double test_fraction,
                    std::uint64_t seed) {
  if (K < 2) throw ContractError("make_folds: K must be >= 2");
  if (test_fraction < 0.0 || test_fraction > 0.5)
    throw ContractError("make_folds: test_fraction must be in [0, 0.5]");
  const int n = dataset.n();

  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)],
              order[rng.next_index(static_cast<std::uint64_t>(i) + 1)]);

  FoldPlan plan;
  plan.data = dataset;
  plan.K = K;
  plan.seed = seed;

  const int n_test = static_cast<int>(std::llround(n * test_fraction));
  plan.test.assign(order.begin(), order.begin() + n_test);
  std::vector<int> rest(order.begin() + n_test, order.end());
  if (static_cast<int>(rest.size()) < 2 * K)
    throw ContractError("make_folds: too few examples for the fold count");

  auto assign_round_robin = [&](const std::vector<int>& pool) {
    plan.validation.assign(static_cast<size_t>(K), {});
    for (size_t i = 0; i < pool.size(); ++i)
      plan.validation[i % static_cast<size_t>(K)].push_back(pool[i]);
  };

  auto training_folds_ok = [&]() {
    for (int k = 0; k < K; ++k) {
      const auto idx = plan.training_indices(k);
      Vector y(static_cast<Eigen::Index>(idx.size()));
      for (size_t i = 0; i < idx.size(); ++i)
        y[static_cast<Eigen::Index>(i)] = dataset.y[idx[i]];
      if (!both_classes(y)) return false;
    }
    return true;
  };

  assign_round_robin(rest);
  if (!training_folds_ok()) {
    // Stratified retry: round-robin each class separately.
    std::vector<int> pos, neg;
    for (int i : rest) (dataset.y[i] > 0 ? pos : neg).push_back(i);
    std::vector<int> interleaved;
    interleaved.reserve(rest.size());
    interleaved.insert(interleaved.end(), pos.begin(), pos.end());
    interleaved.insert(interleaved.end(), neg.begin(), neg.end());
    assign_round_robin(interleaved);
    if (!training_folds_ok())
      throw ContractError("make_folds: a training fold is missing a class");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// ModelM

namespace {

struct FoldBlock {
  Matrix Xtr, Xval;
  Vector ytr, yval;
  Matrix D, Dbar;  // squared distances: train-train and val-train
  int n_tr = 0, n_val = 0;

  // gamma-keyed cache
  Matrix K, Kbar;  // unsigned kernel values
  Matrix Q, Qbar;  // label-signed
};

}  // namespace

struct ModelMImpl {
  FoldPlan folds;
  double tau_ind = 1e-6;
  int K = 0;
  int n_tr_total = 0, n_val_total = 0;
  int n_vars = 0;
  std::vector<FoldBlock> block;
  std::vector<int> tr_offset, val_offset;
  MpccProblem problem;

  double cached_gamma = std::numeric_limits<double>::quiet_NaN();

  // variable offsets
  int off_zeta() const { return 2; }
  int off_alpha() const { return 2 + n_val_total; }
  int off_v() const { return off_alpha() + n_tr_total; }
  int off_w() const { return off_v() + n_tr_total; }
  int off_u() const { return off_w() + n_tr_total; }

  void refresh(double gamma) {
    if (std::isfinite(cached_gamma) &&
        std::abs(gamma - cached_gamma) <=
            1e-12 * std::max(1.0, std::abs(cached_gamma)))
      return;
    for (auto& b : block) {
      b.K = rbf_values(b.D, gamma);
      b.Kbar = rbf_values(b.Dbar, gamma);
      b.Q = (b.ytr * b.ytr.transpose()).cwiseProduct(b.K);
      b.Qbar = (b.yval * b.ytr.transpose()).cwiseProduct(b.Kbar);
    }
    cached_gamma = gamma;
  }

  Vector alpha_of(const Vector& z, int k) const {
    return z.segment(off_alpha() + tr_offset[static_cast<size_t>(k)],
                     block[static_cast<size_t>(k)].n_tr);
  }

  // Smooth-branch bias value; NaN on a vanishing weight sum so rejected
  // trial points propagate through the merit function instead of throwing.
  double bias_value(const Vector& alpha, double C, int k) const {
    const auto& b = block[static_cast<size_t>(k)];
    double s = 0.0, f = 0.0;
    const Vector q = b.Q * alpha;
    for (int i = 0; i < b.n_tr; ++i) {
      const double t = 2.0 * alpha[i] / C - 1.0;
      const double w = 1.0 - t * t + tau_ind;
      s += w;
      f += w * (b.ytr[i] - b.ytr[i] * q[i]);
    }
    if (std::abs(s) < 1e-300) return std::numeric_limits<double>::quiet_NaN();
    return f / s;
  }

  BiasDerivatives bias_bundle(const Vector& z, int k) {
    const auto& b = block[static_cast<size_t>(k)];
    refresh(z[1]);
    return bias_with_derivatives(alpha_of(z, k), z[0], z[1], b.K, b.D, b.ytr,
                                 tau_ind);
  }
};

namespace {

// Note bias_value computes residual via Q: residual_i = y_i - Σ_j α_j y_i y_j
// K_ij / y_i; since y_i² = 1, y_i - y_i (Qα)_i equals y_i(1 - (Qα)_i) and
// also y_i - Σ_j α_j y_j K_ij.

void wire_problem(const std::shared_ptr<ModelMImpl>& impl) {
  const int K = impl->K;
  const int ntr = impl->n_tr_total;
  const int nval = impl->n_val_total;
  const int n = impl->n_vars;

  MpccProblem& p = impl->problem;
  p.name = "model-m/" + impl->folds.data.name;
  p.n_vars = n;
  p.n_ineq = 2 + 2 * nval;
  p.n_eq = ntr + K;
  p.n_comp = 2 * ntr;

  p.f = [impl](const Vector& z) {
    double val = 0.0;
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      val += z.segment(impl->off_zeta() +
                           impl->val_offset[static_cast<size_t>(k)],
                       b.n_val)
                 .sum() /
             b.n_val;
    }
    return val;
  };
  p.grad_f = [impl, n](const Vector&) {
    Vector g = Vector::Zero(n);
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      g.segment(impl->off_zeta() + impl->val_offset[static_cast<size_t>(k)],
                b.n_val)
          .setConstant(1.0 / b.n_val);
    }
    return g;
  };

  p.g = [impl, nval](const Vector& z) {
    impl->refresh(z[1]);
    Vector out(2 + 2 * nval);
    out[0] = z[0];
    out[1] = z[1];
    out.segment(2, nval) = z.segment(impl->off_zeta(), nval);
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      const Vector alpha = impl->alpha_of(z, k);
      const double bias = impl->bias_value(alpha, z[0], k);
      const Vector qa = b.Qbar * alpha;
      const int base = 2 + nval + impl->val_offset[static_cast<size_t>(k)];
      for (int i = 0; i < b.n_val; ++i)
        out[base + i] = z[impl->off_zeta() +
                          impl->val_offset[static_cast<size_t>(k)] + i] -
                        1.0 + qa[i] + b.yval[i] * bias;
    }
    return out;
  };

  p.jac_g = [impl, nval, n](const Vector& z) {
    impl->refresh(z[1]);
    Matrix j = Matrix::Zero(2 + 2 * nval, n);
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    for (int i = 0; i < nval; ++i) j(2 + i, impl->off_zeta() + i) = 1.0;
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      const BiasDerivatives bd = impl->bias_bundle(z, k);
      const Vector alpha = impl->alpha_of(z, k);
      const Vector dbar_qa = b.Dbar.cwiseProduct(b.Qbar) * alpha;
      const int row0 = 2 + nval + impl->val_offset[static_cast<size_t>(k)];
      const int acol = impl->off_alpha() + impl->tr_offset[static_cast<size_t>(k)];
      for (int i = 0; i < b.n_val; ++i) {
        const int row = row0 + i;
        j(row, impl->off_zeta() + impl->val_offset[static_cast<size_t>(k)] + i) =
            1.0;
        j(row, 0) = b.yval[i] * bd.d_C;
        j(row, 1) = -dbar_qa[i] + b.yval[i] * bd.d_gamma;
        j.block(row, acol, 1, b.n_tr) =
            b.Qbar.row(i) + b.yval[i] * bd.d_alpha.transpose();
      }
    }
    return j;
  };

  p.h = [impl, ntr, K](const Vector& z) {
    impl->refresh(z[1]);
    Vector out(ntr + K);
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      const Vector alpha = impl->alpha_of(z, k);
      const int t0 = impl->tr_offset[static_cast<size_t>(k)];
      const Vector theta =
          b.Q * alpha - Vector::Ones(b.n_tr) -
          z.segment(impl->off_v() + t0, b.n_tr) +
          z.segment(impl->off_w() + t0, b.n_tr) +
          z[impl->off_u() + k] * b.ytr;
      out.segment(t0, b.n_tr) = theta;
      out[ntr + k] = b.ytr.dot(alpha);
    }
    return out;
  };

  p.jac_h = [impl, ntr, K, n](const Vector& z) {
    impl->refresh(z[1]);
    Matrix j = Matrix::Zero(ntr + K, n);
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      const Vector alpha = impl->alpha_of(z, k);
      const int t0 = impl->tr_offset[static_cast<size_t>(k)];
      const int acol = impl->off_alpha() + t0;
      const Vector dq_a = b.D.cwiseProduct(b.Q) * alpha;
      j.block(t0, acol, b.n_tr, b.n_tr) = b.Q;
      j.block(t0, 1, b.n_tr, 1) = -dq_a;
      for (int i = 0; i < b.n_tr; ++i) {
        j(t0 + i, impl->off_v() + t0 + i) = -1.0;
        j(t0 + i, impl->off_w() + t0 + i) = 1.0;
        j(t0 + i, impl->off_u() + k) = b.ytr[i];
      }
      j.block(ntr + k, acol, 1, b.n_tr) = b.ytr.transpose();
    }
    return j;
  };

  p.G = [impl, ntr](const Vector& z) {
    Vector out(2 * ntr);
    out.head(ntr) = z.segment(impl->off_alpha(), ntr);
    out.tail(ntr) =
        Vector::Constant(ntr, z[0]) - z.segment(impl->off_alpha(), ntr);
    return out;
  };
  p.jac_G = [impl, ntr, n](const Vector&) {
    Matrix j = Matrix::Zero(2 * ntr, n);
    for (int i = 0; i < ntr; ++i) {
      j(i, impl->off_alpha() + i) = 1.0;
      j(ntr + i, 0) = 1.0;
      j(ntr + i, impl->off_alpha() + i) = -1.0;
    }
    return j;
  };
  p.H = [impl, ntr](const Vector& z) {
    Vector out(2 * ntr);
    out.head(ntr) = z.segment(impl->off_v(), ntr);
    out.tail(ntr) = z.segment(impl->off_w(), ntr);
    return out;
  };
  p.jac_H = [impl, ntr, n](const Vector&) {
    Matrix j = Matrix::Zero(2 * ntr, n);
    for (int i = 0; i < ntr; ++i) {
      j(i, impl->off_v() + i) = 1.0;
      j(ntr + i, impl->off_w() + i) = 1.0;
    }
    return j;
  };

  // Weighted Lagrangian Hessian. The objective and all rows except Z and
  // theta are linear, so only those contribute; the nonzero blocks live in
  // the (C, gamma, alpha) coordinates.
  p.lagrangian_hessian = [impl, nval, n](const Vector& z, double /*sigma*/,
                                         const Vector& nu_g,
                                         const Vector& nu_h, const Vector&,
                                         const Vector&) {
    impl->refresh(z[1]);
    Matrix w = Matrix::Zero(n, n);
    for (int k = 0; k < impl->K; ++k) {
      const auto& b = impl->block[static_cast<size_t>(k)];
      const int t0 = impl->tr_offset[static_cast<size_t>(k)];
      const int v0 = impl->val_offset[static_cast<size_t>(k)];
      const int acol = impl->off_alpha() + t0;
      const Vector alpha = impl->alpha_of(z, k);
      const Vector nu_z = nu_g.segment(2 + nval + v0, b.n_val);
      const Vector nu_theta = nu_h.segment(t0, b.n_tr);
      const BiasDerivatives bd = impl->bias_bundle(z, k);
      const double wk = nu_z.dot(b.yval);

      const Matrix dbar_q = b.Dbar.cwiseProduct(b.Qbar);
      const Matrix d_q = b.D.cwiseProduct(b.Q);

      w(0, 0) -= wk * bd.d2_C;
      w(1, 1) -= nu_z.dot(b.Dbar.cwiseProduct(dbar_q) * alpha) +
                 wk * bd.d2_gamma + nu_theta.dot(b.D.cwiseProduct(d_q) * alpha);
      const double cg = -wk * bd.d2_C_gamma;
      w(0, 1) += cg;
      w(1, 0) += cg;

      w.block(acol, acol, b.n_tr, b.n_tr) -= wk * bd.d2_alpha;

      const Vector a_c = -wk * bd.d2_alpha_C;
      const Vector a_g = dbar_q.transpose() * nu_z -
                         wk * bd.d2_alpha_gamma + d_q.transpose() * nu_theta;
      w.block(acol, 0, b.n_tr, 1) += a_c;
      w.block(0, acol, 1, b.n_tr) += a_c.transpose();
      w.block(acol, 1, b.n_tr, 1) += a_g;
      w.block(1, acol, 1, b.n_tr) += a_g.transpose();
    }
    return w;
  };
}

}  // namespace

ModelM::ModelM(FoldPlan folds, double tau_ind)
    : impl_(std::make_shared<ModelMImpl>()) {
  impl_->folds = std::move(folds);
  impl_->tau_ind = tau_ind;
  const FoldPlan& fp = impl_->folds;
  impl_->K = fp.K;

  impl_->block.resize(static_cast<size_t>(fp.K));
  impl_->tr_offset.resize(static_cast<size_t>(fp.K));
  impl_->val_offset.resize(static_cast<size_t>(fp.K));
  for (int k = 0; k < fp.K; ++k) {
    auto& b = impl_->block[static_cast<size_t>(k)];
    const Dataset tr = fp.training_set(k);
    const Dataset val = fp.validation_set(k);
    b.Xtr = tr.X;
    b.ytr = tr.y;
    b.Xval = val.X;
    b.yval = val.y;
    b.n_tr = tr.n();
    b.n_val = val.n();
    b.D = squared_distances(b.Xtr, b.Xtr);
    b.Dbar = squared_distances(b.Xval, b.Xtr);
    impl_->tr_offset[static_cast<size_t>(k)] = impl_->n_tr_total;
    impl_->val_offset[static_cast<size_t>(k)] = impl_->n_val_total;
    impl_->n_tr_total += b.n_tr;
    impl_->n_val_total += b.n_val;
  }

  const int n_modeled = fp.modeled_count();
  impl_->n_vars = 2 + impl_->n_val_total + 3 * impl_->n_tr_total + fp.K;

  // Stacking identities: every modeled example validates once and trains
  // K-1 times.
  if (impl_->n_val_total != n_modeled ||
      impl_->n_tr_total != (fp.K - 1) * n_modeled ||
      impl_->n_vars != 3 * (fp.K - 1) * n_modeled + n_modeled + fp.K + 2)
    throw ContractError("ModelM: constraint stacking dimensions broken");

  wire_problem(impl_);
}

const MpccProblem& ModelM::problem() const { return impl_->problem; }
const FoldPlan& ModelM::folds() const { return impl_->folds; }
int ModelM::n_vars() const { return impl_->n_vars; }
int ModelM::total_training() const { return impl_->n_tr_total; }
int ModelM::total_validation() const { return impl_->n_val_total; }

int ModelM::idx_zeta(int fold, int i) const {
  return impl_->off_zeta() + impl_->val_offset[static_cast<size_t>(fold)] + i;
}
int ModelM::idx_alpha(int fold, int i) const {
  return impl_->off_alpha() + impl_->tr_offset[static_cast<size_t>(fold)] + i;
}
int ModelM::idx_v(int fold, int i) const {
  return impl_->off_v() + impl_->tr_offset[static_cast<size_t>(fold)] + i;
}
int ModelM::idx_w(int fold, int i) const {
  return impl_->off_w() + impl_->tr_offset[static_cast<size_t>(fold)] + i;
}
int ModelM::idx_u(int fold) const { return impl_->off_u() + fold; }

double ModelM::hinge_objective(const Vector& z) const {
  impl_->refresh(z[1]);
  double total = 0.0;
  for (int k = 0; k < impl_->K; ++k) {
    const auto& b = impl_->block[static_cast<size_t>(k)];
    const Vector alpha = impl_->alpha_of(z, k);
    const double bias = impl_->bias_value(alpha, z[0], k);
    const Vector qa = b.Qbar * alpha;
    double fold_loss = 0.0;
    for (int i = 0; i < b.n_val; ++i)
      fold_loss += std::max(0.0, 1.0 - qa[i] - b.yval[i] * bias);
    total += fold_loss / b.n_val;
  }
  return total;
}

double ModelM::validation_accuracy(const Vector& z) const {
  impl_->refresh(z[1]);
  double acc = 0.0;
  for (int k = 0; k < impl_->K; ++k) {
    const auto& b = impl_->block[static_cast<size_t>(k)];
    const Vector alpha = impl_->alpha_of(z, k);
    const double bias = impl_->bias_value(alpha, z[0], k);
    const Vector qa = b.Qbar * alpha;
    int correct = 0;
    for (int i = 0; i < b.n_val; ++i) {
      // score of the fold-k classifier on validation example i
      const double score = b.yval[i] * qa[i] + bias;
      const int label = score < 0.0 ? -1 : 1;
      if (label == static_cast<int>(b.yval[i])) ++correct;
    }
    acc += static_cast<double>(correct) / b.n_val;
  }
  return acc / impl_->K;
}

double ModelM::mpcc_feasibility(const Vector& z) const {
  const MpccProblem& p = impl_->problem;
  double worst = 0.0;
  const Vector gv = p.g(z);
  for (int i = 0; i < gv.size(); ++i) worst = std::max(worst, -gv[i]);
  const Vector hv = p.h(z);
  worst = std::max(worst, hv.lpNorm<Eigen::Infinity>());
  const Vector Gv = p.G(z);
  const Vector Hv = p.H(z);
  for (int i = 0; i < Gv.size(); ++i) {
    worst = std::max(worst, -Gv[i]);
    worst = std::max(worst, -Hv[i]);
    worst = std::max(worst, std::min(std::abs(Gv[i]), std::abs(Hv[i])));
  }
  return worst;
}

ModelM assemble_model(const FoldPlan& folds, double tau_ind) {
  return ModelM(folds, tau_ind);
}

// ---------------------------------------------------------------------------
// Starting points

InitStrategy parse_init_strategy(const std::string& name) {
  if (name == "zero") return InitStrategy::LLZero;
  if (name == "centre" || name == "center") return InitStrategy::LLCentre;
  if (name == "feasible") return InitStrategy::LLFeasible;
  throw ContractError("unknown init strategy: " + name);
}

Vector init_point(const ModelM& model, InitStrategy strategy, double C0,
                  double gamma0) {
  if (C0 <= 0.0 || gamma0 <= 0.0)
    throw ContractError("init_point: C0 and gamma0 must be positive");
  const FoldPlan& folds = model.folds();
  Vector z = Vector::Zero(model.n_vars());
  z[model.idx_C()] = C0;
  z[model.idx_gamma()] = gamma0;

  for (int k = 0; k < folds.K; ++k) {
    const Dataset tr = folds.training_set(k);
    const Dataset val = folds.validation_set(k);
    const int nk = tr.n();
    Vector alpha = Vector::Zero(nk), v = Vector::Zero(nk),
           w = Vector::Zero(nk);
    double u = 0.0;

    switch (strategy) {
      case InitStrategy::LLZero:
        break;
      case InitStrategy::LLCentre: {
        const double mean_y = tr.y.sum() / nk;
        for (int i = 0; i < nk; ++i)
          alpha[i] = 0.5 * C0 * (1.0 + tr.y[i] * mean_y);
        u = 1.0;
        const Matrix q = kernel_matrix(tr.X, tr.y, gamma0);
        const Vector m = q * alpha - Vector::Ones(nk) + u * tr.y;
        v = m.cwiseMax(0.0);
        w = (-m).cwiseMax(0.0);
        break;
      }
      case InitStrategy::LLFeasible: {
        const TrainedSvm fit = train_dual_svm(tr, C0, gamma0, 1e-8);
        alpha = fit.model.alpha;
        u = fit.u;
        // Project the eps-KKT point onto the exact constraint set: snap
        // near-bound entries, re-solve the margin system on the interior
        // block so stationarity and the label equality hold to machine
        // precision, then rebuild v, w as sign parts. Complementarity is
        // exact afterwards.
        const double snap = 1e-6 * std::max(1.0, C0);
        std::vector<int> interior;
        for (int i = 0; i < nk; ++i) {
          if (alpha[i] <= snap)
            alpha[i] = 0.0;
          else if (alpha[i] >= C0 - snap)
            alpha[i] = C0;
          else
            interior.push_back(i);
        }
        const Matrix q = kernel_matrix(tr.X, tr.y, gamma0);
        if (!interior.empty()) {
          const int ni = static_cast<int>(interior.size());
          Matrix sys = Matrix::Zero(ni + 1, ni + 1);
          Vector rhs(ni + 1);
          for (int a = 0; a < ni; ++a) {
            double fixed = 0.0;
            for (int j = 0; j < nk; ++j) {
              const bool is_interior =
                  std::find(interior.begin(), interior.end(), j) !=
                  interior.end();
              if (!is_interior) fixed += q(interior[a], j) * alpha[j];
            }
            rhs[a] = 1.0 - fixed;
            for (int c = 0; c < ni; ++c)
              sys(a, c) = q(interior[a], interior[c]);
            sys(a, ni) = tr.y[interior[a]];
          }
          double fixed_phi = 0.0;
          for (int j = 0; j < nk; ++j) fixed_phi += tr.y[j] * alpha[j];
          for (int j : interior) fixed_phi -= tr.y[j] * alpha[j];
          for (int c = 0; c < ni; ++c) sys(ni, c) = tr.y[interior[c]];
          rhs[ni] = -fixed_phi;
          const Vector sol = sys.partialPivLu().solve(rhs);
          bool in_box = sol.allFinite();
          for (int a = 0; a < ni && in_box; ++a)
            in_box = sol[a] > 0.0 && sol[a] < C0;
          if (in_box) {
            for (int a = 0; a < ni; ++a) alpha[interior[a]] = sol[a];
            u = sol[ni];
          } else {
            interior.clear();  // keep the eps-accurate harvest instead
          }
        }
        const Vector m = q * alpha - Vector::Ones(nk) + u * tr.y;
        v = m.cwiseMax(0.0);
        w = (-m).cwiseMax(0.0);
        for (int i : interior) {
          v[i] = 0.0;  // stationarity already holds exactly there
          w[i] = 0.0;
        }
        break;
      }
    }

    for (int i = 0; i < nk; ++i) {
      z[model.idx_alpha(k, i)] = alpha[i];
      z[model.idx_v(k, i)] = v[i];
      z[model.idx_w(k, i)] = w[i];
    }
    z[model.idx_u(k)] = u;

    // zeta = positive part of the hinge residual at the initial classifier.
    const double bias = svm_bias(alpha, C0, gamma0, tr);
    for (int i = 0; i < val.n(); ++i) {
      double margin = 0.0;
      for (int j = 0; j < nk; ++j)
        margin += alpha[j] * val.y[i] * tr.y[j] *
                  std::exp(-gamma0 *
                           (val.X.row(i) - tr.X.row(j)).squaredNorm());
      z[model.idx_zeta(k, i)] =
          std::max(0.0, 1.0 - margin - val.y[i] * bias);
    }
  }
  return z;
}

std::vector<std::pair<double, double>> multistart_grid(const LogGrid& ranges) {
  if (ranges.c_exp_lo > ranges.c_exp_hi ||
      ranges.gamma_exp_lo > ranges.gamma_exp_hi)
    throw ContractError("multistart_grid: empty range");
  std::vector<std::pair<double, double>> grid;
  for (int i = ranges.c_exp_lo; i <= ranges.c_exp_hi; ++i)
    for (int j = ranges.gamma_exp_lo; j <= ranges.gamma_exp_hi; ++j)
      grid.emplace_back(std::pow(10.0, i), std::pow(10.0, j));
  return grid;
}

// ---------------------------------------------------------------------------
// Multistart tuning

TuneMethod parse_tune_method(const std::string& name) {
  if (name == "pen-seq") return TuneMethod::PenSeq;
  if (name == "pen-exact") return TuneMethod::PenExact;
  if (name == "relax-seq") return TuneMethod::RelaxSeq;
  if (name == "relax-exact") return TuneMethod::RelaxExact;
  if (name == "ssn") return TuneMethod::Ssn;
  throw ContractError("unknown solver tag: " + name);
}

const char* to_string(TuneMethod method) {
  switch (method) {
    case TuneMethod::PenSeq: return "pen-seq";
    case TuneMethod::PenExact: return "pen-exact";
    case TuneMethod::RelaxSeq: return "relax-seq";
    case TuneMethod::RelaxExact: return "relax-exact";
    case TuneMethod::Ssn: return "ssn";
  }
  return "?";
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  const auto at = [&](double p) {
    const double pos = p * (static_cast<double>(values.size()) - 1.0);
    const size_t lo = static_cast<size_t>(pos);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
  };
  q.q1 = at(0.25);
  q.q2 = at(0.5);
  q.q3 = at(0.75);
  return q;
}

namespace {

TuneRun run_single_start(const FoldPlan& folds, TuneMethod method,
                         const TuneParams& params, double C0, double gamma0) {
  TuneRun run;
  run.C0 = C0;
  run.gamma0 = gamma0;
  try {
    ModelM model(folds, params.tau_ind);
    const Vector z0 = init_point(model, params.init, C0, gamma0);

    SolveTrace trace;
    switch (method) {
      case TuneMethod::PenSeq:
        trace = solve_sequential_penalisation(model.problem(), z0, params.pen);
        break;
      case TuneMethod::PenExact:
        trace = solve_exact_penalisation(model.problem(), z0, params.pi_exact,
                                         params.exact_eps, params.pen);
        break;
      case TuneMethod::RelaxSeq:
        trace = solve_sequential_relaxation(model.problem(), z0, params.relax);
        break;
      case TuneMethod::RelaxExact:
        trace = solve_exact_relaxation(model.problem(), z0, params.tau_exact,
                                       params.exact_eps, params.relax);
        break;
      case TuneMethod::Ssn: {
        const MpccProblem& p = model.problem();
        Vector x0 = Vector::Zero(p.n_vars + p.n_ineq + p.n_eq + 2 * p.n_comp);
        x0.head(p.n_vars) = z0;
        trace = solve_semismooth_newton(p, x0, params.ssn);
        break;
      }
    }

    run.C = trace.z[0];
    run.gamma = trace.z[1];
    run.objective = model.hinge_objective(trace.z);
    run.validation_accuracy = model.validation_accuracy(trace.z);
    run.status = trace.status;
    run.final_param = trace.final_param;
    run.mpcc_feasibility = model.mpcc_feasibility(trace.z);
    run.outer_rounds = static_cast<int>(trace.records.size());
    run.inner_iterations = trace.inner_iterations_total();
    run.wall_time = trace.wall_time;

    if (!folds.test.empty() && run.C > 1e-12 && run.gamma > 1e-12) {
      const TrainedSvm fit =
          train_dual_svm(folds.modeled_set(), run.C, run.gamma, 1e-8);
      run.test_accuracy = accuracy(fit.model, folds.test_set());
    }
  } catch (const std::exception& e) {
    run.error = e.what();
    run.status = SolveStatus::InnerFailure;
  }
  return run;
}

}  // namespace

TuneResult tune(const Dataset& dataset, TuneMethod method,
                const TuneParams& params) {
  TuneResult result;
  result.folds =
      make_folds(dataset, params.folds, params.test_fraction, params.seed);
  const auto starts = multistart_grid(params.grid);
  result.runs.resize(starts.size());

  const int workers = std::max(
      1, std::min(params.workers,
                  static_cast<int>(std::thread::hardware_concurrency())));
  std::atomic<size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= starts.size()) break;
      result.runs[i] = run_single_start(result.folds, method, params,
                                        starts[i].first, starts[i].second);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers - 1; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  std::vector<double> times, objectives;
  for (const auto& run : result.runs) {
    if (!run.error.empty()) continue;
    times.push_back(run.wall_time);
    objectives.push_back(run.objective);
  }
  result.runtime_q = quartiles(times);
  result.objective_q = quartiles(objectives);

  // Best run: smallest re-evaluated objective among MPCC-feasible results,
  // falling back to every error-free run if none qualifies.
  const double feas_gate = 100.0 * params.pen.eps_exit;
  auto eligible = [&](const TuneRun& r) {
    return r.error.empty() && r.mpcc_feasibility <= feas_gate;
  };
  bool any_eligible = false;
  for (const auto& r : result.runs) any_eligible |= eligible(r);

  result.best_objective = std::numeric_limits<double>::infinity();
  for (const auto& r : result.runs) {
    if (!r.error.empty()) continue;
    if (any_eligible && !eligible(r)) continue;
    result.best_validation_accuracy =
        std::max(result.best_validation_accuracy, r.validation_accuracy);
    result.best_test_accuracy =
        std::max(result.best_test_accuracy, r.test_accuracy);
    if (r.objective < result.best_objective) {
      result.best_objective = r.objective;
      result.best_C = r.C;
      result.best_gamma = r.gamma;
    }
  }
  return result;
}

}  // namespace mpcc
