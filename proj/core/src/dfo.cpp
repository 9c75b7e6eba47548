#include "mpcc/dfo.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "mpcc/errors.hpp"
#include "mpcc/rng.hpp"

namespace mpcc {

BlackBoxObjective::BlackBoxObjective(FoldPlan folds, double eps)
    : folds_(std::move(folds)), eps_(eps) {}

BlackBoxObjective::Eval BlackBoxObjective::operator()(double C, double gamma) {
  ++count_;
  Eval out;
  for (int k = 0; k < folds_.K; ++k) {
    const Dataset tr = folds_.training_set(k);
    const Dataset val = folds_.validation_set(k);
    const TrainedSvm fit = train_dual_svm(tr, C, gamma, eps_);
    double fold_loss = 0.0;
    int correct = 0;
    for (int i = 0; i < val.n(); ++i) {
      double score = fit.model.bias;
      for (int j = 0; j < tr.n(); ++j)
        score += fit.model.alpha[j] * tr.y[j] *
                 std::exp(-gamma * (val.X.row(i) - tr.X.row(j)).squaredNorm());
      fold_loss += std::max(0.0, 1.0 - val.y[i] * score);
      const int label = score < 0.0 ? -1 : 1;
      if (label == static_cast<int>(val.y[i])) ++correct;
    }
    out.loss += fold_loss / val.n();
    out.accuracy += static_cast<double>(correct) / val.n();
  }
  out.accuracy /= folds_.K;
  return out;
}

std::vector<std::pair<double, double>> default_dfo_grid(int exp_lo,
                                                        int exp_hi) {
  std::vector<std::pair<double, double>> grid;
  for (int i = exp_lo; i <= exp_hi; ++i)
    for (int j = exp_lo; j <= exp_hi; ++j)
      grid.emplace_back(std::pow(10.0, i), std::pow(10.0, j));
  return grid;
}

DfoResult grid_search(const DfoObjective& obj,
                      const std::vector<std::pair<double, double>>& grid) {
  if (grid.empty()) throw ContractError("grid_search: empty grid");
  DfoResult best;
  bool first = true;
  for (const auto& [C, gamma] : grid) {
    const auto eval = obj(C, gamma);
    const bool better =
        first || eval.loss < best.loss ||
        (eval.loss == best.loss &&
         (C < best.C || (C == best.C && gamma < best.gamma)));
    if (better) {
      best.C = C;
      best.gamma = gamma;
      best.loss = eval.loss;
      best.accuracy = eval.accuracy;
      first = false;
    }
  }
  best.evaluations = static_cast<int>(grid.size());
  return best;
}

DfoResult random_search(const DfoObjective& obj, const LogBounds& bounds,
                        int n_evals, std::uint64_t seed) {
  if (n_evals < 1) throw ContractError("random_search: n_evals >= 1");
  Rng rng(seed);
  DfoResult best;
  for (int t = 0; t < n_evals; ++t) {
    const double C =
        std::pow(10.0, rng.next_uniform(bounds.log_c_lo, bounds.log_c_hi));
    const double gamma = std::pow(
        10.0, rng.next_uniform(bounds.log_gamma_lo, bounds.log_gamma_hi));
    const auto eval = obj(C, gamma);
    if (t == 0 || eval.loss < best.loss) {
      best.C = C;
      best.gamma = gamma;
      best.loss = eval.loss;
      best.accuracy = eval.accuracy;
    }
  }
  best.evaluations = n_evals;
  return best;
}

PatternResult pattern_search(const DfoObjective& obj_in,
                             std::pair<double, double> start, double h0,
                             const PatternParams& params) {
  if (h0 <= 0.0) throw ContractError("pattern_search: h0 must be positive");
  int evals = 0;
  const auto obj = [&](double C, double gamma) {
    ++evals;
    return obj_in(C, gamma);
  };
  const auto clamp_log = [](double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
  };
  double lc = clamp_log(std::log10(start.first), params.bounds.log_c_lo,
                        params.bounds.log_c_hi);
  double lg = clamp_log(std::log10(start.second), params.bounds.log_gamma_lo,
                        params.bounds.log_gamma_hi);

  PatternResult best;
  {
    const auto eval = obj(std::pow(10.0, lc), std::pow(10.0, lg));
    best.C = std::pow(10.0, lc);
    best.gamma = std::pow(10.0, lg);
    best.loss = eval.loss;
    best.accuracy = eval.accuracy;
  }

  double h = h0;
  while (h >= params.h_min && best.poll_rounds < params.max_rounds) {
    ++best.poll_rounds;
    const double cand[4][2] = {{lc + h, lg}, {lc - h, lg},
                               {lc, lg + h}, {lc, lg - h}};
    double best_loss = best.loss;
    int move = -1;
    BlackBoxObjective::Eval move_eval;
    for (int c = 0; c < 4; ++c) {
      const double cc = clamp_log(cand[c][0], params.bounds.log_c_lo,
                                  params.bounds.log_c_hi);
      const double cg = clamp_log(cand[c][1], params.bounds.log_gamma_lo,
                                  params.bounds.log_gamma_hi);
      const auto eval = obj(std::pow(10.0, cc), std::pow(10.0, cg));
      if (eval.loss < best_loss) {
        best_loss = eval.loss;
        move = c;
        move_eval = eval;
      }
    }
    if (move >= 0) {
      lc = clamp_log(cand[move][0], params.bounds.log_c_lo,
                     params.bounds.log_c_hi);
      lg = clamp_log(cand[move][1], params.bounds.log_gamma_lo,
                     params.bounds.log_gamma_hi);
      best.C = std::pow(10.0, lc);
      best.gamma = std::pow(10.0, lg);
      best.loss = move_eval.loss;
      best.accuracy = move_eval.accuracy;
    } else {
      h *= 0.5;
    }
  }
  best.evaluations = evals;
  return best;
}

namespace {

// Minimal GP with a squared-exponential kernel on 2-d log-space inputs.
struct Gp {
  Matrix x;  // m × 2
  Vector y;  // centered observations
  double mean = 0.0;
  double signal = 1.0;   // σ_f²
  double length = 1.0;   // ℓ
  double noise = 1e-6;
  Eigen::LLT<Matrix> chol;
  Vector alpha;

  double kernel(const Eigen::RowVector2d& a, const Eigen::RowVector2d& b) const {
    return signal * std::exp(-(a - b).squaredNorm() / (2.0 * length * length));
  }

  // Fit with the given length scale; returns the log marginal likelihood.
  double fit(double ell) {
    length = ell;
    const int m = static_cast<int>(x.rows());
    Matrix k(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        k(i, j) = kernel(x.row(i), x.row(j)) + (i == j ? noise : 0.0);
    chol.compute(k);
    if (chol.info() != Eigen::Success) return -1e300;
    alpha = chol.solve(y);
    double logdet = 0.0;
    const auto& l = chol.matrixLLT();
    for (int i = 0; i < m; ++i) logdet += std::log(l(i, i));
    return -0.5 * y.dot(alpha) - logdet -
           0.5 * m * std::log(2.0 * M_PI);
  }

  std::pair<double, double> predict(const Eigen::RowVector2d& q) const {
    const int m = static_cast<int>(x.rows());
    Vector k(m);
    for (int i = 0; i < m; ++i) k[i] = kernel(x.row(i), q);
    const double mu = mean + k.dot(alpha);
    const Vector v = chol.solve(k);
    const double var = std::max(1e-12, signal + noise - k.dot(v));
    return {mu, std::sqrt(var)};
  }
};

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }
double normal_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
}

double expected_improvement(const Gp& gp, const Eigen::RowVector2d& q,
                            double y_best) {
  const auto [mu, sd] = gp.predict(q);
  const double u = (y_best - mu) / sd;
  return (y_best - mu) * normal_cdf(u) + sd * normal_pdf(u);
}

}  // namespace

DfoResult bayesian_search(const DfoObjective& obj, const LogBounds& bounds,
                          int n_evals, std::uint64_t seed) {
  if (n_evals < 5) throw ContractError("bayesian_search: n_evals >= 5");
  Rng rng(seed);

  const double clo = bounds.log_c_lo, chi = bounds.log_c_hi;
  const double glo = bounds.log_gamma_lo, ghi = bounds.log_gamma_hi;

  Matrix x(n_evals, 2);
  Vector y(n_evals);
  DfoResult best;

  auto evaluate_at = [&](int t, double lc, double lg) {
    const double C = std::pow(10.0, lc);
    const double gamma = std::pow(10.0, lg);
    const auto eval = obj(C, gamma);
    x.row(t) << lc, lg;
    y[t] = eval.loss;
    if (t == 0 || eval.loss < best.loss) {
      best.C = C;
      best.gamma = gamma;
      best.loss = eval.loss;
      best.accuracy = eval.accuracy;
    }
  };

  // Space-filling start: four corners and the centre.
  const double init[5][2] = {{clo, glo}, {clo, ghi}, {chi, glo}, {chi, ghi},
                             {0.5 * (clo + chi), 0.5 * (glo + ghi)}};
  for (int t = 0; t < 5; ++t) evaluate_at(t, init[t][0], init[t][1]);

  for (int t = 5; t < n_evals; ++t) {
    const double spread = y.head(t).maxCoeff() - y.head(t).minCoeff();
    double next_lc, next_lg;
    if (spread < 1e-12) {
      // Surrogate cannot rank anything; sample this round at random.
      next_lc = rng.next_uniform(clo, chi);
      next_lg = rng.next_uniform(glo, ghi);
    } else {
      Gp gp;
      gp.x = x.topRows(t);
      gp.mean = y.head(t).mean();
      gp.y = y.head(t) - Vector::Constant(t, gp.mean);
      gp.signal = std::max(1e-8, gp.y.squaredNorm() / t);
      double best_ml = -1e300;
      double best_ell = 1.0;
      for (const double ell : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double ml = gp.fit(ell);
        if (ml > best_ml) {
          best_ml = ml;
          best_ell = ell;
        }
      }
      gp.fit(best_ell);

      const double y_best = y.head(t).minCoeff();
      double acq_best = -1.0;
      Eigen::RowVector2d q_best;
      for (int c = 0; c < 256; ++c) {
        Eigen::RowVector2d q(rng.next_uniform(clo, chi),
                             rng.next_uniform(glo, ghi));
        const double ei = expected_improvement(gp, q, y_best);
        if (ei > acq_best) {
          acq_best = ei;
          q_best = q;
        }
      }
      // Local polish around the incumbent candidate.
      double radius = 0.25 * std::max(chi - clo, ghi - glo);
      for (int round = 0; round < 8; ++round) {
        for (int c = 0; c < 8; ++c) {
          Eigen::RowVector2d q(
              std::clamp(q_best[0] + radius * rng.next_gaussian(), clo, chi),
              std::clamp(q_best[1] + radius * rng.next_gaussian(), glo, ghi));
          const double ei = expected_improvement(gp, q, y_best);
          if (ei > acq_best) {
            acq_best = ei;
            q_best = q;
          }
        }
        radius *= 0.5;
      }
      next_lc = q_best[0];
      next_lg = q_best[1];
    }
    evaluate_at(t, next_lc, next_lg);
  }
  best.evaluations = n_evals;
  return best;
}

}  // namespace mpcc
