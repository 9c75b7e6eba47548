#pragma once

#include <string>

#include "mpcc/nlp.hpp"
#include "mpcc/types.hpp"

namespace mpcc {

struct Dataset {
  Matrix X;  // n × d feature rows
  Vector y;  // labels, strictly ±1
  std::string name;
  bool standardized = false;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

/// exp(-gamma ‖x1 - x2‖²), in (0, 1].
double rbf_kernel(const Vector& x1, const Vector& x2, double gamma);

/// Label-signed Gram matrix Q_ij = y_i y_j exp(-gamma ‖x_i - x_j‖²);
/// symmetric, and positive definite when the rows of X are distinct.
/// Duplicate rows are reported through the optional flag since definiteness
/// may fail there.
Matrix kernel_matrix(const Matrix& X, const Vector& y, double gamma,
                     bool* duplicate_rows = nullptr);

/// Smooth margin-support indicator 1 - (2a/C - 1)² + tau_ind on [0, C] and 0
/// outside, with the closed-form derivatives of the interior branch.
struct SmoothIndicator {
  double value = 0.0;
  double d_alpha = 0.0, d2_alpha = 0.0;
  double d_C = 0.0, d2_C = 0.0;
  double d_alpha_C = 0.0;
};

SmoothIndicator smooth_indicator(double alpha, double C,
                                 double tau_ind = 1e-6);

/// Indicator-weighted average of the margin residuals y_i - Σ_j α_j y_j
/// K(x_i, x_j). Throws FeasibilityError when all weights vanish (possible
/// only with tau_ind = 0 and every alpha outside (0, C)).
double svm_bias(const Vector& alpha, double C, double gamma,
                const Dataset& data, double tau_ind = 1e-6);

/// Bias value and all first/second derivatives in (alpha, C, gamma), using
/// the smooth interior branch of the indicator throughout. `kernel` holds
/// the unsigned values exp(-gamma d_ij) and `sqdist` the squared distances
/// d_ij between training rows.
struct BiasDerivatives {
  double value = 0.0;
  Vector d_alpha;
  double d_C = 0.0, d_gamma = 0.0;
  Matrix d2_alpha;
  Vector d2_alpha_C, d2_alpha_gamma;
  double d2_C = 0.0, d2_gamma = 0.0, d2_C_gamma = 0.0;
};

BiasDerivatives bias_with_derivatives(const Vector& alpha, double C,
                                      double gamma, const Matrix& kernel,
                                      const Matrix& sqdist, const Vector& y,
                                      double tau_ind = 1e-6);

struct SvmModel {
  Vector alpha;  // in [0, C]
  double C = 1.0;
  double gamma = 1.0;
  double bias = 0.0;
  Dataset data;  // support data the model was trained on
};

/// Model plus the lower-level KKT multipliers (v for alpha >= 0, w for
/// C - alpha >= 0, u for the equality Σ alpha_i y_i = 0).
struct TrainedSvm {
  SvmModel model;
  Vector v, w;
  double u = 0.0;
  NlpResult inner;
};

/// Solve the convex dual QP
///   min ½ αᵀQ(γ)α − Σα  s.t.  0 <= α <= C,  Σ α_i y_i = 0
/// to an eps-KKT point through the interior-point engine and reconstruct
/// the bias.
TrainedSvm train_dual_svm(const Dataset& data, double C, double gamma,
                          double eps);

/// sign(Σ_j α_j y_j K(x_j, x) + b) with sign(0) = +1.
int predict(const SvmModel& model, const Vector& x);

/// Fraction of examples predicted correctly.
double accuracy(const SvmModel& model, const Dataset& data);

}  // namespace mpcc
