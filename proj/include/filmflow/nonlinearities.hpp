#pragma once

/// @file nonlinearities.hpp
/// @brief Mobility, singular potential, perturbation and entropy functions of
/// the thin-film / Cahn-Hilliard model, together with their epsilon
/// regularizations.
///
/// Conventions:
///   b(r)   = r^s + beta r^n                      (mobility, r >= 0)
///   f(r)   = -r^{-kappa}                         (singular force, r > 0)
///   F(r)   = 1/(kappa-1) + int_1^r f             = r^{1-kappa}/(kappa-1)
///   gamma  : bounded, integrable perturbation of the potential derivative
///   Gamma(r) = int_1^r gamma,  W = F + Gamma
///   m(r)   = int_1^r 1/b,      M(r) = int_1^r m  (entropy pair)
///
/// Regularized versions:
///   b_eps(r) = b(sqrt(r^2 + eps^a))
///   f_eps    = f on [eps, inf), first-order Taylor extension below eps
///   F_eps    = second-order Taylor extension of F below eps

#include <string>
#include <vector>

namespace filmflow {

/// Perturbation gamma of the potential derivative.
struct GammaSpec {
  enum class Kind { zero, physical };

  Kind kind = Kind::zero;
  // physical: gamma(r) = ramp(r) * B * r^{-k} * exp(-A r), where ramp is a C^1
  // smoothstep from 0 at r0/2 to 1 at r0.
  double A = 0.0;
  double B = 0.0;
  double k = 2.0;
  double r0 = 0.1;

  static GammaSpec zero() { return {}; }
  static GammaSpec physical(double A, double B, double k, double r0 = 0.1) {
    return {Kind::physical, A, B, k, r0};
  }

  bool is_zero() const { return kind == Kind::zero || B == 0.0; }

  /// "zero" or "physical(A,B,k)" / "physical(A,B,k,r0)".
  std::string to_string() const;
  static GammaSpec parse(const std::string& text);
};

/// Forcing g: a constant, a cosine profile g0 + amp cos(2 pi x / L_x), or
/// explicit per-cell samples.
struct ForcingSpec {
  enum class Kind { constant, cosine, sampled };

  Kind kind = Kind::constant;
  double value = 0.0;
  double amplitude = 0.0;
  std::vector<double> samples;

  static ForcingSpec constant(double g) { return {Kind::constant, g, 0.0, {}}; }
  static ForcingSpec cosine(double mean, double amplitude) {
    return {Kind::cosine, mean, amplitude, {}};
  }
  static ForcingSpec sampled(std::vector<double> values) {
    return {Kind::sampled, 0.0, 0.0, std::move(values)};
  }

  bool is_zero() const;
  /// "0.5", "cosine(0,0.2)"; sampled fields serialize as "sampled".
  std::string to_string() const;
  static ForcingSpec parse(const std::string& text);
};

/// Coefficients of the continuous problem.
struct ModelParams {
  double s = 1.0;       ///< mobility exponent
  double n = 0.0;       ///< secondary mobility exponent, 0 <= n <= s
  double beta = 0.0;    ///< secondary mobility coefficient
  double kappa = 3.0;   ///< singularity exponent, kappa > 1, kappa >= s + 1
  double delta = 1.0;   ///< viscosity
  double a = 1.0;       ///< regularization exponent in b_eps
  double eps = 1e-3;    ///< regularization scale in (0, 1]
  GammaSpec gamma;
  ForcingSpec g;

  /// Throws ValidationError naming the offending field. `dim` is the spatial
  /// dimension the parameters are meant for (0 = unspecified); the s < 10
  /// growth restriction applies only to dim == 3.
  void validate(int dim = 0) const;
};

// --- mobility -------------------------------------------------------------

double eval_b(const ModelParams& p, double r);
double eval_b_prime(const ModelParams& p, double r);
double eval_b_eps(const ModelParams& p, double r);
double eval_b_eps_prime(const ModelParams& p, double r);

// --- singular potential ---------------------------------------------------

double eval_f(const ModelParams& p, double r);
double eval_f_prime(const ModelParams& p, double r);
double eval_f_eps(const ModelParams& p, double r);
double eval_f_eps_prime(const ModelParams& p, double r);
double eval_F(const ModelParams& p, double r);
double eval_F_eps(const ModelParams& p, double r);

// --- entropy pair ---------------------------------------------------------

struct EntropyPair {
  double m = 0.0;
  double M = 0.0;
};

EntropyPair eval_entropy_pair(const ModelParams& p, double r);
EntropyPair eval_entropy_pair_eps(const ModelParams& p, double r);

// --- perturbation ---------------------------------------------------------

double eval_gamma(const ModelParams& p, double r);
double eval_gamma_prime(const ModelParams& p, double r);
double eval_Gamma(const ModelParams& p, double r);
double eval_W(const ModelParams& p, double r);

}  // namespace filmflow
