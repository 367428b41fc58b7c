#pragma once

// Conditionally stationary bivariate VAR(1) emission model.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "nhmm/calendar.hpp"
#include "nhmm/linalg2.hpp"
#include "nhmm/parameters.hpp"

namespace nhmm {

inline constexpr double kWeekPeriod = 7.0;
inline constexpr double kYearPeriod = 365.25;
/// Log precisions are clamped to this range before exponentiation.
inline constexpr double kLogPrecisionClamp = 30.0;

/// Psi = [[on, off], [off, on]] with on + off = 2 xi_1 - 1 and on - off = 2 xi_2 - 1.
Mat2 psi_from_xi(double xi1, double xi2);

/// B (or Theta) weight of the holiday effect: rho^n in state 1, 1 in state 2,
/// rho^min(n,p) in state 3, 0 in state 4.
double state_weight(double rho, int state, int n, int p);

/// sum_{k=1..K} a_k cos(2 pi k t / period) + b_k sin(2 pi k t / period).
double fourier_sum(std::span<const double> cos_coeffs, std::span<const double> sin_coeffs, long t_index,
                   double period, int harmonics);

/// Cosines and sines of the annual and weekly harmonics on one day.
struct SeasonalBasis {
  std::vector<double> annual_cos;
  std::vector<double> annual_sin;
  std::array<double, 3> weekly_cos{};
  std::array<double, 3> weekly_sin{};
};

SeasonalBasis seasonal_basis(long t_index, int annual_harmonics);

/// Seasonal terms of the mean (Gamma + Delta) for one region.
double seasonal_mean(const EmissionParams& em, const SeasonalBasis& basis, int region);
/// Seasonal term K_{t,i} of the precision model for component i (0-based).
double seasonal_precision(const EmissionParams& em, const SeasonalBasis& basis, int component);

/// mu_t for state s (1..4). Throws std::invalid_argument if state 2 and the holiday flag disagree.
Vec2 mean_vector(const EmissionParams& em, const DayCovariates& day, int state);
Vec2 mean_vector(const EmissionParams& em, const DayCovariates& day, const SeasonalBasis& basis, int state);

struct PrecisionComponents {
  double phi = 0.0;
  double tau1 = 1.0;
  double tau2 = 1.0;
};

/// Linear predictors (omega_1, omega_2, omega_3) before exponentiation.
std::array<double, 3> precision_predictors(const EmissionParams& em, const DayCovariates& day,
                                           const SeasonalBasis& basis, int state);

/// phi = omega_1, tau_i = exp(clamp(omega_{i+1})).
PrecisionComponents precision_from_predictors(const std::array<double, 3>& omega);

PrecisionComponents precision_components(const EmissionParams& em, const DayCovariates& day, int state);

/// Omega = T' D^{-1} T with T unit lower triangular, T(2,1) = -phi, D = diag(1/tau1, 1/tau2).
/// Throws std::invalid_argument for non-positive tau.
Mat2 precision_matrix(const PrecisionComponents& pc);

/// Omega^{-1}, in closed form.
Mat2 precision_inverse(const PrecisionComponents& pc);

/// Solves X - Psi X Psi' = rhs for symmetric rhs through the 3x3 system in (x11, x12, x22).
Mat2 solve_lyapunov(const Mat2& psi, const Mat2& rhs);

/// Stationary variance V = Psi V Psi' + Omega_1^{-1}.
Mat2 stationary_variance(const Mat2& psi, const Mat2& omega1);

/// ln N(e; 0, Omega^{-1}) using the Cholesky factors directly.
double log_density_precision(Vec2 e, const PrecisionComponents& pc);

/// ln N(e; 0, cov) for an SPD covariance.
double log_density_covariance(Vec2 e, const Mat2& cov);

/// Observation, covariates and state of the previous day.
struct LaggedDay {
  Vec2 y;
  DayCovariates day;
  int state;
};

/// ln p(y_t | y_{t-1}, s_{t-1}, s_t); with no lagged day this is the day-1 density under V(Psi, Omega_1).
double log_emission_density(Vec2 y, const DayCovariates& day, int state, const EmissionParams& em,
                            const std::optional<LaggedDay>& lagged);

}  // namespace nhmm
