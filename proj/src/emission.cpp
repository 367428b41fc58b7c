#include "nhmm/emission.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nhmm/numeric.hpp"

namespace nhmm {

Mat2 psi_from_xi(double xi1, double xi2) {
  if (!(xi1 > 0.0 && xi1 < 1.0 && xi2 > 0.0 && xi2 < 1.0)) {
    throw std::invalid_argument("xi must lie in (0,1)");
  }
  const double chi1 = 2.0 * xi1 - 1.0;
  const double chi2 = 2.0 * xi2 - 1.0;
  const double on = 0.5 * (chi1 + chi2);
  const double off = 0.5 * (chi1 - chi2);
  return Mat2::symmetric(on, off, on);
}

double state_weight(double rho, int state, int n, int p) {
  switch (state) {
    case 1: return std::pow(rho, n);
    case 2: return 1.0;
    case 3: return std::pow(rho, std::min(n, p));
    case 4: return 0.0;
    default: throw std::invalid_argument("state must be 1..4");
  }
}

double fourier_sum(std::span<const double> cos_coeffs, std::span<const double> sin_coeffs, long t_index,
                   double period, int harmonics) {
  double s = 0.0;
  for (int k = 1; k <= harmonics; ++k) {
    const double arg = 2.0 * std::numbers::pi * k * static_cast<double>(t_index) / period;
    s += cos_coeffs[static_cast<std::size_t>(k - 1)] * std::cos(arg) +
         sin_coeffs[static_cast<std::size_t>(k - 1)] * std::sin(arg);
  }
  return s;
}

SeasonalBasis seasonal_basis(long t_index, int annual_harmonics) {
  SeasonalBasis b;
  b.annual_cos.resize(static_cast<std::size_t>(annual_harmonics));
  b.annual_sin.resize(static_cast<std::size_t>(annual_harmonics));
  const double t = static_cast<double>(t_index);
  for (int k = 1; k <= annual_harmonics; ++k) {
    const double arg = 2.0 * std::numbers::pi * k * t / kYearPeriod;
    b.annual_cos[static_cast<std::size_t>(k - 1)] = std::cos(arg);
    b.annual_sin[static_cast<std::size_t>(k - 1)] = std::sin(arg);
  }
  // Reduce the weekly argument modulo 7 so that the period is exact in t_index.
  const long r = ((t_index % 7) + 7) % 7;
  for (int k = 1; k <= 3; ++k) {
    const double arg = 2.0 * std::numbers::pi * static_cast<double>((k * r) % 7) / kWeekPeriod;
    b.weekly_cos[static_cast<std::size_t>(k - 1)] = std::cos(arg);
    b.weekly_sin[static_cast<std::size_t>(k - 1)] = std::sin(arg);
  }
  return b;
}

double seasonal_mean(const EmissionParams& em, const SeasonalBasis& basis, int region) {
  double s = 0.0;
  for (int k = 0; k < em.gamma.harmonics(); ++k) {
    s += em.gamma.at(region, 0, k) * basis.annual_cos[static_cast<std::size_t>(k)] +
         em.gamma.at(region, 1, k) * basis.annual_sin[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < 3; ++k) {
    s += em.delta.at(region, 0, k) * basis.weekly_cos[static_cast<std::size_t>(k)] +
         em.delta.at(region, 1, k) * basis.weekly_sin[static_cast<std::size_t>(k)];
  }
  return s;
}

double seasonal_precision(const EmissionParams& em, const SeasonalBasis& basis, int component) {
  double s = 0.0;
  for (int k = 0; k < em.kappa.harmonics(); ++k) {
    s += em.kappa.at(component, 0, k) * basis.annual_cos[static_cast<std::size_t>(k)] +
         em.kappa.at(component, 1, k) * basis.annual_sin[static_cast<std::size_t>(k)];
  }
  return s;
}

namespace {

void check_state(const DayCovariates& day, int state) {
  if (state < 1 || state > 4) throw std::invalid_argument("state must be 1..4");
  if ((state == 2) != day.holiday()) {
    throw std::invalid_argument("state 2 must coincide exactly with calendar holidays");
  }
}

int basis_size(const EmissionParams& em) { return std::max(em.k_gamma(), em.k_kappa()); }

}  // namespace

Vec2 mean_vector(const EmissionParams& em, const DayCovariates& day, const SeasonalBasis& basis, int state) {
  check_state(day, state);
  Vec2 mu;
  const int type = day.region_type() - 1;
  for (int j = 0; j < 2; ++j) {
    const double b = state_weight(em.rho_beta[static_cast<std::size_t>(j)], state, day.n, day.p);
    const double w = day.w[j];
    const double wt = day.w_tilde[j];
    const auto ju = static_cast<std::size_t>(j);
    mu[j] = em.alpha[ju] + b * em.beta[ju][static_cast<std::size_t>(type)] + seasonal_mean(em, basis, j) +
            (em.zeta[ju][0] + em.zeta[ju][1] * w) * wt;
  }
  return mu;
}

Vec2 mean_vector(const EmissionParams& em, const DayCovariates& day, int state) {
  return mean_vector(em, day, seasonal_basis(day.t_index, basis_size(em)), state);
}

std::array<double, 3> precision_predictors(const EmissionParams& em, const DayCovariates& day,
                                           const SeasonalBasis& basis, int state) {
  check_state(day, state);
  const double weight = state_weight(em.rho_theta, state, day.n, day.p);
  std::array<double, 3> omega{};
  for (int i = 0; i < 3; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    omega[iu] = em.eta[iu] + weight * em.theta[iu] + seasonal_precision(em, basis, i);
  }
  return omega;
}

PrecisionComponents precision_from_predictors(const std::array<double, 3>& omega) {
  return {omega[0], std::exp(std::clamp(omega[1], -kLogPrecisionClamp, kLogPrecisionClamp)),
          std::exp(std::clamp(omega[2], -kLogPrecisionClamp, kLogPrecisionClamp))};
}

PrecisionComponents precision_components(const EmissionParams& em, const DayCovariates& day, int state) {
  return precision_from_predictors(
      precision_predictors(em, day, seasonal_basis(day.t_index, basis_size(em)), state));
}

Mat2 precision_matrix(const PrecisionComponents& pc) {
  if (!(pc.tau1 > 0.0 && pc.tau2 > 0.0)) throw std::invalid_argument("precisions must be positive");
  const double f = pc.phi;
  return Mat2::symmetric(pc.tau1 + pc.tau2 * f * f, -pc.tau2 * f, pc.tau2);
}

Mat2 precision_inverse(const PrecisionComponents& pc) {
  if (!(pc.tau1 > 0.0 && pc.tau2 > 0.0)) throw std::invalid_argument("precisions must be positive");
  const double f = pc.phi;
  return Mat2::symmetric(1.0 / pc.tau1, f / pc.tau1, f * f / pc.tau1 + 1.0 / pc.tau2);
}

Mat2 solve_lyapunov(const Mat2& psi, const Mat2& rhs) {
  const double a = psi.a11, b = psi.a12, c = psi.a21, d = psi.a22;
  // (I - M) x = s with x = (x11, x12, x22).
  double m[3][4] = {
      {1.0 - a * a, -2.0 * a * b, -b * b, rhs.a11},
      {-a * c, 1.0 - (a * d + b * c), -b * d, 0.5 * (rhs.a12 + rhs.a21)},
      {-c * c, -2.0 * c * d, 1.0 - d * d, rhs.a22},
  };
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    }
    if (m[piv][col] == 0.0) throw std::runtime_error("singular Lyapunov system (Psi not stationary?)");
    if (piv != col) {
      for (int k = 0; k < 4; ++k) std::swap(m[piv][k], m[col][k]);
    }
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  double x[3];
  for (int r = 2; r >= 0; --r) {
    double s = m[r][3];
    for (int k = r + 1; k < 3; ++k) s -= m[r][k] * x[k];
    x[r] = s / m[r][r];
  }
  return Mat2::symmetric(x[0], x[1], x[2]);
}

Mat2 stationary_variance(const Mat2& psi, const Mat2& omega1) { return solve_lyapunov(psi, omega1.inverse()); }

double log_density_precision(Vec2 e, const PrecisionComponents& pc) {
  const double u1 = e.x1;
  const double u2 = e.x2 - pc.phi * e.x1;
  return -kLog2Pi + 0.5 * (std::log(pc.tau1) + std::log(pc.tau2)) - 0.5 * (pc.tau1 * u1 * u1 + pc.tau2 * u2 * u2);
}

double log_density_covariance(Vec2 e, const Mat2& cov) {
  const double det = cov.det();
  return -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad_form(cov.inverse(), e);
}

double log_emission_density(Vec2 y, const DayCovariates& day, int state, const EmissionParams& em,
                            const std::optional<LaggedDay>& lagged) {
  const Mat2 psi = psi_from_xi(em.xi[0], em.xi[1]);
  const Vec2 mu = mean_vector(em, day, state);
  const PrecisionComponents pc = precision_components(em, day, state);
  if (!lagged) {
    const Mat2 v = solve_lyapunov(psi, precision_inverse(pc));
    return log_density_covariance(y - mu, v);
  }
  const Vec2 mu_prev = mean_vector(em, lagged->day, lagged->state);
  const Vec2 e = y - mu - psi * (lagged->y - mu_prev);
  return log_density_precision(e, pc);
}

}  // namespace nhmm
