#pragma once

// Closed-form bound calculators: Gronwall-type difference bounds, the claim
// constant k(r, eta), the product/additive envelope conversions, the
// bilinear bounded-energy bound and the asymptotic-gain horizon recipe.

#include <cstdint>
#include <functional>

#include "iiss/comparison.hpp"

namespace iiss {

struct GronwallParams {
  double eta = 0.0;
  double k = 0.0;
  double L = 0.0;
  double elapsed = 0.0;
  /// integral of gamma(|u(s)|) over (t0, t].
  double energy = 0.0;
  double M = 1.0;
  double w = 0.0;

  void validate() const;
};

/// [eta * elapsed + k * energy] * e^{L * elapsed}.
double gronwall_delay_bound(const GronwallParams& p);

/// [eta * elapsed + k * energy] * M * e^{L M e^{w elapsed} elapsed + w elapsed}.
double gronwall_semilinear_bound(const GronwallParams& p);

/// (K + ||psi_{t0}||) * e^{L * elapsed}.
double gronwall_history_bound(double k_const, double L, double initial_history_norm,
                              double elapsed);

/// N(r) * (2 / gamma(delta) + 1). Throws ZeroGain when gamma(delta) = 0.
double claim_k_constant(const NondecreasingEnvelope& n, const ComparisonFunction& gamma,
                        double delta, double r);

/// |f| <= N(|psi|) (1 + gamma(|mu|)).
struct ProductForm {
  NondecreasingEnvelope N;
  ComparisonFunction gamma;
  double operator()(double r, double mu) const;
};

/// |f| <= N_hat(|psi|) + gamma_hat(|mu|).
struct AdditiveForm {
  NondecreasingEnvelope N_hat;
  ComparisonFunction gamma_hat;
  double operator()(double r, double mu) const;
};

/// N_hat = N + N^2 / 2, gamma_hat = gamma^2 / 2.
AdditiveForm to_additive_form(const ProductForm& f);
/// N = max(N_hat, N_hat / N_hat(0)), gamma = gamma_hat.
ProductForm to_product_form(const AdditiveForm& f);

struct BilinearParams {
  double M = 1.0;
  double lambda = 1.0;
  double K = 0.0;
  double d = 0.0;
  ComparisonFunction gamma = ComparisonFunction::identity();

  void validate() const;
};

struct BilinearConstants {
  ComparisonFunction alpha;  // r^2 / 2
  ComparisonFunction rho;    // M^2 (e^{2MKr} - 1) / 2 + M d r e^{MKr}
  double c;                  // M^2 / 2
};

/// Throws ZeroGain when K = d = 0 (rho vanishes identically).
BilinearConstants bilinear_constants(const BilinearParams& p);

/// alpha(|x0|) + rho(energy) + c with the constants above.
double bilinear_ubebs_bound(const BilinearParams& p, double x0_norm, double u_energy);

struct HorizonTrace {
  double psi_r = 0.0;
  double r_tilde = 0.0;
  double eps_tilde = 0.0;
  double T_tilde = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  std::int64_t N = 0;
  double T = 0.0;
};

using GammaOf = std::function<double(double r_tilde, double eta, double T_tilde)>;

/// Runs the horizon construction psi = rho^{-1} o alpha, r~ = alpha(r) +
/// rho(psi(r)), eps~ = alpha^{-1}(eps), T~ with beta(r~, T~) < eps~/2,
/// eta = eps~/2, gamma = gamma_of(r~, eta, T~), N = ceil(psi(r)/gamma),
/// T = N T~. T~ lies in (t*, t* + tol] for the crossing time t*.
HorizonTrace uuag_horizon(const ComparisonFunction& alpha, const ComparisonFunction& rho,
                          const KLFunction& beta, const GammaOf& gamma_of, double r, double eps,
                          double tol, double t_max = 1e6);

}  // namespace iiss
