#include "iiss/bounds.hpp"

#include <cmath>
#include <string>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || std::isnan(v)) {
    throw Error(ErrorCode::NegativeArgument, std::string(name) + " must be >= 0");
  }
}

}  // namespace

void GronwallParams::validate() const {
  require_nonneg(eta, "eta");
  require_nonneg(k, "k");
  require_nonneg(L, "L");
  require_nonneg(elapsed, "elapsed");
  require_nonneg(energy, "energy");
  require_nonneg(w, "w");
  if (!(M >= 1.0)) throw Error(ErrorCode::InvalidArgument, "M must be >= 1");
}

double gronwall_delay_bound(const GronwallParams& p) {
  p.validate();
  return (p.eta * p.elapsed + p.k * p.energy) * std::exp(p.L * p.elapsed);
}

double gronwall_semilinear_bound(const GronwallParams& p) {
  p.validate();
  const double growth = std::exp(p.w * p.elapsed);
  const double exponent = p.L * p.M * growth * p.elapsed + p.w * p.elapsed;
  return (p.eta * p.elapsed + p.k * p.energy) * p.M * std::exp(exponent);
}

double gronwall_history_bound(double k_const, double L, double initial_history_norm,
                              double elapsed) {
  require_nonneg(k_const, "K");
  require_nonneg(L, "L");
  require_nonneg(initial_history_norm, "history norm");
  require_nonneg(elapsed, "elapsed");
  return (k_const + initial_history_norm) * std::exp(L * elapsed);
}

double claim_k_constant(const NondecreasingEnvelope& n, const ComparisonFunction& gamma,
                        double delta, double r) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be > 0");
  require_nonneg(r, "r");
  const double g = eval(gamma, delta);
  if (!(g > 0.0)) throw Error(ErrorCode::ZeroGain, "gamma(delta) = 0");
  return n(r) * (2.0 / g + 1.0);
}

double ProductForm::operator()(double r, double mu) const { return N(r) * (1.0 + eval(gamma, mu)); }

double AdditiveForm::operator()(double r, double mu) const {
  return N_hat(r) + eval(gamma_hat, mu);
}

AdditiveForm to_additive_form(const ProductForm& f) {
  return {NondecreasingEnvelope::lifted(f.N),
          ComparisonFunction::compose(ComparisonFunction::power(0.5, 2.0), f.gamma)};
}

ProductForm to_product_form(const AdditiveForm& f) {
  return {NondecreasingEnvelope::normalized(f.N_hat), f.gamma_hat};
}

void BilinearParams::validate() const {
  if (!(M >= 1.0)) throw Error(ErrorCode::InvalidArgument, "M must be >= 1");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be > 0");
  require_nonneg(K, "K");
  require_nonneg(d, "d");
}

BilinearConstants bilinear_constants(const BilinearParams& p) {
  p.validate();
  if (p.K == 0.0 && p.d == 0.0) throw Error(ErrorCode::ZeroGain, "K = d = 0 gives rho = 0");
  std::vector<ComparisonFunction> terms;
  if (p.K > 0.0) {
    terms.push_back(ComparisonFunction::affine_exp(p.M * p.M / 2.0, 2.0 * p.M * p.K));
  }
  if (p.d > 0.0) terms.push_back(ComparisonFunction::linear_exp(p.M * p.d, p.M * p.K));
  ComparisonFunction rho =
      terms.size() == 1 ? terms.front() : ComparisonFunction::sum(std::move(terms));
  return {ComparisonFunction::power(0.5, 2.0), std::move(rho), p.M * p.M / 2.0};
}

double bilinear_ubebs_bound(const BilinearParams& p, double x0_norm, double u_energy) {
  p.validate();
  require_nonneg(x0_norm, "x0 norm");
  require_nonneg(u_energy, "input energy");
  const double mk = p.M * p.K;
  const double rho = p.M * p.M * std::expm1(2.0 * mk * u_energy) / 2.0 +
                     p.M * p.d * u_energy * std::exp(mk * u_energy);
  return x0_norm * x0_norm / 2.0 + rho + p.M * p.M / 2.0;
}

HorizonTrace uuag_horizon(const ComparisonFunction& alpha, const ComparisonFunction& rho,
                          const KLFunction& beta, const GammaOf& gamma_of, double r, double eps,
                          double tol, double t_max) {
  if (!(eps > 0.0) || !(r >= eps) || !std::isfinite(r)) {
    throw Error(ErrorCode::InvalidArgument, "horizon needs r >= eps > 0");
  }
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be > 0");
  if (!gamma_of) throw Error(ErrorCode::InvalidArgument, "gamma_of callback is empty");
  HorizonTrace tr;
  const double a_r = eval(alpha, r);
  tr.psi_r = invert(rho, a_r);
  tr.r_tilde = a_r + eval(rho, tr.psi_r);
  tr.eps_tilde = invert(alpha, eps);
  const double target = tr.eps_tilde / 2.0;

  auto below = [&](double t) { return beta(tr.r_tilde, t) < target; };
  double lo = 0.0;
  double hi = 0.0;
  if (!below(0.0)) {
    hi = 1.0;
    while (!below(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > t_max) {
        throw Error(ErrorCode::HorizonUnbounded,
                    "beta(r~, t) stays above eps~/2 up to t = " + std::to_string(t_max));
      }
    }
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (below(mid) ? hi : lo) = mid;
    }
  }
  tr.T_tilde = hi;
  tr.eta = target;
  tr.gamma = gamma_of(tr.r_tilde, tr.eta, tr.T_tilde);
  if (!(tr.gamma > 0.0) || !std::isfinite(tr.gamma)) {
    throw Error(ErrorCode::ZeroGain, "gamma_of returned a non-positive modulus");
  }
  const double ratio = std::ceil(tr.psi_r / tr.gamma);
  if (!(ratio < 9.0e18)) throw Error(ErrorCode::HorizonUnbounded, "N overflows");
  tr.N = static_cast<std::int64_t>(ratio);
  tr.T = static_cast<double>(tr.N) * tr.T_tilde;
  return tr;
}

}  // namespace iiss
