#include "coweave/core/coefficients.hpp"

namespace coweave {

void drift_field::eval(const double* x, int d, double* out) const {
  switch (tag) {
    case kernel_tag::zero:
      for (int k = 0; k < d; ++k) out[k] = 0.0;
      return;
    case kernel_tag::linear_clip: {
      double norm2 = 0.0;
      for (int k = 0; k < d; ++k) norm2 += x[k] * x[k];
      const double norm = std::sqrt(norm2);
      const double factor = (norm <= clip || norm == 0.0) ? 1.0 : clip / norm;
      for (int k = 0; k < d; ++k) out[k] = -factor * x[k];
      return;
    }
    default:
      fn(x, d, out);
      return;
  }
}

void pair_interaction::eval(const double* x, const double* y, int d, double* out) const {
  switch (tag) {
    case kernel_tag::zero:
      for (int k = 0; k < d; ++k) out[k] = 0.0;
      return;
    case kernel_tag::sine_diff:
      for (int k = 0; k < d; ++k) out[k] = scale * std::sin(y[k] - x[k]);
      return;
    default:
      fn(x, y, d, out);
      return;
  }
}

double pair_scalar::operator()(const double* x, const double* y, int d) const {
  switch (tag) {
    case kernel_tag::zero:
      return 0.0;
    case kernel_tag::constant:
      return value;
    case kernel_tag::cosine_diff: {
      double s = 0.0;
      for (int k = 0; k < d; ++k) s += std::cos(y[k] - x[k]);
      return value * s / static_cast<double>(d);
    }
    default:
      return fn(x, y, d);
  }
}

namespace {

coefficient_set make_zero() {
  coefficient_set c;
  c.name = "zero";
  return c;  // all tags default to zero, all bounds 0
}

coefficient_set make_linear_decay() {
  coefficient_set c;
  c.name = "linear-decay";
  c.mu.tag = kernel_tag::linear_clip;
  c.mu.clip = 10.0;
  c.bounds.mu_sup = 10.0;
  c.bounds.mu_lip = 1.0;
  return c;
}

coefficient_set make_kuramoto_adaptive(double a) {
  if (a < 0.0) throw config_error("kuramoto-adaptive: decay rate a must be >= 0");
  coefficient_set c;
  c.name = "kuramoto-adaptive";
  c.sigma.tag = kernel_tag::sine_diff;
  c.sigma.scale = 1.0;
  // alpha(x,y) = alpha1 * alpha2 = -a; split as (+sqrt(a)) * (-sqrt(a)) to
  // keep the product separable with a negative (decaying) total rate.
  c.alpha1.tag = kernel_tag::constant;
  c.alpha1.value = std::sqrt(a);
  c.alpha2.tag = kernel_tag::constant;
  c.alpha2.value = -std::sqrt(a);
  c.beta.tag = kernel_tag::cosine_diff;
  c.beta.value = 1.0;
  c.bounds.sigma_sup = 1.0;  // per d=1 component; vector norm is sqrt(d)*this
  c.bounds.sigma_lip = 1.0;
  c.bounds.alpha_sup = a;
  c.bounds.alpha_lip = 0.0;
  c.bounds.alpha1_sup = std::sqrt(a);
  c.bounds.alpha2_sup = std::sqrt(a);
  c.bounds.beta_sup = 1.0;
  c.bounds.beta_lip = 1.0;
  return c;
}

}  // namespace

coefficient_set lookup_coefficients(const std::string& name, double a) {
  if (name == "zero") return make_zero();
  if (name == "linear-decay") return make_linear_decay();
  if (name == "kuramoto-adaptive") return make_kuramoto_adaptive(a);
  std::string known;
  for (const auto& n : coefficient_preset_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw config_error("unknown coefficient preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> coefficient_preset_names() {
  return {"zero", "linear-decay", "kuramoto-adaptive"};
}

}  // namespace coweave
