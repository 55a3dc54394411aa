// Coefficient functions for the coupled state/weight dynamics:
//   state drift mu : D -> R^d,
//   pair interaction sigma : D x D -> R^d (componentwise),
//   weight growth alpha(x,y) = alpha1(x) * alpha2(y) (separable by contract),
//   weight forcing beta : D x D -> R,
//   diffusion strength nu >= 0.
//
// Each function carries a structure tag. Simulation hot loops dispatch on the
// tag to closed-form fast paths (precomputed per-entity trigonometry with
// fixed-lane accumulation); the generic std::function path evaluates pair
// terms in strictly ascending index order. The two paths use different
// (each deterministic) associations, so they agree to rounding accuracy,
// not bit-for-bit; any one coefficient set always takes one path.
//
// Every set declares sup/Lipschitz bounds. Lipschitz constants use the
// per-component convention: max over output components of the best constant
// w.r.t. the sum |x-x'| + |y-y'| of per-argument Euclidean norms.
#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "coweave/core/error.hpp"

namespace coweave {

enum class kernel_tag {
  zero,          // identically 0
  constant,      // scalar value, ignores arguments
  sine_diff,     // scale * sin(y_k - x_k) componentwise
  cosine_diff,   // scale * mean_k cos(y_k - x_k) (scalar kernels)
  linear_clip,   // -x clipped to the ball of radius `clip` (drift only)
  custom,        // arbitrary std::function
};

// Scalar function of one state, e.g. the separable weight-growth factors.
struct scalar_field {
  kernel_tag tag = kernel_tag::zero;
  double value = 0.0;  // constant tag
  std::function<double(const double* x, int d)> fn;

  double operator()(const double* x, int d) const {
    switch (tag) {
      case kernel_tag::zero: return 0.0;
      case kernel_tag::constant: return value;
      default: return fn(x, d);
    }
  }
};

// Vector-valued drift mu : D -> R^d.
struct drift_field {
  kernel_tag tag = kernel_tag::zero;
  double clip = 0.0;  // linear_clip radius
  std::function<void(const double* x, int d, double* out)> fn;

  void eval(const double* x, int d, double* out) const;
};

// Componentwise pair interaction sigma : D x D -> R^d.
struct pair_interaction {
  kernel_tag tag = kernel_tag::zero;
  double scale = 0.0;  // sine_diff amplitude
  std::function<void(const double* x, const double* y, int d, double* out)> fn;

  void eval(const double* x, const double* y, int d, double* out) const;
};

// Scalar pair kernel beta : D x D -> R.
struct pair_scalar {
  kernel_tag tag = kernel_tag::zero;
  double value = 0.0;  // constant value or cosine_diff amplitude
  std::function<double(const double* x, const double* y, int d)> fn;

  double operator()(const double* x, const double* y, int d) const;
};

// Declared sup/Lipschitz bounds; must dominate the actual functions
// (property-tested on sampled grids).
struct coefficient_bounds {
  double mu_sup = 0.0;
  double mu_lip = 0.0;
  double sigma_sup = 0.0;
  double sigma_lip = 0.0;
  double alpha_sup = 0.0;
  double alpha_lip = 0.0;
  double alpha1_sup = 0.0;
  double alpha2_sup = 0.0;
  double beta_sup = 0.0;
  double beta_lip = 0.0;
};

struct coefficient_set {
  std::string name = "zero";
  drift_field mu;
  pair_interaction sigma;
  scalar_field alpha1;
  scalar_field alpha2;
  pair_scalar beta;
  double nu = 0.0;
  coefficient_bounds bounds;

  double alpha(const double* x, const double* y, int d) const {
    return alpha1(x, d) * alpha2(y, d);
  }
};

// Preset registry. Known names: "zero", "linear-decay", "kuramoto-adaptive".
// kuramoto-adaptive takes the weight-decay rate `a` (alpha = -a); the
// diffusion strength nu is set by the caller/config for every preset.
coefficient_set lookup_coefficients(const std::string& name, double a = 1.0);

// Names accepted by lookup_coefficients, for error messages and --help.
std::vector<std::string> coefficient_preset_names();

}  // namespace coweave
