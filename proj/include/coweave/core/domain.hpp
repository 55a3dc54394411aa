// State-space geometry: d-dimensional Euclidean space or the flat torus
// [0, 2*pi)^d. Provides canonical reduction and the metric used by every
// distance computation in the library.
#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

enum class geometry { euclidean, torus };

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct domain {
  geometry geom = geometry::euclidean;
  int dim = 1;

  // Reduce a single coordinate to the canonical torus window [0, 2*pi).
  // Idempotent exactly: a value already in [0, 2*pi) is returned bit-for-bit.
  static double reduce_coord(double x) {
    if (x >= 0.0 && x < kTwoPi) return x;
    double y = x - kTwoPi * std::floor(x / kTwoPi);
    // Rounding can land exactly on 2*pi (tiny negative inputs) or below 0.
    if (y >= kTwoPi) y -= kTwoPi;
    if (y < 0.0) y = 0.0;
    return y;
  }

  void reduce(double* x) const {
    if (geom != geometry::torus) return;
    for (int k = 0; k < dim; ++k) x[k] = reduce_coord(x[k]);
  }

  // Geodesic distance per coordinate; Euclidean norm across coordinates.
  double distance(const double* x, const double* y) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      double diff = std::fabs(x[k] - y[k]);
      if (geom == geometry::torus) {
        diff = std::fmod(diff, kTwoPi);
        if (diff > kTwoPi / 2.0) diff = kTwoPi - diff;
      }
      s += diff * diff;
    }
    return std::sqrt(s);
  }

  static domain parse(const std::string& name, int dim) {
    if (dim < 1) throw config_error("domain: dim must be >= 1, got " + std::to_string(dim));
    if (name == "euclidean") return domain{geometry::euclidean, dim};
    if (name == "torus") return domain{geometry::torus, dim};
    throw config_error("domain: unknown geometry '" + name + "' (expected 'euclidean' or 'torus')");
  }

  std::string name() const { return geom == geometry::torus ? "torus" : "euclidean"; }
};

}  // namespace coweave
