// Uniform time grid for the explicit Euler-Maruyama integrators.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "coweave/core/error.hpp"

namespace coweave {

struct time_grid {
  double t_end = 1.0;
  double dt = 1e-3;
  std::int64_t n_steps = 1000;

  // Build a grid from (t_end, dt); n_steps must reproduce t_end to 1e-12
  // relative accuracy so snapshot times are well-defined.
  static time_grid make(double t_end, double dt) {
    if (!(dt > 0.0)) throw config_error("time: dt must be > 0");
    if (!(t_end > 0.0)) throw config_error("time: t_end must be > 0");
    const double steps_real = t_end / dt;
    const std::int64_t n = static_cast<std::int64_t>(std::llround(steps_real));
    if (n < 1 || std::fabs(static_cast<double>(n) * dt - t_end) > 1e-12 * std::fmax(1.0, std::fabs(t_end))) {
      throw config_error("time: t_end (" + std::to_string(t_end) + ") is not an integer multiple of dt (" +
                         std::to_string(dt) + ")");
    }
    return time_grid{t_end, dt, n};
  }

  double time_at(std::int64_t step) const { return static_cast<double>(step) * dt; }

  // Nearest grid step for a requested snapshot time (validated to 1e-9).
  std::int64_t step_of(double t) const {
    const std::int64_t s = static_cast<std::int64_t>(std::llround(t / dt));
    if (s < 0 || s > n_steps || std::fabs(time_at(s) - t) > 1e-9 * std::fmax(1.0, std::fabs(t))) {
      throw config_error("time: snapshot time " + std::to_string(t) + " is not on the grid");
    }
    return s;
  }
};

}  // namespace coweave
