#pragma once

// Convergence-rate fitting: weighted least squares of log(error) against
// log(N).  Mean errors with Monte Carlo standard errors come in; a slope
// (the empirical rate), intercept, r^2, and slope standard error come out.
// The (log N, log error, weight) points are retained so the fit can be
// recomputed from the report alone.

#include <string>
#include <vector>

namespace coweave {

struct rate_point {
    double n = 0.0;       // sweep size (> 0)
    double error = 0.0;   // mean error at that size
    double stderr_ = 0.0; // Monte Carlo standard error (>= 0; 0 => exact)
};

struct fit_point {
    double log_n = 0.0;
    double log_error = 0.0;
    double weight = 1.0;  // 1/stderr^2, or 1.0 when any stderr is 0
};

struct rate_fit {
    bool degenerate = false;  // fit skipped; `reason` says why
    std::string reason;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;          // in [0, 1]
    double slope_stderr = 0.0;
    std::vector<fit_point> points;
};

// Weighted least squares on (log n, log error) with weights 1/stderr^2.
// If any point has stderr 0 the weights fall back to uniform (a zero
// standard error would dominate every other point).  Fewer than 3 points
// is a config_error; a nonpositive error yields a degenerate report
// ("degenerate: zero error" when every error is 0) instead of a fit.
rate_fit fit_rate(const std::vector<rate_point>& points);

}  // namespace coweave
