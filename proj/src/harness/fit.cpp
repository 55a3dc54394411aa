#include "coweave/harness/fit.hpp"

#include <cmath>

#include "coweave/core/error.hpp"

namespace coweave {

rate_fit fit_rate(const std::vector<rate_point>& points) {
    if (points.size() < 3)
        throw config_error("fit_rate: need at least 3 points, got " +
                           std::to_string(points.size()));
    rate_fit out;
    bool all_zero = true;
    bool any_nonpositive = false;
    bool any_zero_stderr = false;
    for (const rate_point& p : points) {
        if (!(p.n > 0.0) || !std::isfinite(p.n))
            throw config_error("fit_rate: sweep sizes must be positive and finite");
        if (!std::isfinite(p.error) || !std::isfinite(p.stderr_) || p.stderr_ < 0.0)
            throw config_error("fit_rate: errors and standard errors must be finite, stderr >= 0");
        if (p.error > 0.0) all_zero = false;
        if (p.error <= 0.0) any_nonpositive = true;
        if (p.stderr_ == 0.0) any_zero_stderr = true;
    }
    if (any_nonpositive) {
        out.degenerate = true;
        out.reason = all_zero ? "degenerate: zero error" : "degenerate: nonpositive error";
        return out;
    }

    out.points.reserve(points.size());
    for (const rate_point& p : points) {
        fit_point f;
        f.log_n = std::log(p.n);
        f.log_error = std::log(p.error);
        f.weight = any_zero_stderr ? 1.0 : 1.0 / (p.stderr_ * p.stderr_);
        out.points.push_back(f);
    }

    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const fit_point& f : out.points) {
        sw += f.weight;
        sx += f.weight * f.log_n;
        sy += f.weight * f.log_error;
        sxx += f.weight * f.log_n * f.log_n;
        sxy += f.weight * f.log_n * f.log_error;
    }
    const double denom = sw * sxx - sx * sx;
    if (!(denom > 0.0)) {
        out.degenerate = true;
        out.reason = "degenerate: sweep sizes coincide";
        out.points.clear();
        return out;
    }
    out.slope = (sw * sxy - sx * sy) / denom;
    out.intercept = (sy - out.slope * sx) / sw;

    const double mean_y = sy / sw;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const fit_point& f : out.points) {
        const double fitted = out.intercept + out.slope * f.log_n;
        ss_res += f.weight * (f.log_error - fitted) * (f.log_error - fitted);
        ss_tot += f.weight * (f.log_error - mean_y) * (f.log_error - mean_y);
    }
    if (ss_tot > 0.0) {
        out.r2 = 1.0 - ss_res / ss_tot;
        if (out.r2 < 0.0) out.r2 = 0.0;
        if (out.r2 > 1.0) out.r2 = 1.0;
    } else {
        out.r2 = ss_res <= 1e-24 ? 1.0 : 0.0;
    }
    // Residual-scaled slope variance: robust to weights that are not true
    // inverse variances (including the uniform fallback); exact fits get 0.
    const double dof = static_cast<double>(out.points.size()) - 2.0;
    const double s2 = dof > 0.0 ? ss_res / dof : 0.0;
    out.slope_stderr = std::sqrt(s2 * sw / denom);
    return out;
}

}  // namespace coweave
