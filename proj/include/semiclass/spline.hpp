#pragma once

#include <gsl/gsl_interp.h>
#include <gsl/gsl_spline.h>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace semiclass {

/// Periodic cubic spline on equally spaced nodes over one period; the
/// analytic spline derivative supplies off-node gradients.
class PeriodicSpline {
  public:
    PeriodicSpline(const std::vector<double>& nodes, const std::vector<double>& values,
                   double period)
        : x0_(nodes.at(0)), period_(period) {
        if (nodes.size() != values.size() || nodes.size() < 4) {
            throw std::invalid_argument("PeriodicSpline: need >= 4 matching nodes");
        }
        const size_t n = nodes.size();
        xs_.assign(nodes.begin(), nodes.end());
        ys_.assign(values.begin(), values.end());
        xs_.push_back(nodes[0] + period);
        ys_.push_back(values[0]);  // periodic closure
        acc_ = gsl_interp_accel_alloc();
        spline_ = gsl_spline_alloc(gsl_interp_cspline_periodic, n + 1);
        gsl_spline_init(spline_, xs_.data(), ys_.data(), n + 1);
    }
    ~PeriodicSpline() {
        gsl_spline_free(spline_);
        gsl_interp_accel_free(acc_);
    }
    PeriodicSpline(const PeriodicSpline&) = delete;
    PeriodicSpline& operator=(const PeriodicSpline&) = delete;

    double reduce(double x) const {
        double u = std::fmod(x - x0_, period_);
        if (u < 0) u += period_;
        return x0_ + u;
    }
    double value(double x) const { return gsl_spline_eval(spline_, reduce(x), acc_); }
    double deriv(double x) const { return gsl_spline_eval_deriv(spline_, reduce(x), acc_); }

  private:
    double x0_;
    double period_;
    std::vector<double> xs_, ys_;
    gsl_interp_accel* acc_ = nullptr;
    gsl_spline* spline_ = nullptr;
};

}  // namespace semiclass
