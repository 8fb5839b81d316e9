#pragma once

#include <cmath>
#include <functional>

#include "chainrisk/error.hpp"

namespace chainrisk {

enum class QuadratureScheme { RectangularMidpoint, AdaptiveOracle };

/// How `integrate` evaluates a definite integral.
///
/// RectangularMidpoint is the production rule used throughout the model.
/// AdaptiveOracle (adaptive Simpson) exists to verify it.
struct QuadratureSpec {
    QuadratureScheme scheme = QuadratureScheme::RectangularMidpoint;
    int intervals = 100;
    double tolerance = 1e-10;

    static QuadratureSpec rectangular(int intervals);
    static QuadratureSpec adaptive(double tolerance);

    /// Throws DomainError if intervals < 1 or tolerance <= 0.
    void validate() const;
};

inline constexpr int kDefaultIntervals = 100;
inline constexpr int kAdaptiveMaxDepth = 50;

/// ln Gamma(x) for x > 0 (Lanczos, g = 7).
double log_gamma(double x);

/// Regularized incomplete Beta function I_w(u, v).
///
/// Evaluated with the modified Lentz continued fraction, switching to
/// 1 - I_{1-w}(v, u) when w >= (u + 1) / (u + v + 2). Exact at w = 0 and w = 1.
double reg_inc_beta(double w, double u, double v);

using Integrand = std::function<double(double)>;

/// Definite integral of f over [lo, hi].
///
/// The midpoint rule is sum f(lo + (k + 1/2) d) * d with d = (hi - lo) / intervals,
/// summed left to right so results are bit-reproducible.
double integrate(const Integrand& f, double lo, double hi, const QuadratureSpec& spec);

/// Midpoint rule without the std::function indirection.
template <typename F>
double midpoint_rule(F&& f, double lo, double hi, int intervals) {
    const double step = (hi - lo) / intervals;
    double sum = 0.0;
    for (int k = 0; k < intervals; ++k) sum += f(lo + (k + 0.5) * step);
    return sum * step;
}

double adaptive_simpson(const Integrand& f, double lo, double hi, double tolerance,
                        int max_depth = kAdaptiveMaxDepth);

}  // namespace chainrisk
