#include "chainrisk/specfun.hpp"

#include <array>
#include <limits>
#include <numbers>
#include <string>

namespace chainrisk {

QuadratureSpec QuadratureSpec::rectangular(int intervals) {
    QuadratureSpec spec{QuadratureScheme::RectangularMidpoint, intervals, 1e-10};
    spec.validate();
    return spec;
}

QuadratureSpec QuadratureSpec::adaptive(double tolerance) {
    QuadratureSpec spec{QuadratureScheme::AdaptiveOracle, 1, tolerance};
    spec.validate();
    return spec;
}

void QuadratureSpec::validate() const {
    if (intervals < 1) throw DomainError("QuadratureSpec: intervals must be >= 1");
    if (!(tolerance > 0.0)) throw DomainError("QuadratureSpec: tolerance must be > 0");
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw DomainError("log_gamma: argument must be positive and finite, got " +
                          std::to_string(x));
    static constexpr std::array<double, 9> kCoef = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    constexpr double g = 7.0;

    // Reflection keeps the series in its accurate range.
    if (x < 0.5) {
        return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) -
               log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double series = kCoef[0];
    for (std::size_t i = 1; i < kCoef.size(); ++i) series += kCoef[i] / (z + static_cast<double>(i));
    const double t = z + g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(series);
}

namespace {

// Continued fraction for I_w(u, v), modified Lentz. Converges fast for w < (u+1)/(u+v+2).
double beta_continued_fraction(double w, double u, double v) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = u + v;
    const double qap = u + 1.0;
    const double qam = u - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * w / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (v - m) * w / ((qam + m2) * (u + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(u + m) * (qab + m) * w / ((u + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw ConvergenceError("reg_inc_beta: continued fraction did not converge", 0.0, kMaxIter);
}

}  // namespace

double reg_inc_beta(double w, double u, double v) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("reg_inc_beta: w must lie in [0, 1]");
    if (!(u > 0.0) || !(v > 0.0)) throw DomainError("reg_inc_beta: u and v must be positive");
    if (w == 0.0) return 0.0;
    if (w == 1.0) return 1.0;

    const double log_front = log_gamma(u + v) - log_gamma(u) - log_gamma(v) + u * std::log(w) +
                             v * std::log1p(-w);
    const double front = std::exp(log_front);
    if (w < (u + 1.0) / (u + v + 2.0)) {
        return front * beta_continued_fraction(w, u, v) / u;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - w, v, u) / v;
}

namespace {

double simpson_step(const Integrand& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tolerance, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tolerance, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tolerance, depth - 1);
}

}  // namespace

double adaptive_simpson(const Integrand& f, double lo, double hi, double tolerance, int max_depth) {
    if (lo == hi) return 0.0;
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, lo, hi, fa, fm, fb, whole, tolerance, max_depth);
}

double integrate(const Integrand& f, double lo, double hi, const QuadratureSpec& spec) {
    spec.validate();
    if (!(lo <= hi)) throw DomainError("integrate: lower limit exceeds upper limit");
    switch (spec.scheme) {
        case QuadratureScheme::RectangularMidpoint:
            return midpoint_rule(f, lo, hi, spec.intervals);
        case QuadratureScheme::AdaptiveOracle:
            return adaptive_simpson(f, lo, hi, spec.tolerance);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace chainrisk
