#pragma once

// Statistical kernel: special functions, paired t-test, Pearson correlation
// with exact two-tailed p-values, and the Bonferroni significance tiers used
// in the session tables.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/error.hpp"

namespace entrain::stats {

struct TestResult {
    double statistic = 0.0;  // t for the paired test, r for Pearson
    double df_or_n = 0.0;    // degrees of freedom (t-test) or sample count (Pearson)
    double p_two_tailed = 1.0;
};

enum class Tier { star, plus, none };

inline std::string_view tier_symbol(Tier tier) noexcept {
    switch (tier) {
    case Tier::star:
        return "*";
    case Tier::plus:
        return "+";
    case Tier::none:
        break;
    }
    return "";
}

// ln Gamma(x) for x > 0. Lanczos approximation with Godfrey's g = 607/128
// coefficients; arguments below 1/2 are shifted up by one first.
inline double ln_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::invalid_argument("ln_gamma: argument must be positive and finite");
    }
    if (x < 0.5) {
        return ln_gamma(x + 1.0) - std::log(x);
    }
    static constexpr std::array<double, 14> cof = {
        57.1562356658629235,     -59.5979603554754912,    14.1360979747417471,
        -0.491913816097620199,   .339946499848118887e-4,  .465236289270485756e-4,
        -.983744753048795646e-4, .158088703224912494e-3,  -.210264441724104883e-3,
        .217439618115212643e-3,  -.164318106536763890e-3, .844182239838527433e-4,
        -.261908384015814087e-4, .368991826595316234e-5};
    double y = x;
    double tmp = x + 5.24218750000000000;
    tmp = (x + 0.5) * std::log(tmp) - tmp;
    double ser = 0.999999999999997092;
    for (double c : cof) {
        ser += c / ++y;
    }
    return tmp + std::log(2.5066282746310005 * ser / x);
}

namespace detail {

// Continued fraction for I_x(a, b), evaluated with the modified Lentz method.
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 100000;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double tiny = std::numeric_limits<double>::min() / eps;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) <= eps) {
            return h;
        }
    }
    throw std::runtime_error("incomplete beta: continued fraction did not converge");
}

// I_x(a, b) with the complement y = 1 - x supplied by the caller, so that
// arguments close to 1 keep full relative precision.
inline double incomplete_beta(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log(y) - ln_gamma(a) - ln_gamma(b) +
                             ln_gamma(a + b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, y) / b;
}

inline bool all_equal(std::span<const double> values) {
    return std::adjacent_find(values.begin(), values.end(), std::not_equal_to<>{}) ==
           values.end();
}

inline double mean(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

} // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("regularized_incomplete_beta: a and b must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("regularized_incomplete_beta: x must lie in [0, 1]");
    }
    return detail::incomplete_beta(a, b, x, 1.0 - x);
}

// Two-tailed p-value of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_p_two_tailed(double t, double df) {
    if (!(df >= 1.0) || !std::isfinite(df)) {
        throw std::invalid_argument("student_t_p_two_tailed: df must be >= 1");
    }
    if (std::isnan(t)) {
        throw std::invalid_argument("student_t_p_two_tailed: t is NaN");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    const double t2 = t * t;
    const double x = df / (df + t2);
    const double y = t2 / (df + t2);
    return std::clamp(detail::incomplete_beta(0.5 * df, 0.5, x, y), 0.0, 1.0);
}

// Paired t-test on d = xs - ys: t = mean(d) / (sd(d) / sqrt(n)), df = n - 1.
inline TestResult paired_t_test(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("paired_t_test: length mismatch");
    }
    const std::size_t n = xs.size();
    if (n < 2) {
        throw std::invalid_argument("paired_t_test: need at least 2 pairs");
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = xs[i] - ys[i];
    }
    if (detail::all_equal(d)) {
        throw DegenerateError("degenerate: constant differences");
    }
    const double m = detail::mean(d);
    double ss = 0.0;
    for (double v : d) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
        throw DegenerateError("degenerate: constant differences");
    }
    const double t = m / (sd / std::sqrt(static_cast<double>(n)));
    const double df = static_cast<double>(n - 1);
    return {t, df, student_t_p_two_tailed(t, df)};
}

// Pearson product-moment correlation; p from t = r sqrt((n-2)/(1-r^2)) with
// n - 2 degrees of freedom. |r| = 1 yields p = 0.
inline TestResult pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("pearson: length mismatch");
    }
    const std::size_t n = xs.size();
    if (n < 3) {
        throw std::invalid_argument("pearson: need at least 3 pairs");
    }
    if (detail::all_equal(xs) || detail::all_equal(ys)) {
        throw DegenerateError("degenerate: constant series");
    }
    const double mx = detail::mean(xs);
    const double my = detail::mean(ys);
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw DegenerateError("degenerate: constant series");
    }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double size = static_cast<double>(n);
    if (std::abs(r) == 1.0) {
        return {r, size, 0.0};
    }
    // df / (df + t^2) simplifies to 1 - r^2.
    const double x = (1.0 - r) * (1.0 + r);
    const double p = detail::incomplete_beta(0.5 * (size - 2.0), 0.5, x, r * r);
    return {r, size, std::clamp(p, 0.0, 1.0)};
}

inline double bonferroni_threshold(double alpha, std::size_t m) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("bonferroni_threshold: alpha must lie in (0, 1)");
    }
    if (m < 1) {
        throw std::invalid_argument("bonferroni_threshold: m must be >= 1");
    }
    return alpha / static_cast<double>(m);
}

// star: p < alpha/m; plus: alpha/m <= p < alpha; none otherwise.
inline Tier classify_significance(double p, double alpha, std::size_t m) {
    if (p < bonferroni_threshold(alpha, m)) return Tier::star;
    if (p < alpha) return Tier::plus;
    return Tier::none;
}

} // namespace entrain::stats
