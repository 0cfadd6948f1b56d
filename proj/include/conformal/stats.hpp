#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace conformal {

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        double m2 = 2.0 * m;
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
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b), evaluated by Lentz's continued
/// fraction with the usual symmetry switch for convergence.
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                      b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Student-t CDF with `df` degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw std::invalid_argument("student_t_cdf needs df > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    double x = df / (df + t * t);
    double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Welch's unequal-variance t test, one-sided against H1: mean(a) < mean(b).
/// Degrees of freedom by Welch-Satterthwaite; the p-value is the lower tail
/// of the t distribution at the observed statistic.
struct WelchResult {
    double mean_a = 0.0, mean_b = 0.0;
    double sd_a = 0.0, sd_b = 0.0;
    double t = 0.0;
    double df = 1.0;
    double p_one_sided = 0.5;
    bool reject = false;  // at the configured significance
};

inline WelchResult welch_one_sided_less(std::span<const double> a, std::span<const double> b,
                                        double significance = 0.01) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch test needs at least 2 samples per side");
    auto moments = [](std::span<const double> v, double& mean, double& var) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size() - 1);
    };
    WelchResult r;
    double var_a = 0.0, var_b = 0.0;
    moments(a, r.mean_a, var_a);
    moments(b, r.mean_b, var_b);
    r.sd_a = std::sqrt(var_a);
    r.sd_b = std::sqrt(var_b);

    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double sa = var_a / na, sb = var_b / nb;
    double se2 = sa + sb;
    if (se2 == 0.0) {
        // Degenerate: both samples constant.
        r.t = r.mean_a == r.mean_b ? 0.0
              : (r.mean_a < r.mean_b ? -std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::infinity());
        r.df = na + nb - 2.0;
        r.p_one_sided = r.t == 0.0 ? 0.5 : (r.t < 0 ? 0.0 : 1.0);
    } else {
        r.t = (r.mean_a - r.mean_b) / std::sqrt(se2);
        r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
        r.p_one_sided = student_t_cdf(r.t, r.df);
    }
    r.reject = r.p_one_sided < significance;
    return r;
}

}  // namespace conformal
