#pragma once

// Paired and Welch t-tests and the 2x2 factorial ANOVA. p-values come from
// the regularized incomplete beta function; no statistics library involved.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rsl/error.hpp"

namespace rsl::stats {

namespace detail {

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0 && b > 0)) fail(ErrorCode::InvalidArgument, "incomplete_beta needs a, b > 0");
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double t_two_tailed_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// P(F >= f) for the F distribution.
inline double f_upper_p(double f, double df1, double df2) {
    if (f <= 0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

/// Two-sided critical value: t with P(|T| >= t) = alpha, by bisection.
inline double t_critical(double df, double alpha = 0.05) {
    double lo = 0.0, hi = 1.0;
    while (t_two_tailed_p(hi, df) > alpha) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (t_two_tailed_p(mid, df) > alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Sample variance (n - 1 denominator), two-pass.
inline double variance(std::span<const double> x) {
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return ss / static_cast<double>(x.size() - 1);
}

struct TTest {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double mean_difference = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Paired-sample t-test on a - b.
inline TTest paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "paired samples differ in length");
    if (a.size() < 2) fail(ErrorCode::InsufficientData, "paired t-test needs at least 2 pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    if (std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); }))
        fail(ErrorCode::DegenerateVariance, "all paired differences are equal");
    const double n = static_cast<double>(d.size());
    const double m = mean(d);
    const double se = std::sqrt(variance(d) / n);
    TTest r;
    r.df = n - 1.0;
    r.t = m / se;
    r.p = t_two_tailed_p(r.t, r.df);
    r.mean_difference = m;
    const double half = t_critical(r.df) * se;
    r.ci_low = m - half;
    r.ci_high = m + half;
    return r;
}

/// Welch's unequal-variance t-test on mean(a) - mean(b).
inline TTest welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) fail(ErrorCode::InsufficientData, "Welch t-test needs at least 2 per sample");
    const double va = variance(a), vb = variance(b);
    if (!(va > 0) || !(vb > 0)) fail(ErrorCode::DegenerateVariance, "Welch t-test needs nonzero variance in both samples");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ra = va / na, rb = vb / nb;
    const double se = std::sqrt(ra + rb);
    TTest r;
    r.mean_difference = mean(a) - mean(b);
    r.t = r.mean_difference / se;
    r.df = (ra + rb) * (ra + rb) / (ra * ra / (na - 1.0) + rb * rb / (nb - 1.0));
    r.p = t_two_tailed_p(r.t, r.df);
    const double half = t_critical(r.df) * se;
    r.ci_low = r.mean_difference - half;
    r.ci_high = r.mean_difference + half;
    return r;
}

struct LeastSquares {
    std::vector<double> coefficients;
    double rss = 0.0;
};

/// Least squares by Householder QR. `columns` holds the design matrix
/// column by column.
inline LeastSquares least_squares(std::vector<std::vector<double>> columns, std::vector<double> y) {
    const std::size_t n = y.size();
    const std::size_t p = columns.size();
    if (p == 0 || n <= p) fail(ErrorCode::RankDeficient, "need more observations than model terms");
    double scale = 0.0;
    for (const auto& c : columns) {
        if (c.size() != n) fail(ErrorCode::InvalidArgument, "design column length mismatch");
        for (double v : c) scale = std::max(scale, std::abs(v));
    }
    for (std::size_t k = 0; k < p; ++k) {
        auto& ck = columns[k];
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += ck[i] * ck[i];
        norm = std::sqrt(norm);
        if (norm <= 1e-10 * std::max(scale, 1.0) * std::sqrt(static_cast<double>(n)))
            fail(ErrorCode::RankDeficient, "design matrix is rank deficient");
        const double alpha = ck[k] > 0 ? -norm : norm;
        std::vector<double> v(n, 0.0);
        for (std::size_t i = k; i < n; ++i) v[i] = ck[i];
        v[k] -= alpha;
        double vv = 0.0;
        for (std::size_t i = k; i < n; ++i) vv += v[i] * v[i];
        auto reflect = [&](std::vector<double>& target) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i] * target[i];
            const double f = 2.0 * dot / vv;
            for (std::size_t i = k; i < n; ++i) target[i] -= f * v[i];
        };
        for (std::size_t j = k; j < p; ++j) reflect(columns[j]);
        reflect(y);
    }
    LeastSquares out;
    out.coefficients.assign(p, 0.0);
    for (std::size_t k = p; k-- > 0;) {
        double s = y[k];
        for (std::size_t j = k + 1; j < p; ++j) s -= columns[j][k] * out.coefficients[j];
        out.coefficients[k] = s / columns[k][k];
    }
    for (std::size_t i = p; i < n; ++i) out.rss += y[i] * y[i];
    return out;
}

struct AnovaTerm {
    std::string name;
    double sum_of_squares = 0.0;
    double df = 1.0;
    double f = 0.0;
    double p = 1.0;
    double coefficient = 0.0;  // effect-coded estimate
};

struct Anova {
    std::vector<AnovaTerm> terms;
    double residual_ss = 0.0;
    double residual_df = 0.0;
    double intercept = 0.0;
};

/// Two-factor ANOVA with Type-III sums of squares on an effect-coded design
/// (level true -> +1, false -> -1). Each term's SS is the residual increase
/// when its column is dropped from the full model.
inline Anova anova_2x2(std::span<const double> response, std::span<const bool> factor_a,
                       std::span<const bool> factor_b, bool with_interaction, std::string name_a = "a",
                       std::string name_b = "b") {
    const std::size_t n = response.size();
    if (factor_a.size() != n || factor_b.size() != n) fail(ErrorCode::InvalidArgument, "factor length mismatch");
    std::array<int, 4> cells{};
    for (std::size_t i = 0; i < n; ++i) ++cells[(factor_a[i] ? 2 : 0) + (factor_b[i] ? 1 : 0)];
    for (int c : cells)
        if (c == 0) fail(ErrorCode::EmptyCell, "every cell of the 2x2 design needs an observation");

    std::vector<std::vector<double>> cols(with_interaction ? 4 : 3, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const double ea = factor_a[i] ? 1.0 : -1.0;
        const double eb = factor_b[i] ? 1.0 : -1.0;
        cols[0][i] = 1.0;
        cols[1][i] = ea;
        cols[2][i] = eb;
        if (with_interaction) cols[3][i] = ea * eb;
    }
    std::vector<double> y(response.begin(), response.end());
    const LeastSquares full = least_squares(cols, y);

    double yy = 0.0;
    for (double v : y) yy += v * v;
    const double negligible = 1e-20 * std::max(yy, 1.0);

    Anova out;
    out.intercept = full.coefficients[0];
    out.residual_df = static_cast<double>(n - cols.size());
    out.residual_ss = full.rss <= negligible ? 0.0 : full.rss;
    const std::vector<std::string> names{name_a, name_b, name_a + ":" + name_b};
    for (std::size_t k = 1; k < cols.size(); ++k) {
        auto reduced = cols;
        reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(k));
        const LeastSquares r = least_squares(reduced, y);
        AnovaTerm term;
        term.name = names[k - 1];
        term.coefficient = full.coefficients[k];
        term.sum_of_squares = std::max(0.0, r.rss - full.rss);
        if (term.sum_of_squares <= negligible) term.sum_of_squares = 0.0;
        if (term.sum_of_squares == 0.0) {
            term.f = 0.0;
        } else if (out.residual_ss == 0.0) {
            term.f = std::numeric_limits<double>::infinity();
        } else {
            term.f = term.sum_of_squares / (out.residual_ss / out.residual_df);
        }
        term.p = f_upper_p(term.f, 1.0, out.residual_df);
        out.terms.push_back(std::move(term));
    }
    return out;
}

}  // namespace rsl::stats
