#pragma once

#include <algorithm>
#include <numbers>

#include "cf/core.hpp"

namespace cf {

/*
 * Regularized incomplete beta function I_x(a,b), evaluated with the
 * Lentz-form continued fraction. For x past the pivot (a+1)/(a+b+2) the
 * symmetry I_x(a,b) = 1 - I_{1-x}(b,a) keeps the fraction convergent.
 * Absolute accuracy is well below 1e-10 over the parameter ranges used
 * here; failure to converge within 300 iterations is reported, not hidden.
 */
inline double reg_inc_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("beta parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("beta argument must lie in [0,1]");
    if (x == 0.0)
        return 0.0;
    if (x == 1.0)
        return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0))
        return 1.0 - reg_inc_beta(1.0 - x, b, a);

    const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta) / a;

    constexpr double tiny = 1e-30;
    constexpr double stop = 1e-15;
    double c = 1.0;
    double d = 0.0;
    double f = 1.0;
    for (int i = 0; i <= 300; ++i) {
        const int m = i / 2;
        double numerator;
        if (i == 0)
            numerator = 1.0;
        else if (i % 2 == 1)
            numerator = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        else
            numerator = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));

        d = 1.0 + numerator * d;
        if (std::abs(d) < tiny)
            d = tiny;
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if (std::abs(c) < tiny)
            c = tiny;
        const double cd = c * d;
        f *= cd;
        if (std::abs(1.0 - cd) < stop)
            return front * (f - 1.0);
    }
    throw std::runtime_error("reg_inc_beta: continued fraction did not converge");
}

/// Phi(a) = 1 - 1/|a|^2, defined for non-unit integer vectors (|a|^2 >= 2).
inline double phi_of_a(double a_norm_sq) {
    if (!(a_norm_sq >= 2.0))
        throw std::domain_error("phi_of_a needs |a|^2 >= 2 (non-unit vector)");
    return 1.0 - 1.0 / a_norm_sq;
}

enum class BoundKind {
    theorem3,
    corollary1,
    union_nonunit,
    sum_rate_upper,
    sum_rate_lower,
};

inline const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::theorem3: return "theorem3";
        case BoundKind::corollary1: return "corollary1";
        case BoundKind::union_nonunit: return "union_nonunit";
        case BoundKind::sum_rate_upper: return "sum_rate_upper";
        case BoundKind::sum_rate_lower: return "sum_rate_lower";
    }
    return "?";
}

/// A probability bound clamped to [0,1] (or a rate bound in bits), with the
/// unclamped value kept around for bound-quality plots.
struct BoundValue {
    double value;
    double raw;
    BoundKind kind;
};

// Decay exponents from the union-bound analysis. e3 appears only inside the
// sum-rate proof chain and drives no computation here.
inline double exponent_e1(int L, double a_norm) {
    return (1.0 - 3.0 / static_cast<double>(L)) * std::log(a_norm);
}
inline double exponent_e2(int L) {
    return 0.5 * (1.0 - 1.0 / static_cast<double>(L)) * std::numbers::ln2_v<double>;
}
inline double exponent_e3(int L) {
    return 0.25 * (1.0 - 1.0 / static_cast<double>(L)) * std::numbers::ln2_v<double>;
}

/// Pr(f(a) <= f(e_i)) <= 1 - I_{Phi(a)}(1/2, (L-1)/2) for non-unit a.
inline BoundValue bound_theorem3(double a_norm_sq, int L) {
    if (L < 2)
        throw std::domain_error("bound_theorem3 needs L >= 2");
    const double raw = 1.0 - reg_inc_beta(phi_of_a(a_norm_sq), 0.5, (L - 1) / 2.0);
    return BoundValue{std::clamp(raw, 0.0, 1.0), raw, BoundKind::theorem3};
}

/// Exponential simplification exp(-L E1(L)) = |a|^{-(L-3)}; needs L > 3 so
/// the exponent is positive.
inline BoundValue bound_corollary1(double a_norm_sq, int L) {
    if (L <= 3)
        throw std::domain_error("bound_corollary1 needs L >= 4");
    if (!(a_norm_sq >= 2.0))
        throw std::domain_error("bound_corollary1 needs |a|^2 >= 2 (non-unit vector)");
    const double raw = std::exp(-static_cast<double>(L) * exponent_e1(L, std::sqrt(a_norm_sq)));
    return BoundValue{std::clamp(raw, 0.0, 1.0), raw, BoundKind::corollary1};
}

/// CDF lower bound 1 - (1-alpha)^(floor(L/2)-1) for the squared cosine.
inline double bound_lemma3(double alpha, int L) {
    if (L < 4)
        throw std::domain_error("bound_lemma3 needs L >= 4");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::domain_error("bound_lemma3 needs alpha in [0,1]");
    return 1.0 - std::pow(1.0 - alpha, static_cast<double>(L / 2 - 1));
}

/// Union bound over the whole candidate set:
/// min(1, 2L(P|h|^2+3) (1/2)^{(L-1)/2-1}).
inline BoundValue union_bound_nonunit(int L, Power P, double h_norm_sq) {
    if (L < 4)
        throw std::domain_error("union_bound_nonunit needs L >= 4");
    const double raw = 2.0 * L * (P.value * h_norm_sq + 3.0) *
                       std::pow(0.5, (L - 1) / 2.0 - 1.0);
    return BoundValue{std::min(raw, 1.0), raw, BoundKind::union_nonunit};
}

/// Asymptotic form 4P L^2 exp(-L E2(L)) of the union bound.
inline double union_bound_nonunit_asymptotic(int L, Power P) {
    if (L < 4)
        throw std::domain_error("union_bound_nonunit_asymptotic needs L >= 4");
    return 4.0 * P.value * static_cast<double>(L) * L *
           std::exp(-static_cast<double>(L) * exponent_e2(L));
}

/// |A| <= 2L(ceil(sqrt(1+P|h|^2)) + 1): cap on the candidate-set size.
/// Takes the power as a plain value so the P = 0 limit stays expressible.
inline std::int64_t cardinality_bound(int L, double power, double h_norm_sq) {
    if (!std::isfinite(power) || power < 0.0)
        throw std::domain_error("cardinality_bound needs a finite power >= 0");
    const auto root = static_cast<std::int64_t>(std::ceil(std::sqrt(1.0 + power * h_norm_sq)));
    return 2LL * L * (root + 1);
}

/// Square-system sum-rate upper bound (1/(1+1/M)) log2 P + log2 log2 P,
/// valid for M >= 2 and P >= 3. Both logs are taken base 2, consistent with
/// rates in bits everywhere else.
inline BoundValue sum_rate_upper_bound(int M, Power P) {
    if (M < 2)
        throw std::domain_error("sum_rate_upper_bound needs M >= 2");
    if (P.value < 3.0)
        throw std::domain_error("sum_rate_upper_bound needs P >= 3");
    const double v = (1.0 / (1.0 + 1.0 / static_cast<double>(M))) * std::log2(P.value) +
                     std::log2(std::log2(P.value));
    return BoundValue{v, v, BoundKind::sum_rate_upper};
}

/// Interference-channel lower bound: relay m forced to a_m = e_m, all other
/// sources treated as noise; sum over the square M x M system of
/// (1/2) log2(1 + P h_mm^2 / (1 + P sum_{j!=m} h_mj^2)).
inline BoundValue sum_rate_lower_bound(const std::vector<ChannelVector>& channels, Power P) {
    const std::size_t M = channels.size();
    if (M == 0)
        throw std::invalid_argument("sum_rate_lower_bound needs at least one relay");
    double total = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        const ChannelVector& h = channels[m];
        if (h.size() != M)
            throw std::invalid_argument("sum_rate_lower_bound needs a square system (M channels of length M)");
        double interference = 0.0;
        for (std::size_t j = 0; j < M; ++j)
            if (j != m)
                interference += h[j] * h[j];
        total += 0.5 * std::log2(1.0 + P.value * h[m] * h[m] / (1.0 + P.value * interference));
    }
    return BoundValue{total, total, BoundKind::sum_rate_lower};
}

}  // namespace cf
