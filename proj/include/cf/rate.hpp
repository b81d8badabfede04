#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>

#include "cf/core.hpp"

namespace cf {

/// Integer combination coefficients chosen by a relay. Never all-zero.
class CoefficientVector {
  public:
    explicit CoefficientVector(std::vector<int> entries) : entries_(std::move(entries)) {
        if (entries_.empty())
            throw std::invalid_argument("coefficient vector needs at least one entry");
        norm_sq_ = 0;
        for (int x : entries_)
            norm_sq_ += static_cast<std::int64_t>(x) * x;
        if (norm_sq_ == 0)
            throw std::invalid_argument("coefficient vector must not be all-zero");
    }

    const std::vector<int>& entries() const { return entries_; }
    int operator[](std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }
    std::int64_t norm_sq() const { return norm_sq_; }

    friend bool operator==(const CoefficientVector& a, const CoefficientVector& b) {
        return a.entries_ == b.entries_;
    }

  private:
    std::vector<int> entries_;
    std::int64_t norm_sq_;
};

/// Achievable computation rate in bits per real channel use. Always >= 0.
struct RateValue {
    double bits = 0.0;
};

namespace detail {

inline void require_same_dim(std::size_t lhs, std::size_t rhs) {
    if (lhs != rhs)
        throw std::invalid_argument("dimension mismatch: " + std::to_string(lhs) + " vs " +
                                    std::to_string(rhs));
}

inline void require_nonzero_channel(const ChannelVector& h) {
    if (h.is_zero())
        throw std::invalid_argument("degenerate all-zero channel");
}

inline double log2_pos(double x) { return std::max(std::log2(x), 0.0); }

}  // namespace detail

inline double dot(const ChannelVector& h, const CoefficientVector& a) {
    detail::require_same_dim(h.size(), a.size());
    double d = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
        d += h[i] * a[i];
    return d;
}

/// MMSE scale coefficient P h.a / (1 + P|h|^2).
inline double alpha_mmse(const ChannelVector& h, const CoefficientVector& a, Power P) {
    detail::require_nonzero_channel(h);
    const double d = dot(h, a);
    return P.value * d / (1.0 + P.value * h.norm_sq());
}

/// Computation rate for an explicit scale alpha:
/// (1/2) log2+( P / (alpha^2 + P |alpha h - a|^2) ).
inline RateValue computation_rate_alpha(const ChannelVector& h, const CoefficientVector& a,
                                        Power P, double alpha) {
    detail::require_same_dim(h.size(), a.size());
    double err = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double e = alpha * h[i] - a[i];
        err += e * e;
    }
    const double denom = alpha * alpha + P.value * err;
    if (denom <= 0.0)
        throw std::runtime_error("internal error: zero noise denominator (alpha=0 with a=0?)");
    return RateValue{0.5 * detail::log2_pos(P.value / denom)};
}

/// Computation rate at the MMSE-optimal scale:
/// (1/2) log2+( (|a|^2 - P(h.a)^2/(1+P|h|^2))^-1 ).
inline RateValue computation_rate(const ChannelVector& h, const CoefficientVector& a, Power P) {
    detail::require_nonzero_channel(h);
    const double d = dot(h, a);
    const double x =
        static_cast<double>(a.norm_sq()) - P.value * d * d / (1.0 + P.value * h.norm_sq());
    if (x <= 0.0)
        throw std::runtime_error("internal error: nonpositive effective noise");
    return RateValue{0.5 * detail::log2_pos(1.0 / x)};
}

/// Minimization objective f(a) = |a|^2 + P(|a|^2 |h|^2 - (a.h)^2).
inline double quadratic_form(const ChannelVector& h, const CoefficientVector& a, Power P) {
    const double d = dot(h, a);
    const double ns = static_cast<double>(a.norm_sq());
    return ns + P.value * (ns * h.norm_sq() - d * d);
}

/// Same objective as the sum over index pairs |a|^2 + P sum_{i<j} (h_i a_j - h_j a_i)^2.
inline double quadratic_form_pairwise(const ChannelVector& h, const CoefficientVector& a,
                                      Power P) {
    detail::require_same_dim(h.size(), a.size());
    double pairs = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double e = h[j] * a[i] - h[i] * a[j];
            pairs += e * e;
        }
    }
    return static_cast<double>(a.norm_sq()) + P.value * pairs;
}

/// Rate as a function of the objective value: (1/2) log2+((1+P|h|^2)/f).
inline RateValue rate_from_f(double f_value, const ChannelVector& h, Power P) {
    if (!(f_value >= 1.0))
        throw std::domain_error("objective value below 1 violates f(a) >= |a|^2 >= 1");
    return RateValue{0.5 * detail::log2_pos((1.0 + P.value * h.norm_sq()) / f_value)};
}

/// Norm bound sqrt(1+P|h|^2); any a at or beyond it has zero rate.
inline double search_radius(const ChannelVector& h, Power P) {
    return std::sqrt(1.0 + P.value * h.norm_sq());
}

/// The lattice Gram matrix (1+P|h|^2) I - P h h^T, materialized on demand.
/// Hot paths use the scalar form in quadratic_form(); this exists for the
/// algebraic cross-checks and for callers that want the matrix itself.
class GramMatrix {
  public:
    GramMatrix(const ChannelVector& h, Power P) : dim_(h.size()), entries_(dim_ * dim_) {
        const double diag = 1.0 + P.value * h.norm_sq();
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j)
                entries_[i * dim_ + j] = (i == j ? diag : 0.0) - P.value * h[i] * h[j];
    }

    std::size_t dim() const { return dim_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }

    /// a^T G a
    double quad(const CoefficientVector& a) const {
        detail::require_same_dim(dim_, a.size());
        double total = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < dim_; ++j)
                row += entries_[i * dim_ + j] * a[j];
            total += row * a[i];
        }
        return total;
    }

  private:
    std::size_t dim_;
    std::vector<double> entries_;
};

/// Sign-canonical form for standalone vectors: first nonzero entry positive.
inline CoefficientVector canonicalized(const CoefficientVector& a) {
    for (int x : a.entries()) {
        if (x > 0)
            return a;
        if (x < 0) {
            std::vector<int> neg(a.size());
            for (std::size_t i = 0; i < a.size(); ++i)
                neg[i] = -a[i];
            return CoefficientVector(std::move(neg));
        }
    }
    return a;  // unreachable: not all-zero
}

/// Sign-canonical form for search outputs: h.a >= 0, falling back to the
/// first-nonzero-positive rule when h.a == 0. a and -a carry the same rate.
inline CoefficientVector canonicalized(const CoefficientVector& a, const ChannelVector& h) {
    const double d = dot(h, a);
    if (d > 0.0)
        return a;
    if (d < 0.0) {
        std::vector<int> neg(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            neg[i] = -a[i];
        return CoefficientVector(std::move(neg));
    }
    return canonicalized(a);
}

}  // namespace cf
