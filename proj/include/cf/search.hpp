#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "cf/rate.hpp"

namespace cf {

/// User-facing solver selection.
enum class SolverPolicy { exhaustive, candidate, auto_select };

/// Which algorithm actually produced a result.
enum class SolverKind { exhaustive, candidate, unit_scan };

inline const char* to_string(SolverKind k) {
    switch (k) {
        case SolverKind::exhaustive: return "exhaustive";
        case SolverKind::candidate: return "candidate";
        case SolverKind::unit_scan: return "unit_scan";
    }
    return "?";
}

inline SolverPolicy solver_policy_from_string(const std::string& s) {
    if (s == "exhaustive") return SolverPolicy::exhaustive;
    if (s == "candidate") return SolverPolicy::candidate;
    if (s == "auto") return SolverPolicy::auto_select;
    throw std::invalid_argument("unknown solver '" + s + "' (expected exhaustive|candidate|auto)");
}

struct BudgetExceededError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cap on the (2 floor(r)+1)^L box estimate before exhaustive search refuses.
inline constexpr double kDefaultEnumerationBudget = 1e8;

struct SearchResult {
    CoefficientVector a_opt;
    double f_value;
    RateValue rate;
    std::uint64_t candidates_examined;
    SolverKind solver;
};

/// True iff exactly one entry is +-1 and all others are zero.
inline bool is_unit_vector(const CoefficientVector& a) {
    int nonzero = 0;
    bool unit_mag = false;
    for (int x : a.entries()) {
        if (x != 0) {
            ++nonzero;
            unit_mag = (x == 1 || x == -1);
        }
    }
    return nonzero == 1 && unit_mag;
}

namespace detail {

// Total order used for every tie-break: f ascending, then smaller squared
// norm, then ascending lexicographic order on the canonical entries.
inline bool search_order_less(double f_lhs, std::int64_t norm_lhs, const std::vector<int>& lhs,
                              double f_rhs, std::int64_t norm_rhs, const std::vector<int>& rhs) {
    if (f_lhs != f_rhs)
        return f_lhs < f_rhs;
    if (norm_lhs != norm_rhs)
        return norm_lhs < norm_rhs;
    return std::lexicographical_compare(lhs.begin(), lhs.end(), rhs.begin(), rhs.end());
}

inline std::vector<int> canonical_entries(std::vector<int> v, const ChannelVector& h) {
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        d += h[i] * v[i];
    bool flip;
    if (d != 0.0) {
        flip = d < 0.0;
    } else {
        flip = false;
        for (int x : v) {
            if (x != 0) {
                flip = x < 0;
                break;
            }
        }
    }
    if (flip)
        for (int& x : v)
            x = -x;
    return v;
}

inline std::int64_t isqrt_floor(std::int64_t n) {
    if (n < 0)
        return -1;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

inline SearchResult finalize_result(std::vector<int> entries, const ChannelVector& h, Power P,
                                    std::uint64_t examined, SolverKind kind) {
    CoefficientVector a(canonical_entries(std::move(entries), h));
    const double f = quadratic_form(h, a, P);
    return SearchResult{std::move(a), f, rate_from_f(f, h, P), examined, kind};
}

}  // namespace detail

/// Strongest-user baseline: e_i at i = argmax |h_i| (smallest index on ties),
/// sign-aligned with h_i.
inline SearchResult best_unit_vector(const ChannelVector& h, Power P) {
    detail::require_nonzero_channel(h);
    std::size_t best = 0;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (std::abs(h[i]) > std::abs(h[best]))
            best = i;
    std::vector<int> e(h.size(), 0);
    e[best] = h[best] > 0.0 ? 1 : -1;
    return detail::finalize_result(std::move(e), h, P, h.size(), SolverKind::unit_scan);
}

/// Box-volume estimate (2 floor(r)+1)^L used for the budget gate; computed
/// in log space so it never overflows.
inline bool exhaustive_within_budget(const ChannelVector& h, Power P,
                                     double budget = kDefaultEnumerationBudget) {
    const double r = search_radius(h, P);
    const double per_axis = 2.0 * std::floor(r) + 1.0;
    return static_cast<double>(h.size()) * std::log(per_axis) <= std::log(budget);
}

/*
 * Exact minimizer of f over nonzero integer vectors with |a|^2 < 1+P|h|^2.
 *
 * Depth-first enumeration over the coordinates in order of decreasing |h_i|
 * with the first coordinate restricted to a_1 >= 0 (f is sign-symmetric).
 * A prefix (v_0..v_{j-1}) is extended with value x at cost
 *
 *   g_j(x) = x^2 (1 + P sum_{i<j} h_i^2) - 2P h_j x sum_{i<j} h_i v_i
 *            + P h_j^2 sum_{i<j} v_i^2,
 *
 * the pairwise expansion of f restricted to the new index. Every term of
 * that expansion is a square, so prefix costs never decrease; branches are
 * cut when the prefix cost exceeds the best full vector found so far
 * (seeded with the strongest-user unit vector) or when the prefix norm
 * leaves the Lemma-1 ball. The feasible x at each depth form the integer
 * interval where the convex quadratic g_j stays within the remaining
 * budget.
 */
inline SearchResult exhaustive_search(const ChannelVector& h, Power P,
                                      double budget = kDefaultEnumerationBudget) {
    detail::require_nonzero_channel(h);
    if (!exhaustive_within_budget(h, P, budget))
        throw BudgetExceededError("exhaustive enumeration estimate exceeds budget of " +
                                  std::to_string(budget) + " vectors");

    const std::size_t L = h.size();
    const double hns = h.norm_sq();
    const double radius_sq = 1.0 + P.value * hns;
    // strict |a|^2 < radius_sq with integer |a|^2
    const auto smax = static_cast<std::int64_t>(std::ceil(radius_sq)) - 1;

    // visit strong coordinates first; ordering does not affect the result
    std::vector<std::size_t> order(L);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return std::abs(h[i]) > std::abs(h[j]); });
    std::vector<double> hp(L);
    for (std::size_t j = 0; j < L; ++j)
        hp[j] = h[order[j]];

    SearchResult seed = best_unit_vector(h, P);
    double best_f = seed.f_value;
    std::int64_t best_norm = seed.a_opt.norm_sq();
    std::vector<int> best_entries = seed.a_opt.entries();
    std::uint64_t examined = 1;

    std::vector<double> prefix_h_sq(L + 1, 0.0);  // H_j
    for (std::size_t j = 0; j < L; ++j)
        prefix_h_sq[j + 1] = prefix_h_sq[j] + hp[j] * hp[j];

    std::vector<int> v(L, 0);

    // recursive lambda: depth j, accumulated (f, norm, h-dot) of the prefix
    auto dfs = [&](auto&& self, std::size_t j, double f_partial, std::int64_t norm_partial,
                   double dot_partial) -> void {
        if (j == L) {
            if (norm_partial == 0)
                return;  // skip the zero vector
            ++examined;
            std::vector<int> cand(L);
            for (std::size_t t = 0; t < L; ++t)
                cand[order[t]] = v[t];
            if (f_partial < best_f) {
                best_f = f_partial;
                best_norm = norm_partial;
                best_entries = detail::canonical_entries(std::move(cand), h);
            } else if (f_partial == best_f) {
                auto canon = detail::canonical_entries(std::move(cand), h);
                if (detail::search_order_less(f_partial, norm_partial, canon, best_f, best_norm,
                                              best_entries)) {
                    best_norm = norm_partial;
                    best_entries = std::move(canon);
                }
            }
            return;
        }

        const double rem = best_f - f_partial;  // ties admitted (rem == 0)
        if (rem < 0.0)
            return;
        const double quad_a = 1.0 + P.value * prefix_h_sq[j];
        const double center = P.value * hp[j] * dot_partial / quad_a;
        const double constant = P.value * hp[j] * hp[j] * static_cast<double>(norm_partial);
        const double disc = center * center - (constant - rem) / quad_a;
        if (disc < 0.0)
            return;
        const double half_width = std::sqrt(disc) + 1e-9;  // conservative against rounding
        const std::int64_t norm_cap = detail::isqrt_floor(smax - norm_partial);

        auto lo = static_cast<std::int64_t>(std::ceil(center - half_width));
        auto hi = static_cast<std::int64_t>(std::floor(center + half_width));
        lo = std::max(lo, -norm_cap);
        hi = std::min(hi, norm_cap);
        if (j == 0)
            lo = std::max<std::int64_t>(lo, 0);

        for (std::int64_t x = lo; x <= hi; ++x) {
            const double xd = static_cast<double>(x);
            const double g = xd * xd * quad_a - 2.0 * P.value * hp[j] * dot_partial * xd + constant;
            const double f_next = f_partial + g;
            if (f_next > best_f)
                continue;
            v[j] = static_cast<int>(x);
            self(self, j + 1, f_next, norm_partial + x * x, dot_partial + hp[j] * xd);
        }
        v[j] = 0;
    };
    dfs(dfs, 0, 0.0, 0, 0.0);

    return detail::finalize_result(std::move(best_entries), h, P, examined,
                                   SolverKind::exhaustive);
}

/*
 * Polynomial search over the candidate family a(alpha) = sign(h) .*
 * round(alpha |h|). The rounded vector changes only when some |alpha h_i|
 * crosses a half-integer, i.e. at the breakpoints alpha = (k+1/2)/|h_i|;
 * each open interval between consecutive breakpoints contributes one
 * candidate. Sweeping alpha upward, the crossing at breakpoint (i,k) bumps
 * component i from k to k+1, so |a|^2 and h.a can be maintained in O(1)
 * per event. The sweep stops once |a|^2 reaches the Lemma-1 ball boundary
 * (the norm only grows from there). The number of candidates is at most
 * 2L(ceil(sqrt(1+P|h|^2))+1).
 */
inline SearchResult candidate_search(const ChannelVector& h, Power P) {
    detail::require_nonzero_channel(h);
    const std::size_t L = h.size();
    const double hns = h.norm_sq();
    const double radius_sq = 1.0 + P.value * hns;
    const double r = std::sqrt(radius_sq);

    std::vector<double> w(L);
    std::vector<int> sgn(L);
    double wmax = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        w[i] = std::abs(h[i]);
        sgn[i] = h[i] < 0.0 ? -1 : 1;
        wmax = std::max(wmax, w[i]);
    }
    // cover every candidate whose largest component stays below ceil(r)
    const double alpha_hi = (r + 0.5) / wmax * (1.0 + 1e-12);

    struct Event {
        double alpha;
        std::uint32_t comp;
    };
    std::vector<Event> events;
    for (std::size_t i = 0; i < L; ++i) {
        if (w[i] == 0.0)
            continue;
        const auto k_max = static_cast<std::int64_t>(std::floor(alpha_hi * w[i] - 0.5));
        for (std::int64_t k = 0; k <= k_max; ++k)
            events.push_back({(static_cast<double>(k) + 0.5) / w[i], static_cast<std::uint32_t>(i)});
    }
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        return a.alpha != b.alpha ? a.alpha < b.alpha : a.comp < b.comp;
    });

    std::vector<int> m(L, 0);
    std::int64_t norm_sq = 0;
    double dotv = 0.0;
    std::uint64_t examined = 0;

    bool have_best = false;
    double best_f = 0.0;
    std::int64_t best_norm = 0;
    std::vector<int> best_entries;

    auto signed_entries = [&]() {
        std::vector<int> a(L);
        for (std::size_t i = 0; i < L; ++i)
            a[i] = sgn[i] * m[i];
        return a;
    };

    std::size_t e = 0;
    while (e < events.size()) {
        const double alpha = events[e].alpha;
        while (e < events.size() && events[e].alpha == alpha) {
            const std::uint32_t i = events[e].comp;
            m[i] += 1;
            norm_sq += 2 * static_cast<std::int64_t>(m[i]) - 1;
            dotv += w[i];
            ++e;
        }
        if (static_cast<double>(norm_sq) >= radius_sq)
            break;
        ++examined;
        const double ns = static_cast<double>(norm_sq);
        const double f = ns + P.value * (ns * hns - dotv * dotv);
        if (!have_best || f < best_f) {
            have_best = true;
            best_f = f;
            best_norm = norm_sq;
            best_entries = signed_entries();
        } else if (f == best_f) {
            auto cand = signed_entries();
            if (detail::search_order_less(f, norm_sq, cand, best_f, best_norm, best_entries)) {
                best_norm = norm_sq;
                best_entries = std::move(cand);
            }
        }
    }

    if (!have_best)  // cannot happen for h != 0: the first interval past 0 is a unit vector
        throw std::runtime_error("internal error: empty candidate sweep");

    return detail::finalize_result(std::move(best_entries), h, P, examined,
                                   SolverKind::candidate);
}

/// Policy dispatch: auto takes the exact enumeration when the box estimate
/// fits the budget and the polynomial candidate sweep otherwise.
inline SearchResult solve(const ChannelVector& h, Power P,
                          SolverPolicy policy = SolverPolicy::auto_select,
                          double budget = kDefaultEnumerationBudget) {
    switch (policy) {
        case SolverPolicy::exhaustive:
            return exhaustive_search(h, P, budget);
        case SolverPolicy::candidate:
            return candidate_search(h, P);
        case SolverPolicy::auto_select:
            return exhaustive_within_budget(h, P, budget) ? exhaustive_search(h, P, budget)
                                                          : candidate_search(h, P);
    }
    throw std::logic_error("unhandled solver policy");
}

}  // namespace cf
