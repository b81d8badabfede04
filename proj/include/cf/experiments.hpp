#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <thread>

#include "cf/analysis.hpp"
#include "cf/search.hpp"

namespace cf {

/// Parameters of a Monte Carlo campaign. Two identical configs always
/// produce identical tables, independent of the thread count.
struct ExperimentConfig {
    std::vector<int> users_grid;       // L values
    int relays = 1;                    // M
    std::vector<double> powers;        // P values
    std::int64_t trials = 1000;
    std::uint64_t seed = 1;
    SolverPolicy solver = SolverPolicy::auto_select;
    int group_size = 1;                // k (scheduling)
    std::int64_t slots = 1000;         // scheduling horizon
    std::vector<int> norm_sq_grid;     // |a|^2 values for the bound curves
    double budget = kDefaultEnumerationBudget;
};

/// One statistic of one campaign row, in long format.
struct SummaryRow {
    int users = 0;
    int relays = 0;
    double power = 0.0;
    int group_size = 0;
    std::string statistic;
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
    std::string solver;
};

/// Runtime knobs that never affect results.
struct RunOptions {
    int threads = 0;  // 0 = all hardware threads
    std::function<void(const std::string&)> progress;
};

struct SumRateSample {
    std::vector<double> user_rates;  // bits; 0 for users covered by no relay
    double sum_bits = 0.0;
    std::vector<CoefficientVector> relay_coeffs;
    std::vector<ChannelVector> relay_channels;
    std::vector<double> relay_rates;
    std::vector<bool> unit_flags;
    std::vector<SolverKind> relay_solvers;
    bool full_rank = false;  // diagnostic only; decodability is not enforced
};

namespace detail {

inline int resolve_threads(int requested, std::int64_t work_items) {
    int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1)
        t = 1;
    return static_cast<int>(std::min<std::int64_t>(t, work_items));
}

/*
 * Runs fn(0..n-1) on a worker pool. Each index writes only its own
 * preallocated slot, so the aggregation order (and therefore every output
 * byte) is independent of the schedule. The first exception wins and
 * drains the queue.
 */
template <typename Fn>
inline void for_each_index(std::int64_t n, int threads, Fn&& fn) {
    threads = resolve_threads(threads, n);
    if (threads <= 1) {
        for (std::int64_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& th : pool)
        th.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

struct Aggregate {
    double mean;
    double std_error;  // sample stdev / sqrt(n)
};

inline Aggregate aggregate(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        ss += d * d;
    }
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd / std::sqrt(n)};
}

inline std::string solver_label(const std::vector<std::uint8_t>& used_exhaustive) {
    bool any_ex = false, any_cand = false;
    for (std::uint8_t u : used_exhaustive)
        (u ? any_ex : any_cand) = true;
    if (any_ex && any_cand)
        return "mixed";
    return any_ex ? "exhaustive" : "candidate";
}

inline bool decompose_squares(int target, int slots, std::vector<int>& out) {
    if (target == 0)
        return true;
    if (slots == 0)
        return false;
    for (int c = static_cast<int>(std::floor(std::sqrt(static_cast<double>(target)))); c >= 1; --c) {
        out.push_back(c);
        if (decompose_squares(target - c * c, slots - 1, out))
            return true;
        out.pop_back();
    }
    return false;
}

template <typename E>
[[noreturn]] inline void rethrow_with_trial(const E& e, std::int64_t trial) {
    throw E("trial " + std::to_string(trial) + ": " + e.what());
}

}  // namespace detail

/// Deterministic representative with squared norm `norm_sq` in dimension L,
/// used for the fixed-a probability curves: all ones when norm_sq <= L,
/// otherwise one large entry padded with ones (falling back to a greedy
/// squares decomposition), zeros last.
inline CoefficientVector coeff_with_norm_sq(int norm_sq, int L) {
    if (L < 1 || norm_sq < 1)
        throw std::invalid_argument("coeff_with_norm_sq needs L >= 1 and norm_sq >= 1");
    std::vector<int> a(static_cast<std::size_t>(L), 0);
    if (norm_sq <= L) {
        std::fill(a.begin(), a.begin() + norm_sq, 1);
        return CoefficientVector(std::move(a));
    }
    const int c = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(norm_sq - (L - 1)))));
    const int rem = norm_sq - c * c;
    if (rem >= 0 && rem <= L - 1) {
        a[0] = c;
        std::fill(a.begin() + 1, a.begin() + 1 + rem, 1);
        return CoefficientVector(std::move(a));
    }
    std::vector<int> parts;
    if (!detail::decompose_squares(norm_sq, L, parts))
        throw std::invalid_argument("cannot realize |a|^2 = " + std::to_string(norm_sq) +
                                    " with " + std::to_string(L) + " entries");
    std::copy(parts.begin(), parts.end(), a.begin());
    return CoefficientVector(std::move(a));
}

/// Rank check (over the reals) of the stacked relay coefficient matrix.
inline bool coefficient_matrix_full_rank(const std::vector<CoefficientVector>& rows) {
    if (rows.empty())
        return false;
    const std::size_t M = rows.size();
    const std::size_t L = rows[0].size();
    std::vector<std::vector<double>> A(M, std::vector<double>(L));
    for (std::size_t m = 0; m < M; ++m) {
        detail::require_same_dim(rows[m].size(), L);
        for (std::size_t l = 0; l < L; ++l)
            A[m][l] = rows[m][l];
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < L && rank < M; ++col) {
        std::size_t pivot = rank;
        for (std::size_t r = rank + 1; r < M; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col]))
                pivot = r;
        if (std::abs(A[pivot][col]) < 1e-9)
            continue;
        std::swap(A[pivot], A[rank]);
        for (std::size_t r = rank + 1; r < M; ++r) {
            const double factor = A[r][col] / A[rank][col];
            for (std::size_t cc = col; cc < L; ++cc)
                A[r][cc] -= factor * A[rank][cc];
        }
        ++rank;
    }
    return rank == std::min(M, L);
}

/*
 * One Monte Carlo draw of the system sum rate: M relays each see an
 * independent L-user channel and independently pick their rate-maximizing
 * coefficient vector. User l is decodable through the relays whose
 * combination includes it (a_ml != 0) and is limited by the slowest of
 * them; users in no combination contribute zero.
 */
inline SumRateSample trial_sum_rate(int L, int M, Power P, RngStream& rng,
                                    SolverPolicy policy = SolverPolicy::auto_select,
                                    double budget = kDefaultEnumerationBudget) {
    if (L < 1 || M < 1)
        throw std::invalid_argument("trial_sum_rate needs L >= 1 and M >= 1");
    SumRateSample s;
    s.relay_channels.reserve(M);
    s.relay_coeffs.reserve(M);
    for (int m = 0; m < M; ++m) {
        ChannelVector h = sample_channel(static_cast<std::size_t>(L), rng);
        SearchResult res = solve(h, P, policy, budget);
        s.unit_flags.push_back(is_unit_vector(res.a_opt));
        s.relay_rates.push_back(res.rate.bits);
        s.relay_solvers.push_back(res.solver);
        s.relay_coeffs.push_back(std::move(res.a_opt));
        s.relay_channels.push_back(std::move(h));
    }
    s.user_rates.assign(static_cast<std::size_t>(L), 0.0);
    for (int l = 0; l < L; ++l) {
        double r = -1.0;
        for (int m = 0; m < M; ++m) {
            if (s.relay_coeffs[m][l] != 0)
                r = r < 0.0 ? s.relay_rates[m] : std::min(r, s.relay_rates[m]);
        }
        s.user_rates[l] = r < 0.0 ? 0.0 : r;
        s.sum_bits += s.user_rates[l];
    }
    s.full_rank = coefficient_matrix_full_rank(s.relay_coeffs);
    return s;
}

/// Users transmitting in the given slot under Round-Robin with groups of k:
/// {(slot*k + j) mod L : j = 0..k-1}. Over a full cycle every user is
/// scheduled equally often.
inline std::vector<int> round_robin_schedule(int L, int k, std::int64_t slot) {
    if (k < 1 || k > L)
        throw std::invalid_argument("group size must satisfy 1 <= k <= L");
    if (slot < 0)
        throw std::invalid_argument("slot index must be non-negative");
    std::vector<int> users(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        users[j] = static_cast<int>((slot * k + j) % L);
    return users;
}

namespace detail {

inline void require_campaign_basics(const ExperimentConfig& cfg, bool needs_users) {
    if (needs_users && cfg.users_grid.empty())
        throw std::invalid_argument("campaign needs at least one L value");
    for (int L : cfg.users_grid)
        if (L < 1)
            throw std::invalid_argument("user counts must be >= 1");
    if (cfg.powers.empty())
        throw std::invalid_argument("campaign needs at least one power value");
    if (cfg.trials < 1)
        throw std::invalid_argument("trials must be >= 1");
    if (cfg.relays < 1)
        throw std::invalid_argument("relays must be >= 1");
}

}  // namespace detail

/*
 * Degeneracy campaign: per (L, P), the fraction of trials where the
 * rate-optimal vector of a single relay is not a unit vector, the
 * empirical probability that the fixed vector of each configured |a|^2
 * beats the best unit vector, and the matching analytic bounds (evaluated
 * at |h|^2 = L, its expectation, for the union bound).
 */
inline std::vector<SummaryRow> run_unit_vector_probability(const ExperimentConfig& cfg,
                                                           const RunOptions& opts = {}) {
    detail::require_campaign_basics(cfg, true);
    for (int s : cfg.norm_sq_grid)
        if (s < 2)
            throw std::invalid_argument("bound curves need |a|^2 >= 2");

    std::vector<SummaryRow> rows;
    for (int L : cfg.users_grid) {
        std::vector<CoefficientVector> fixed;
        fixed.reserve(cfg.norm_sq_grid.size());
        for (int s : cfg.norm_sq_grid)
            fixed.push_back(coeff_with_norm_sq(s, L));

        for (double Pv : cfg.powers) {
            const Power P(Pv);
            std::vector<double> nonunit(cfg.trials);
            std::vector<std::vector<double>> beats(fixed.size(),
                                                   std::vector<double>(cfg.trials));
            std::vector<std::uint8_t> used_exhaustive(cfg.trials);

            detail::for_each_index(cfg.trials, opts.threads, [&](std::int64_t t) {
                RngStream rng = derive_trial_stream(cfg.seed, static_cast<std::uint64_t>(t));
                const ChannelVector h = sample_channel(static_cast<std::size_t>(L), rng);
                SearchResult opt = [&] {
                    try {
                        return solve(h, P, cfg.solver, cfg.budget);
                    } catch (const BudgetExceededError& e) {
                        detail::rethrow_with_trial(e, t);
                    }
                }();
                nonunit[t] = is_unit_vector(opt.a_opt) ? 0.0 : 1.0;
                used_exhaustive[t] = opt.solver == SolverKind::exhaustive;
                const double f_unit = best_unit_vector(h, P).f_value;
                for (std::size_t si = 0; si < fixed.size(); ++si)
                    beats[si][t] = quadratic_form(h, fixed[si], P) <= f_unit ? 1.0 : 0.0;
            });

            const std::string solver = detail::solver_label(used_exhaustive);
            const auto agg = detail::aggregate(nonunit);
            rows.push_back({L, 1, Pv, 0, "p_opt_nonunit", agg.mean, agg.std_error, cfg.trials,
                            solver});
            for (std::size_t si = 0; si < fixed.size(); ++si) {
                const int s = cfg.norm_sq_grid[si];
                const auto b = detail::aggregate(beats[si]);
                rows.push_back({L, 1, Pv, 0, "p_beats_unit_s" + std::to_string(s), b.mean,
                                b.std_error, cfg.trials, "-"});
                rows.push_back({L, 1, Pv, 0, "bound_thm3_s" + std::to_string(s),
                                bound_theorem3(s, L).value, 0.0, 0, "-"});
                if (L >= 4)
                    rows.push_back({L, 1, Pv, 0, "bound_cor1_s" + std::to_string(s),
                                    bound_corollary1(s, L).value, 0.0, 0, "-"});
            }
            if (L >= 4)
                rows.push_back({L, 1, Pv, 0, "bound_union",
                                union_bound_nonunit(L, P, static_cast<double>(L)).value, 0.0, 0,
                                "-"});
            if (opts.progress)
                opts.progress("prob-unit: L=" + std::to_string(L) + " P=" + std::to_string(Pv) +
                              " done");
        }
    }
    return rows;
}

/// Sum-rate decay campaign: mean system sum rate per (L, P) with M relays,
/// plus the mean fraction of relays that degenerated to a unit vector.
inline std::vector<SummaryRow> run_sum_rate_vs_users(const ExperimentConfig& cfg,
                                                     const RunOptions& opts = {}) {
    detail::require_campaign_basics(cfg, true);
    std::vector<SummaryRow> rows;
    const int M = cfg.relays;
    for (int L : cfg.users_grid) {
        for (double Pv : cfg.powers) {
            const Power P(Pv);
            std::vector<double> sums(cfg.trials), unit_frac(cfg.trials), full_rank(cfg.trials);
            std::vector<std::uint8_t> used_exhaustive(cfg.trials);

            detail::for_each_index(cfg.trials, opts.threads, [&](std::int64_t t) {
                RngStream rng = derive_trial_stream(cfg.seed, static_cast<std::uint64_t>(t));
                SumRateSample s = [&] {
                    try {
                        return trial_sum_rate(L, M, P, rng, cfg.solver, cfg.budget);
                    } catch (const BudgetExceededError& e) {
                        detail::rethrow_with_trial(e, t);
                    }
                }();
                sums[t] = s.sum_bits;
                double units = 0.0;
                bool any_ex = false;
                for (int m = 0; m < M; ++m) {
                    units += s.unit_flags[m] ? 1.0 : 0.0;
                    any_ex = any_ex || s.relay_solvers[m] == SolverKind::exhaustive;
                }
                unit_frac[t] = units / M;
                full_rank[t] = s.full_rank ? 1.0 : 0.0;
                used_exhaustive[t] = any_ex;
            });

            const std::string solver = detail::solver_label(used_exhaustive);
            const auto sum_agg = detail::aggregate(sums);
            const auto unit_agg = detail::aggregate(unit_frac);
            const auto rank_agg = detail::aggregate(full_rank);
            rows.push_back({L, M, Pv, 0, "sum_rate_mean", sum_agg.mean, sum_agg.std_error,
                            cfg.trials, solver});
            rows.push_back({L, M, Pv, 0, "unit_fraction", unit_agg.mean, unit_agg.std_error,
                            cfg.trials, solver});
            rows.push_back({L, M, Pv, 0, "full_rank_fraction", rank_agg.mean, rank_agg.std_error,
                            cfg.trials, solver});
            if (opts.progress)
                opts.progress("sumrate: L=" + std::to_string(L) + " P=" + std::to_string(Pv) +
                              " done");
        }
    }
    return rows;
}

/*
 * Round-Robin campaign: every slot schedules the next k of the L users and
 * draws fresh block-fading channels for the scheduled group, so the
 * per-slot statistics depend on k but not on the population size. Rows
 * report the average per-transmission sum rate over the horizon.
 */
inline std::vector<SummaryRow> run_scheduled_sum_rate(const ExperimentConfig& cfg,
                                                      const RunOptions& opts = {}) {
    detail::require_campaign_basics(cfg, true);
    if (cfg.slots < 1)
        throw std::invalid_argument("scheduling needs slots >= 1");
    std::vector<SummaryRow> rows;
    const int M = cfg.relays;
    const int k = cfg.group_size;
    for (int L : cfg.users_grid) {
        if (k > L)
            throw std::invalid_argument("group size exceeds population (k > L)");
        for (double Pv : cfg.powers) {
            const Power P(Pv);
            std::vector<double> sums(cfg.slots), unit_frac(cfg.slots);
            std::vector<std::uint8_t> used_exhaustive(cfg.slots);

            detail::for_each_index(cfg.slots, opts.threads, [&](std::int64_t slot) {
                const std::vector<int> group = round_robin_schedule(L, k, slot);
                RngStream rng = derive_trial_stream(cfg.seed, static_cast<std::uint64_t>(slot));
                SumRateSample s = [&] {
                    try {
                        return trial_sum_rate(k, M, P, rng, cfg.solver, cfg.budget);
                    } catch (const BudgetExceededError& e) {
                        detail::rethrow_with_trial(e, slot);
                    }
                }();
                (void)group;  // rates attach to group members; only the sum is aggregated
                sums[slot] = s.sum_bits;
                double units = 0.0;
                bool any_ex = false;
                for (int m = 0; m < M; ++m) {
                    units += s.unit_flags[m] ? 1.0 : 0.0;
                    any_ex = any_ex || s.relay_solvers[m] == SolverKind::exhaustive;
                }
                unit_frac[slot] = units / M;
                used_exhaustive[slot] = any_ex;
            });

            const std::string solver = detail::solver_label(used_exhaustive);
            const auto sum_agg = detail::aggregate(sums);
            const auto unit_agg = detail::aggregate(unit_frac);
            rows.push_back({L, M, Pv, k, "scheduled_sum_rate_mean", sum_agg.mean,
                            sum_agg.std_error, cfg.slots, solver});
            rows.push_back({L, M, Pv, k, "unit_fraction", unit_agg.mean, unit_agg.std_error,
                            cfg.slots, solver});
            if (opts.progress)
                opts.progress("schedule: L=" + std::to_string(L) + " P=" + std::to_string(Pv) +
                              " done");
        }
    }
    return rows;
}

/*
 * Square-system bound comparison: per P, the mean optimal-CF sum rate over
 * M relays and M users, the interference-channel lower bound on the same
 * channel draws, the analytic upper bound, and the fraction of draws where
 * the per-draw lower bound exceeded the per-draw CF sum rate (the forced
 * e_m assignment is not dominated by independently optimal relays in every
 * draw, so violations are counted rather than hidden).
 */
inline std::vector<SummaryRow> run_bounds_vs_power(const ExperimentConfig& cfg,
                                                   const RunOptions& opts = {}) {
    detail::require_campaign_basics(cfg, false);
    const int M = cfg.relays;
    if (M < 2)
        throw std::invalid_argument("bound comparison needs M >= 2");
    std::vector<SummaryRow> rows;
    for (double Pv : cfg.powers) {
        const Power P(Pv);
        const double upper = sum_rate_upper_bound(M, P).value;  // requires P >= 3
        std::vector<double> cf_sum(cfg.trials), lb(cfg.trials), viol(cfg.trials);
        std::vector<std::uint8_t> used_exhaustive(cfg.trials);

        detail::for_each_index(cfg.trials, opts.threads, [&](std::int64_t t) {
            RngStream rng = derive_trial_stream(cfg.seed, static_cast<std::uint64_t>(t));
            SumRateSample s = [&] {
                try {
                    return trial_sum_rate(M, M, P, rng, cfg.solver, cfg.budget);
                } catch (const BudgetExceededError& e) {
                    detail::rethrow_with_trial(e, t);
                }
            }();
            cf_sum[t] = s.sum_bits;
            lb[t] = sum_rate_lower_bound(s.relay_channels, P).value;
            viol[t] = lb[t] > s.sum_bits + 1e-12 ? 1.0 : 0.0;
            bool any_ex = false;
            for (int m = 0; m < M; ++m)
                any_ex = any_ex || s.relay_solvers[m] == SolverKind::exhaustive;
            used_exhaustive[t] = any_ex;
        });

        const std::string solver = detail::solver_label(used_exhaustive);
        const auto cf_agg = detail::aggregate(cf_sum);
        const auto lb_agg = detail::aggregate(lb);
        const auto viol_agg = detail::aggregate(viol);
        rows.push_back({M, M, Pv, 0, "sum_rate_mean", cf_agg.mean, cf_agg.std_error, cfg.trials,
                        solver});
        rows.push_back({M, M, Pv, 0, "lower_bound_mean", lb_agg.mean, lb_agg.std_error,
                        cfg.trials, "-"});
        rows.push_back({M, M, Pv, 0, "upper_bound", upper, 0.0, 0, "-"});
        rows.push_back({M, M, Pv, 0, "lb_violation_fraction", viol_agg.mean, viol_agg.std_error,
                        cfg.trials, "-"});
        if (opts.progress)
            opts.progress("bounds: P=" + std::to_string(Pv) + " done");
    }
    return rows;
}

/// Two-sided Kolmogorov-Smirnov statistic of the samples against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
    if (samples.empty())
        throw std::invalid_argument("ks_statistic needs samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - F);
        d = std::max(d, F - static_cast<double>(i) / n);
    }
    return d;
}

/// Asymptotic KS critical value at significance ~0.01.
inline double ks_critical_001(std::int64_t n) {
    return 1.63 / std::sqrt(static_cast<double>(n));
}

/// KS statistic of the squared cosine between a and n random channels
/// against its Beta(1/2, (L-1)/2) law.
inline double ks_test_cos2(int L, std::int64_t n, const CoefficientVector& a, RngStream& rng) {
    if (n < 100)
        throw std::invalid_argument("ks_test_cos2 needs n >= 100");
    detail::require_same_dim(static_cast<std::size_t>(L), a.size());
    std::vector<double> samples(static_cast<std::size_t>(n));
    const double a_ns = static_cast<double>(a.norm_sq());
    for (double& x : samples) {
        const ChannelVector h = sample_channel(static_cast<std::size_t>(L), rng);
        const double d = dot(h, a);
        x = d * d / (a_ns * h.norm_sq());
    }
    const double b = (L - 1) / 2.0;
    return ks_statistic(std::move(samples),
                        [b](double x) { return reg_inc_beta(std::clamp(x, 0.0, 1.0), 0.5, b); });
}

}  // namespace cf
