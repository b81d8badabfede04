#include <catch2/catch_amalgamated.hpp>

#include "cf/rate.hpp"

using namespace cf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// random instance used by the property checks
struct Instance {
    ChannelVector h;
    CoefficientVector a;
    Power P;
};

Instance random_instance(RngStream& rng, int L, double power) {
    ChannelVector h = sample_channel(L, rng);
    std::vector<int> av(L, 0);
    bool nonzero = false;
    while (!nonzero)
        for (int& x : av) {
            x = static_cast<int>(rng.next_u64() % 11) - 5;
            nonzero = nonzero || x != 0;
        }
    return {std::move(h), CoefficientVector(std::move(av)), Power(power)};
}

}  // namespace

TEST_CASE("coefficient vector rejects the zero vector") {
    CHECK_THROWS_AS(CoefficientVector({0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(CoefficientVector({}), std::invalid_argument);
    CHECK(CoefficientVector({0, -1, 2}).norm_sq() == 5);
}

TEST_CASE("alpha_mmse evaluates the MMSE scale") {
    CHECK(alpha_mmse(ChannelVector({1, 0}), CoefficientVector({1, 0}), Power(1)) == 0.5);
    CHECK(alpha_mmse(ChannelVector({1, 0}), CoefficientVector({0, 1}), Power(5)) == 0.0);
    CHECK_THAT(alpha_mmse(ChannelVector({1, 1}), CoefficientVector({1, 1}), Power(10)),
               WithinRel(20.0 / 21.0, 1e-15));
    CHECK_THROWS_AS(alpha_mmse(ChannelVector({1, 1}), CoefficientVector({1}), Power(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(alpha_mmse(ChannelVector({0.0, 0.0}), CoefficientVector({1, 0}), Power(1)),
                    std::invalid_argument);
}

TEST_CASE("computation_rate_alpha at the MMSE point") {
    const ChannelVector h({1.0});
    const CoefficientVector a({1});
    // alpha = P/(1+P) = 3/4 reduces to half the point-to-point capacity log2(1+P)
    CHECK_THAT(computation_rate_alpha(h, a, Power(3), 0.75).bits, WithinAbs(1.0, 1e-12));

    // an off-MMSE alpha never beats the closed form
    RngStream rng(17, 0);
    for (int t = 0; t < 200; ++t) {
        const Instance in = random_instance(rng, 2 + t % 5, t % 2 ? 10.0 : 1.0);
        const double alpha = alpha_mmse(in.h, in.a, in.P);
        CHECK_THAT(computation_rate_alpha(in.h, in.a, in.P, alpha).bits,
                   WithinAbs(computation_rate(in.h, in.a, in.P).bits, 1e-9));
    }

    // clamp: ratio at or below 1 gives exactly zero bits
    CHECK(computation_rate_alpha(ChannelVector({1, 0}), CoefficientVector({5, 5}), Power(1), 0.1)
              .bits == 0.0);
}

TEST_CASE("computation_rate closed form") {
    CHECK_THAT(computation_rate(ChannelVector({1, 0}), CoefficientVector({1, 0}), Power(3)).bits,
               WithinAbs(1.0, 1e-12));
    CHECK_THAT(computation_rate(ChannelVector({1, 1}), CoefficientVector({1, 1}), Power(10)).bits,
               WithinAbs(1.69615871138938014, 1e-12));  // (1/2) log2(10.5)
    // Lemma 1: |a|^2 >= 1+P|h|^2 forces zero rate
    CHECK(computation_rate(ChannelVector({1, 0}), CoefficientVector({2, 0}), Power(1)).bits ==
          0.0);
    CHECK(computation_rate(ChannelVector({1, 1}), CoefficientVector({4, 3}), Power(10)).bits ==
          0.0);
}

TEST_CASE("quadratic form spot values") {
    const Power P(10);
    CHECK(quadratic_form(ChannelVector({1, 1}), CoefficientVector({1, 1}), P) == 2.0);
    CHECK(quadratic_form(ChannelVector({1, 0}), CoefficientVector({1, 0}), P) == 1.0);

    // unit vectors reduce to 1 + P(|h|^2 - h_i^2)
    RngStream rng(3, 1);
    const ChannelVector h = sample_channel(4, rng);
    for (int i = 0; i < 4; ++i) {
        std::vector<int> e(4, 0);
        e[i] = 1;
        CHECK_THAT(quadratic_form(h, CoefficientVector(e), P),
                   WithinRel(1.0 + P.value * (h.norm_sq() - h[i] * h[i]), 1e-12));
    }
}

TEST_CASE("rate_from_f matches the direct rate and guards its domain") {
    const ChannelVector h({1, 1});
    const Power P(10);
    CHECK(rate_from_f(1.0 + P.value * h.norm_sq(), h, P).bits == 0.0);
    CHECK_THAT(rate_from_f(2.0, h, P).bits, WithinAbs(1.69615871138938014, 1e-12));
    CHECK_THAT(rate_from_f(1.0, ChannelVector({1, 0}), Power(7)).bits,
               WithinAbs(0.5 * std::log2(8.0), 1e-12));
    CHECK_THROWS_AS(rate_from_f(0.999, h, P), std::domain_error);
}

TEST_CASE("search radius") {
    CHECK(search_radius(ChannelVector({0.0, 0.0}), Power(5)) == 1.0);
    CHECK_THAT(search_radius(ChannelVector({1, 1}), Power(10)),
               WithinAbs(4.58257569495584001, 1e-14));
    CHECK_THAT(search_radius(ChannelVector({1, 1}), Power(1e-9)), WithinAbs(1.0, 1e-9));
}

TEST_CASE("three forms of f agree and the rate identity holds") {
    RngStream rng(99, 0);
    const double powers[] = {1.0, 10.0, 100.0};
    for (int t = 0; t < 1000; ++t) {
        const Instance in = random_instance(rng, 2 + t % 7, powers[t % 3]);
        const double f1 = quadratic_form(in.h, in.a, in.P);
        const double f2 = quadratic_form_pairwise(in.h, in.a, in.P);
        const double f3 = GramMatrix(in.h, in.P).quad(in.a);
        REQUIRE_THAT(f2, WithinRel(f1, 1e-9));
        REQUIRE_THAT(f3, WithinRel(f1, 1e-9));
        REQUIRE_THAT(rate_from_f(f1, in.h, in.P).bits,
                     WithinAbs(computation_rate(in.h, in.a, in.P).bits, 1e-9));
    }
}

TEST_CASE("gram matrix is positive definite on integer vectors") {
    RngStream rng(7, 2);
    for (int t = 0; t < 200; ++t) {
        const Instance in = random_instance(rng, 2 + t % 6, 10.0);
        CHECK(GramMatrix(in.h, in.P).quad(in.a) >= 1.0);
    }
}

TEST_CASE("MMSE scale is a local maximum of the rate") {
    RngStream rng(123, 0);
    for (int t = 0; t < 500; ++t) {
        const Instance in = random_instance(rng, 2 + t % 7, t % 2 ? 10.0 : 100.0);
        const double alpha = alpha_mmse(in.h, in.a, in.P);
        const double base = computation_rate_alpha(in.h, in.a, in.P, alpha).bits;
        CHECK(computation_rate_alpha(in.h, in.a, in.P, alpha * 1.001).bits <= base + 1e-12);
        CHECK(computation_rate_alpha(in.h, in.a, in.P, alpha * 0.999).bits <= base + 1e-12);
    }
}

TEST_CASE("rate is exactly symmetric under sign flip of a") {
    RngStream rng(55, 0);
    for (int t = 0; t < 200; ++t) {
        const Instance in = random_instance(rng, 2 + t % 5, 10.0);
        std::vector<int> neg(in.a.size());
        for (std::size_t i = 0; i < in.a.size(); ++i)
            neg[i] = -in.a[i];
        CHECK(computation_rate(in.h, in.a, in.P).bits ==
              computation_rate(in.h, CoefficientVector(neg), in.P).bits);
    }
}

TEST_CASE("canonicalization rules") {
    CHECK(canonicalized(CoefficientVector({0, -2, 1})).entries() == std::vector<int>{0, 2, -1});
    CHECK(canonicalized(CoefficientVector({0, 2, -1})).entries() == std::vector<int>{0, 2, -1});

    const ChannelVector h({-1.0, 0.0});
    CHECK(canonicalized(CoefficientVector({1, 0}), h).entries() == std::vector<int>{-1, 0});
    // orthogonal case falls back to first-nonzero-positive
    const ChannelVector h2({0.0, 1.0});
    CHECK(canonicalized(CoefficientVector({-1, 0}), h2).entries() == std::vector<int>{1, 0});
}
