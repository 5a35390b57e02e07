#include <cmath>

#include "doctest.h"
#include "generators.hpp"
#include "sumrate/fdma.hpp"

using namespace sumrate;

namespace {

FdmaProfile fig1_profile() { return {{30, 15, 10, 7, 3}, std::vector<double>(5, 1.0 / 8)}; }
const FdmaConstants fig1_constants{0.5, 1.0};

}  // namespace

TEST_CASE("classification of the five-user reference instance") {
    auto c = classify(fig1_profile(), fig1_constants);
    CHECK(c.oversized_count == 2);
    CHECK(c.non_undersized_count == 3);
    CHECK(c.labels == std::vector<SizeClass>{SizeClass::Oversized, SizeClass::Oversized,
                                             SizeClass::CriticallySized, SizeClass::Undersized,
                                             SizeClass::Undersized});
    // Classification does not depend on the noise level.
    auto c2 = classify(fig1_profile(), FdmaConstants{0.5, 123.0});
    CHECK(c2.labels == c.labels);
    CHECK(c2.test_values == c.test_values);
}

TEST_CASE("symmetric users with limits summing to the total are all critically sized") {
    for (int users : {1, 3, 8}) {
        FdmaProfile profile{std::vector<double>(users, 1.0),
                            std::vector<double>(users, 1.0 / users)};
        auto c = classify(profile, FdmaConstants{1.0, 1.0});
        CHECK(c.oversized_count == 0);
        CHECK(c.non_undersized_count == users);
        for (auto label : c.labels) CHECK(label == SizeClass::CriticallySized);
    }
}

TEST_CASE("hand-evaluated two-user classification") {
    FdmaProfile profile{{10, 1}, {0.1, 10}};
    auto c = classify(profile, FdmaConstants{1.0, 1.0});
    CHECK(c.test_values[0] == doctest::Approx(10.0 / 11.0));
    CHECK(c.test_values[1] == doctest::Approx(0.9));
    CHECK(c.labels[0] == SizeClass::Oversized);
    CHECK(c.labels[1] == SizeClass::Undersized);
    CHECK(c.oversized_count == 1);
    CHECK(c.non_undersized_count == 1);
}

TEST_CASE("classification rejects unsorted or zero-power input") {
    CHECK_THROWS_AS(classify(FdmaProfile{{1, 4}, {1, 1}}, FdmaConstants{1, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(classify(FdmaProfile{{1, 0}, {1, 1}}, FdmaConstants{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("oversized prefix / undersized suffix structure on random instances") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 500; ++rep) {
        auto c = testgen::random_fdma(rng, 10, false);
        auto cls = classify(c.profile, c.constants);
        REQUIRE(cls.oversized_count <= cls.non_undersized_count);
        for (std::size_t k = 0; k < cls.labels.size(); ++k) {
            const bool oversized = k < static_cast<std::size_t>(cls.oversized_count);
            CHECK((cls.labels[k] == SizeClass::Oversized) == oversized);
            const bool undersized = k >= static_cast<std::size_t>(cls.non_undersized_count);
            CHECK((cls.labels[k] == SizeClass::Undersized) == undersized);
        }
    }
}

TEST_CASE("closed-form allocation of the reference instance") {
    auto a = allocate_closed_form(fig1_profile(), fig1_constants);
    const std::vector<double> expected{0.125, 0.125, 0.125, 0.0875, 0.0375};
    for (int k = 0; k < 5; ++k) CHECK(a.bandwidths[k] == doctest::Approx(expected[k]).epsilon(1e-14));
    CHECK(a.common_psd == doctest::Approx(80.0).epsilon(1e-14));
    CHECK(a.psds[2] == doctest::Approx(80.0));
}

TEST_CASE("single-user allocations") {
    // Unrestricted share: the whole band.
    auto open = allocate_closed_form(FdmaProfile{{2}, {5}}, FdmaConstants{1, 1});
    CHECK(open.bandwidths[0] == doctest::Approx(1.0));
    // Binding limit.
    auto capped = allocate_closed_form(FdmaProfile{{2}, {0.5}}, FdmaConstants{1, 1});
    CHECK(capped.bandwidths[0] == 0.5);
    CHECK(capped.classification.labels[0] == SizeClass::Oversized);
}

TEST_CASE("both closed-form boundary expressions agree") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 1000; ++rep) {
        auto c = testgen::random_fdma(rng, 10, false);
        auto cls = classify(c.profile, c.constants);
        auto w1 = closed_form_bandwidths(c.profile, c.constants, cls, BoundaryForm::Oversized);
        auto w2 = closed_form_bandwidths(c.profile, c.constants, cls, BoundaryForm::NonUndersized);
        for (std::size_t k = 0; k < w1.size(); ++k) CHECK(std::abs(w1[k] - w2[k]) <= 1e-12);
    }
}

TEST_CASE("iterative algorithm reproduces the reference trace") {
    auto a = allocate_iterative(fig1_profile(), fig1_constants, true);
    REQUIRE(a.trace.size() == 3);  // min(K1 + 1, K) iterations
    const std::vector<double> first{30.0 / 130, 15.0 / 130, 10.0 / 130, 7.0 / 130, 3.0 / 130};
    for (int k = 0; k < 5; ++k) CHECK(a.trace[0][k] == doctest::Approx(first[k]).epsilon(1e-12));

    auto closed = allocate_closed_form(fig1_profile(), fig1_constants);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(a.bandwidths[k] - closed.bandwidths[k]) <= 1e-12);
}

TEST_CASE("iterative algorithm finishes in one pass without oversized users") {
    FdmaProfile profile{{2, 1}, {5, 5}};
    auto a = allocate_iterative(profile, FdmaConstants{1, 1}, true);
    CHECK(a.trace.size() == 1);
    CHECK(a.bandwidths[0] == doctest::Approx(2.0 / 3));
    CHECK(a.bandwidths[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("closed form and iterative agree everywhere") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 2000; ++rep) {
        auto c = testgen::random_fdma(rng, 12, false);
        auto closed = allocate_closed_form(c.profile, c.constants);
        auto iter = allocate_iterative(c.profile, c.constants);
        REQUIRE(closed.bandwidths.size() == iter.bandwidths.size());
        for (std::size_t k = 0; k < closed.bandwidths.size(); ++k)
            CHECK(std::abs(closed.bandwidths[k] - iter.bandwidths[k]) <= 1e-12);
        CHECK(closed.classification.oversized_count == iter.classification.oversized_count);
        CHECK(closed.classification.non_undersized_count ==
              iter.classification.non_undersized_count);
        CHECK(std::abs(closed.sum_rate - iter.sum_rate) <=
              1e-12 * std::max(1.0, closed.sum_rate));
    }
}

TEST_CASE("sum rate conventions") {
    FdmaProfile profile{{3}, {1}};
    FdmaConstants constants{1, 1};
    CHECK(fdma_sum_rate(profile, constants, {0.0}) == 0.0);
    CHECK(fdma_sum_rate(profile, constants, {1.0}) == doctest::Approx(2.0));  // log2(4)

    // The closed-form value matches the oversized-boundary expression
    // evaluated independently.
    auto a = allocate_closed_form(fig1_profile(), fig1_constants);
    const double n0 = fig1_constants.noise_psd;
    double expected = 0.0;
    for (int k = 0; k < 2; ++k)
        expected += 0.125 * std::log2(1.0 + fig1_profile().powers[k] / (n0 * 0.125));
    expected += 0.25 * std::log2(1.0 + 20.0 / (n0 * 0.25));
    CHECK(a.sum_rate == doctest::Approx(expected).epsilon(1e-14));
    CHECK(fdma_sum_rate(fig1_profile(), fig1_constants, a.bandwidths) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("MAC sum capacity") {
    CHECK(mac_sum_capacity(FdmaProfile{{1, 1}, {1, 1}}, FdmaConstants{0.5, 2.0}) ==
          doctest::Approx(0.5 * std::log2(3.0)).epsilon(1e-14));
    CHECK(mac_sum_capacity(FdmaProfile{{0}, {1}}, FdmaConstants{1, 1}) == 0.0);

    auto a = allocate_closed_form(fig1_profile(), fig1_constants);
    const double mac = mac_sum_capacity(fig1_profile(), fig1_constants);
    CHECK(mac == doctest::Approx(0.5 * std::log2(131.0)));
    CHECK(a.sum_rate < mac);  // two oversized users force a strict gap
}

TEST_CASE("capacity bound with equality iff no oversized user") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 1000; ++rep) {
        auto c = testgen::random_fdma(rng, 10);
        auto a = allocate_closed_form(c.profile, c.constants);
        const double mac = mac_sum_capacity(c.profile, c.constants);
        CHECK(a.sum_rate <= mac * (1 + 1e-12));
        double total_power = 0.0;
        for (double p : c.profile.powers) total_power += p;
        const bool no_oversized = c.constants.total_bandwidth * c.profile.powers[0] / total_power <=
                                  c.profile.limits[0];
        CHECK(no_oversized == (a.classification.oversized_count == 0));
        if (no_oversized)
            CHECK(std::abs(a.sum_rate - mac) <= 1e-12 * std::max(1.0, mac));
        else
            CHECK(a.sum_rate < mac - 1e-12);
    }
}

TEST_CASE("allocation feasibility and PSD structure on random instances") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 1000; ++rep) {
        auto c = testgen::random_fdma(rng, 10);
        auto a = allocate_closed_form(c.profile, c.constants);
        const int users = static_cast<int>(c.profile.size());
        const int k1 = a.classification.oversized_count;
        const int k2 = a.classification.non_undersized_count;

        double total = 0.0;
        for (int k = 0; k < users; ++k) {
            CHECK(a.bandwidths[k] >= 0.0);
            CHECK(a.bandwidths[k] <= c.profile.limits[k] * (1 + 1e-12));
            total += a.bandwidths[k];
        }
        if (k1 < users)
            CHECK(total == doctest::Approx(c.constants.total_bandwidth).epsilon(1e-12));
        else
            CHECK(total <= c.constants.total_bandwidth);

        // Limits bind exactly through the non-undersized boundary.
        for (int k = 0; k < k2; ++k) CHECK(a.bandwidths[k] == c.profile.limits[k]);
        for (int k = k2; k < users; ++k) CHECK(a.bandwidths[k] < c.profile.limits[k]);

        // PSDs: non-increasing, equal over the non-oversized group, and
        // strictly larger for every oversized user.
        for (int k = 1; k < users; ++k) CHECK(a.psds[k - 1] >= a.psds[k] * (1 - 1e-12));
        for (int k = k1; k < users; ++k)
            CHECK(std::abs(a.psds[k] - a.common_psd) <= 1e-10 * a.common_psd);
        for (int k = 0; k < k1; ++k) CHECK(a.psds[k] > a.common_psd * (1 + 1e-10));

        // Every non-oversized user gets at least its proportional share,
        // exactly its share only when no user is oversized.
        double total_power = 0.0;
        for (double p : c.profile.powers) total_power += p;
        for (int k = k1; k < users; ++k) {
            const double share =
                c.constants.total_bandwidth * c.profile.powers[k] / total_power;
            if (k1 == 0)
                CHECK(a.bandwidths[k] == doctest::Approx(share).epsilon(1e-12));
            else
                CHECK(a.bandwidths[k] > share);
        }
    }
}

TEST_CASE("certificate accepts the optimum and rejects perturbations") {
    auto a = allocate_closed_form(fig1_profile(), fig1_constants);
    auto cert = verify_kkt(fig1_profile(), fig1_constants, a.bandwidths);
    CHECK(cert.valid);
    CHECK(cert.common_psd == doctest::Approx(80.0));

    auto perturbed = a.bandwidths;
    perturbed[0] += 1e-3;
    perturbed[1] -= 1e-3;
    CHECK_FALSE(verify_kkt(fig1_profile(), fig1_constants, perturbed).valid);

    // Shifting mass between interior users trips stationarity.
    auto interior = a.bandwidths;
    interior[3] += 1e-3;
    interior[4] -= 1e-3;
    auto bad = verify_kkt(fig1_profile(), fig1_constants, interior);
    CHECK_FALSE(bad.valid);
    CHECK(bad.residuals.stationarity > bad.tolerance);
}

TEST_CASE("certificate multipliers vanish without oversized users") {
    FdmaProfile profile{{2, 1}, {10, 10}};
    FdmaConstants constants{1.0, 0.7};
    auto a = allocate_closed_form(profile, constants);
    REQUIRE(a.classification.oversized_count == 0);
    auto cert = verify_kkt(profile, constants, a.bandwidths);
    CHECK(cert.valid);
    for (double mu : cert.mu_upper) CHECK(mu == 0.0);
    const double s = cert.common_psd;
    CHECK(cert.mu_total ==
          doctest::Approx(std::log1p(s / constants.noise_psd) - s / (constants.noise_psd + s)));
}

TEST_CASE("duty-cycle substitution") {
    // Symmetric users split time evenly.
    FdmaProfile symmetric{std::vector<double>(4, 1.0), std::vector<double>(4, 1.0)};
    auto t = solve_tdma(symmetric, FdmaConstants{2.0, 1.0});
    for (double tk : t.bandwidths) CHECK(tk == doctest::Approx(0.25));

    // The reference instance mapped to duty cycles.
    FdmaProfile duty{{30, 15, 10, 7, 3}, std::vector<double>(5, 0.25)};
    auto a = solve_tdma(duty, FdmaConstants{0.5, 1.0});
    const std::vector<double> expected{0.25, 0.25, 0.25, 0.175, 0.075};
    for (int k = 0; k < 5; ++k) CHECK(a.bandwidths[k] == doctest::Approx(expected[k]).epsilon(1e-13));

    // Identical sum rate to the substituted bandwidth problem.
    auto direct = allocate_closed_form(fig1_profile(), fig1_constants);
    CHECK(a.sum_rate == direct.sum_rate);
}

TEST_CASE("zero-power users get nothing and change nothing") {
    auto a = extend_zero_power(FdmaProfile{{1, 0}, {1, 1}}, FdmaConstants{1, 1});
    CHECK(a.bandwidths == std::vector<double>{1.0, 0.0});

    auto b = extend_zero_power(FdmaProfile{{1, 0, 0}, {0.3, 1, 1}}, FdmaConstants{1, 1});
    CHECK(b.bandwidths == std::vector<double>{0.3, 0.0, 0.0});
    CHECK(b.sum_rate == doctest::Approx(0.3 * std::log2(1.0 + 1.0 / 0.3)));
    CHECK(std::isnan(b.psds[1]));

    FdmaProfile extended = fig1_profile();
    extended.powers.push_back(0.0);
    extended.limits.push_back(1.0 / 8);
    auto with_zero = extend_zero_power(extended, fig1_constants);
    auto without = allocate_closed_form(fig1_profile(), fig1_constants);
    CHECK(with_zero.sum_rate == without.sum_rate);
    for (int k = 0; k < 5; ++k) CHECK(with_zero.bandwidths[k] == without.bandwidths[k]);
    CHECK(with_zero.bandwidths[5] == 0.0);

    CHECK_THROWS_AS(extend_zero_power(FdmaProfile{{0, 0}, {1, 1}}, FdmaConstants{1, 1}),
                    std::invalid_argument);
}

TEST_CASE("independent oracle matches the closed form") {
    auto a = allocate_closed_form(fig1_profile(), fig1_constants);
    auto w = oracle_solve(fig1_profile(), fig1_constants);
    CHECK(std::abs(fdma_sum_rate(fig1_profile(), fig1_constants, w) - a.sum_rate) <= 1e-6);

    // Single user: exact in both regimes.
    CHECK(oracle_solve(FdmaProfile{{2}, {0.4}}, FdmaConstants{1, 1})[0] == 0.4);
    auto w1 = oracle_solve(FdmaProfile{{2}, {3.0}}, FdmaConstants{1, 1});
    CHECK(w1[0] == doctest::Approx(1.0).epsilon(1e-9));

    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 200; ++rep) {
        auto c = testgen::random_fdma(rng, 10, false);
        auto closed = allocate_closed_form(c.profile, c.constants);
        auto oracle = oracle_solve(c.profile, c.constants);
        const double gap = closed.sum_rate - fdma_sum_rate(c.profile, c.constants, oracle);
        CHECK(gap <= 1e-6);
        CHECK(gap >= -1e-9);  // the oracle may not beat the optimum
    }
}
