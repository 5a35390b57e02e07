#pragma once

// Random instance generators shared by the unit and acceptance suites.
// Instances are drawn in general position: draws whose classification
// margin min_k |test_k - limit_k| / limit_k falls below kMargin are
// rejected, because the boundary biconditionals under test are not
// decidable in floating point exactly at a tie.

#include <random>

#include "sumrate/cdma.hpp"
#include "sumrate/fdma.hpp"

namespace testgen {

inline constexpr double kMargin = 1e-4;

struct FdmaCase {
    sumrate::FdmaProfile profile;  // sorted, positive powers
    sumrate::FdmaConstants constants;
};

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

inline FdmaCase random_fdma(std::mt19937_64& rng, int max_users, bool margin_guard = true) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
        FdmaCase c;
        c.constants.total_bandwidth = log_uniform(rng, 0.2, 5.0);
        c.constants.noise_psd = log_uniform(rng, 0.25, 4.0);
        const int users = 1 + static_cast<int>(rng() % max_users);
        for (int k = 0; k < users; ++k) {
            c.profile.powers.push_back(log_uniform(rng, 1e-2, 1e2));
            c.profile.limits.push_back(log_uniform(rng, 0.02, 1.0) * c.constants.total_bandwidth);
        }
        const auto order = sumrate::order_users(c.profile);
        c.profile.powers = sumrate::permute(c.profile.powers, order.permutation);
        c.profile.limits = sumrate::permute(c.profile.limits, order.permutation);
        if (!margin_guard) return c;
        const auto cls = sumrate::classify(c.profile, c.constants);
        bool ok = true;
        for (int k = 0; k < users && ok; ++k)
            ok = std::abs(cls.test_values[k] - c.profile.limits[k]) >=
                 kMargin * c.profile.limits[k];
        if (ok) return c;
    }
}

inline sumrate::CdmaInstance random_cdma(std::mt19937_64& rng, int max_users, int max_gain,
                                         int max_limit, bool margin_guard = true) {
    for (;;) {
        sumrate::CdmaInstance instance;
        const int users = 1 + static_cast<int>(rng() % max_users);
        instance.constants.processing_gain = 2 + static_cast<int>(rng() % (max_gain - 1));
        instance.constants.noise_variance = log_uniform(rng, 0.25, 4.0);
        for (int k = 0; k < users; ++k) {
            instance.powers.push_back(log_uniform(rng, 0.05, 20.0));
            instance.limits.push_back(1 + static_cast<int>(rng() % max_limit));
        }
        std::vector<int> idx(users);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
            return instance.powers[a] / instance.limits[a] >
                   instance.powers[b] / instance.limits[b];
        });
        sumrate::CdmaInstance sorted;
        sorted.constants = instance.constants;
        for (int i : idx) {
            sorted.powers.push_back(instance.powers[i]);
            sorted.limits.push_back(instance.limits[i]);
        }
        if (!margin_guard) return sorted;
        const auto cls = sumrate::classify_multicode(sorted);
        bool ok = true;
        for (int k = 0; k < users && ok; ++k)
            ok = std::abs(cls.test_values[k] - sorted.limits[k]) >= kMargin * sorted.limits[k];
        if (ok) return sorted;
    }
}

}  // namespace testgen
