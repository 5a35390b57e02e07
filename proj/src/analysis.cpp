#include "sumrate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sumrate/cdma.hpp"

namespace sumrate {

namespace {

constexpr double kEfficiencyCeiling = 32.0;  // bits/chip, unreachable at any tested Eb/N0

double splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return (z >> 11) * 0x1.0p-53;
}

}  // namespace

double single_user_efficiency(double ebn0_linear) {
    if (!(ebn0_linear > 0.0) || !std::isfinite(ebn0_linear))
        throw std::invalid_argument("Eb/N0 must be positive and finite");

    auto excess = [&](double c) { return 0.5 * std::log2(1.0 + 2.0 * c * ebn0_linear) - c; };

    // Below the ln 2 threshold the curve never re-crosses zero.
    if (ebn0_linear <= std::log(2.0)) return 0.0;

    double lo = 1e-12;
    if (excess(lo) <= 0.0) return 0.0;
    double hi = kEfficiencyCeiling;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    const double c = 0.5 * (lo + hi);
    if (std::abs(excess(c)) > 1e-12)
        throw std::logic_error("fixed-point bisection failed to converge");
    return c;
}

double symmetric_efficiency(double load, double ebn0_linear) {
    if (load < 0.0) throw std::invalid_argument("load must be non-negative");
    const double single = single_user_efficiency(ebn0_linear);
    return load <= 1.0 ? load * single : single;
}

double symmetric_sum_rate_check(int users, int processing_gain, int limit, double p_tot,
                                double noise_variance) {
    if (users < 1) throw std::invalid_argument("need at least one user");
    if (limit < 1) throw std::invalid_argument("limit must be at least 1");
    if (p_tot < 0.0) throw std::invalid_argument("total power must be non-negative");

    const double load = static_cast<double>(limit) * users / processing_gain;
    const double snr = p_tot / noise_variance;
    double closed;
    if (p_tot == 0.0)
        closed = 0.0;
    else if (load <= 1.0)
        closed = 0.5 * load * std::log2(1.0 + snr / load);
    else
        closed = 0.5 * std::log2(1.0 + snr);

    if (p_tot > 0.0) {
        CdmaInstance instance;
        instance.powers.assign(users, p_tot / users);
        instance.limits.assign(users, limit);
        instance.constants = CdmaConstants{processing_gain, noise_variance};
        const double solved = solve_cdma(instance).sum_rate;
        if (std::abs(solved - closed) > 1e-12 * std::max(1.0, std::abs(closed)))
            throw std::logic_error("closed-form symmetric rate disagrees with the solver");
    }
    return closed;
}

FadingSummary rayleigh_fading_study(const FadingConfig& config) {
    if (config.users < 1 || config.trials < 1)
        throw std::invalid_argument("need at least one user and one trial");
    if (config.limit < 1) throw std::invalid_argument("limit must be at least 1");
    if (config.processing_gain < 1) throw std::invalid_argument("processing gain must be at least 1");

    const double ebn0 = std::pow(10.0, config.mean_ebn0_db / 10.0);
    // Mean power pinned at the nominal (non-faded) unrestricted operating
    // point: p_tot/sigma^2 = 2 (Eb/N0) C with C the single-user efficiency.
    const double noise_variance = 1.0;
    const double nominal_total = 2.0 * ebn0 * single_user_efficiency(ebn0) * noise_variance;
    const double mean_power = nominal_total / config.users;

    const CdmaConstants constants{config.processing_gain, noise_variance};

    FadingSummary summary;
    summary.trials.resize(config.trials);
    for (int t = 0; t < config.trials; ++t) {
        std::uint64_t state = config.seed * 0x2545f4914f6cdd1dull + static_cast<std::uint64_t>(t);
        std::vector<double> powers(config.users);
        for (double& p : powers) {
            double u = splitmix64(state);
            while (u <= 0.0 || u >= 1.0) u = splitmix64(state);
            p = -std::log1p(-u) * mean_power;  // Exp(mean_power) gain
        }
        std::sort(powers.begin(), powers.end(), std::greater<>());

        CdmaInstance instance;
        instance.powers = powers;
        instance.limits.assign(powers.size(), config.limit);
        instance.constants = constants;

        // Complex-baseband convention: rates double, noise pairs to 2 sigma^2.
        FadingTrial trial;
        trial.restricted = 2.0 * solve_cdma(instance).sum_rate;
        trial.unrestricted = 2.0 * cdma_mac_capacity(instance);
        if (trial.restricted > trial.unrestricted * (1.0 + 1e-12))
            throw std::logic_error("restricted rate exceeded the MAC capacity");
        summary.trials[t] = trial;
    }

    for (const auto& trial : summary.trials) {
        summary.mean_restricted += trial.restricted;
        summary.mean_unrestricted += trial.unrestricted;
    }
    summary.mean_restricted /= config.trials;
    summary.mean_unrestricted /= config.trials;
    return summary;
}

}  // namespace sumrate
