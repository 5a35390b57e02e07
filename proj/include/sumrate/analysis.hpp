#pragma once

#include <cstdint>
#include <vector>

namespace sumrate {

/// Spectral efficiency of the optimal single-user AWGN system: the
/// largest non-negative C with C = (1/2) log2(1 + 2 C Eb/N0), found by
/// bisection to a back-substitution residual below 1e-12. Returns 0 at
/// or below the Eb/N0 = ln 2 threshold (-1.59 dB), where only the
/// trivial root exists.
///
/// Throws std::invalid_argument for non-positive Eb/N0.
double single_user_efficiency(double ebn0_linear);

/// Spectral efficiency (bits/chip) of the sum-rate optimal system with
/// symmetric powers and an equal limit, as a function of the effective
/// load n̄K/N: linear up to load 1, flat beyond.
double symmetric_efficiency(double load, double ebn0_linear);

/// Closed-form symmetric sum rate (bits/chip) at total power p_tot; the
/// value is cross-checked against the full solver on the symmetric
/// instance and a std::logic_error is thrown if they disagree beyond
/// 1e-12.
double symmetric_sum_rate_check(int users, int processing_gain, int limit, double p_tot,
                                double noise_variance);

struct FadingConfig {
    int users = 0;
    int processing_gain = 0;
    int limit = 1;              ///< equal multi-code limit
    double mean_ebn0_db = 10.0; ///< average bit energy per noise density
    int trials = 1;
    std::uint64_t seed = 0;
};

struct FadingTrial {
    double restricted = 0.0;    ///< bps/Hz, limit enforced
    double unrestricted = 0.0;  ///< bps/Hz, MAC sum capacity
};

struct FadingSummary {
    double mean_restricted = 0.0;
    double mean_unrestricted = 0.0;
    std::vector<FadingTrial> trials;
};

/// Monte-Carlo Rayleigh flat-fading study: each trial draws unit-mean
/// exponential power gains, scales them to the configured operating
/// point, and evaluates the restricted and unrestricted efficiencies in
/// the complex-baseband convention (bps/Hz). Trials are derived from
/// counter-based per-trial seeds, so results are reproducible and
/// independent of evaluation order.
FadingSummary rayleigh_fading_study(const FadingConfig& config);

}  // namespace sumrate
