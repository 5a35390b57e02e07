#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sumrate {

/// System constants of the restricted FDMA/TDMA problems.
struct FdmaConstants {
    double total_bandwidth = 0.0;  ///< w_tot [Hz], > 0
    double noise_psd = 0.0;        ///< N0, one-sided [W/Hz], > 0
};

/// System constants of the multi-code CDMA problem.
struct CdmaConstants {
    int processing_gain = 0;       ///< chips per symbol, >= 1
    double noise_variance = 0.0;   ///< sigma^2 per real dimension, > 0
};

/// Per-user powers and bandwidth upper limits, one entry per user.
/// Core solvers require the profile sorted by non-increasing minimal
/// PSD p_k/limit_k; front ends sort on input and un-permute on output.
struct FdmaProfile {
    std::vector<double> powers;  ///< average powers p_k >= 0, at least one positive
    std::vector<double> limits;  ///< bandwidth upper limits, finite and > 0

    std::size_t size() const { return powers.size(); }
};

/// Result of sorting users by non-increasing minimal PSD.
struct UserOrder {
    std::vector<int> permutation;      ///< sorted index -> original index
    std::vector<double> minimal_psds;  ///< p/limit after sorting, non-increasing
};

enum class SizeClass : std::uint8_t { Oversized, CriticallySized, Undersized };

/// Outcome of the per-user sizing test, in sorted user order.
/// Oversized users occupy indices [0, K1), critically-sized [K1, K2),
/// undersized [K2, K).
struct Classification {
    std::vector<SizeClass> labels;
    int oversized_count = 0;       ///< K1
    int non_undersized_count = 0;  ///< K2
    std::vector<double> test_values;  ///< the per-user due-share test value
};

/// Optimal allocation for one restricted FDMA/TDMA instance, in the
/// order of the profile it was computed from.
struct Allocation {
    std::vector<double> bandwidths;  ///< w*_k (or duty cycles t*_k for TDMA)
    Classification classification;
    double sum_rate = 0.0;           ///< base-2 rate (bits/s; bits/chip for CDMA-derived instances)
    std::vector<double> psds;        ///< p_k / w*_k; NaN where w*_k = 0
    double common_psd = 0.0;         ///< shared PSD s of non-oversized users (0 when all oversized)
    /// Per-iteration tentative allocations (capped users at their limits,
    /// remaining users at current due shares). Populated by the iterative
    /// solver only.
    std::vector<std::vector<double>> trace;
};

/// Dual variables and per-condition residuals of the allocation
/// optimality certificate.
struct KktCertificate {
    std::vector<double> mu_upper;  ///< multipliers of w_k <= limit_k
    std::vector<double> mu_lower;  ///< multipliers of w_k >= 0 (identically zero here)
    double mu_total = 0.0;         ///< multiplier of the total-bandwidth constraint
    double common_psd = 0.0;       ///< s used to build the multipliers

    struct Residuals {
        double stationarity = 0.0;
        double primal_upper = 0.0;
        double primal_lower = 0.0;
        double primal_total = 0.0;
        double dual_upper = 0.0;
        double dual_lower = 0.0;
        double dual_total = 0.0;
        double slack_upper = 0.0;
        double slack_lower = 0.0;
        double slack_total = 0.0;

        double max() const;
    } residuals;

    double tolerance = 0.0;  ///< validity threshold the residuals were checked against
    bool valid = false;      ///< true iff every residual <= tolerance
};

/// Relative tolerance for the critically-sized boundary test and other
/// tie detection. Exact ties occur in constructed instances; floating
/// point needs a band around them.
inline constexpr double kTieRelTol = 1e-9;

inline bool nearly_equal_rel(double a, double b, double rtol = kTieRelTol) {
    return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b));
}

void validate(const FdmaConstants& c);
void validate(const CdmaConstants& c);

/// Throws std::invalid_argument unless sizes match, limits are positive
/// and finite, powers are non-negative and at least one is positive.
void validate(const FdmaProfile& profile);

/// Sorts users by non-increasing p_k/limit_k. Stable: ties keep the
/// original relative order.
UserOrder order_users(const FdmaProfile& profile);

bool is_sorted_by_minimal_psd(const FdmaProfile& profile);

/// Applies a UserOrder permutation: out[i] = values[permutation[i]].
std::vector<double> permute(const std::vector<double>& values, const std::vector<int>& permutation);

/// Inverse of permute: out[permutation[i]] = values[i].
std::vector<double> unpermute(const std::vector<double>& values, const std::vector<int>& permutation);

}  // namespace sumrate
