#pragma once

#include <optional>

#include "sumrate/fdma.hpp"
#include "sumrate/types.hpp"

namespace sumrate {

/// One restricted multi-code CDMA instance. Core solvers require users
/// sorted by non-increasing p_k / limit_k.
struct CdmaInstance {
    std::vector<double> powers;           ///< p_k >= 0
    std::vector<int> limits;              ///< multi-code upper limits, >= 1
    CdmaConstants constants;
    std::optional<std::vector<int>> delays;  ///< symbol delays in {0..N-1}, asynchronous variant

    std::size_t size() const { return powers.size(); }
};

enum class SplitStrategy { EqualPower, MinCountMaxOrthogonal };

/// Per-stream split of the per-user aggregates: equivalent bandwidths
/// w_{k,l}, powers p_{k,l}, and resulting active stream counts.
struct StreamSplit {
    std::vector<std::vector<double>> bandwidths;
    std::vector<std::vector<double>> powers;
    std::vector<int> active_counts;  ///< n*_k = number of positive-power streams
};

/// Joint solution of the multi-code problem.
struct CdmaSolution {
    std::vector<double> equivalent_bandwidths;  ///< w*_k = sum_l w*_{k,l}
    std::vector<double> equivalent_duty_cycles; ///< t*_k = 2 w*_k
    StreamSplit split;
    Classification classification;
    double sum_rate = 0.0;   ///< bits/chip (real signaling)
    bool achieves_mac = false;
};

/// Largest/smallest per-user stream counts that retain the maximum sum
/// rate: the most orthogonal sequences usable, and the fewest active
/// sequences needed. Both are achieved simultaneously by the
/// MinCountMaxOrthogonal split.
struct StreamCounts {
    std::vector<int> max_orthogonal;
    std::vector<int> min_active;
};

void validate(const CdmaInstance& instance);

/// The restricted FDMA instance the CDMA instance is equivalent to:
/// bandwidth limits n̄_k/(2N), total bandwidth 1/2, noise PSD 2σ².
FdmaProfile equivalent_fdma_profile(const CdmaInstance& instance);
FdmaConstants equivalent_fdma_constants(const CdmaConstants& constants);

/// Classifies multi-code users through the equivalent FDMA instance.
/// Works for any loading. test_values are the multi-code test numbers
/// n̂_k = 2N * ŵ_k.
Classification classify_multicode(const CdmaInstance& instance);

/// Per-user equivalent bandwidths in the chosen boundary form.
std::vector<double> equivalent_bandwidths(const CdmaInstance& instance, BoundaryForm form);

/// Splits per-user aggregates into per-stream bandwidths and powers.
/// EqualPower spreads everything evenly; MinCountMaxOrthogonal fills
/// streams to the 1/(2N) cap and puts any remainder on one extra
/// stream, realizing max n^⊥ and min n* at once.
///
/// Throws std::invalid_argument if some w*_k falls outside [0, n̄_k/(2N)].
StreamSplit choose_stream_split(const CdmaInstance& instance,
                                const std::vector<double>& equivalent_bandwidths,
                                SplitStrategy strategy);

/// Full solve: classification, equivalent bandwidths (both boundary
/// forms cross-checked), stream split, maximum sum rate in bits/chip,
/// and the sum-capacity flag.
CdmaSolution solve_cdma(const CdmaInstance& instance,
                        SplitStrategy strategy = SplitStrategy::EqualPower);

/// Stream-count extremes straight from the boundary-form expressions.
StreamCounts stream_count_extremes(const CdmaInstance& instance);

/// True iff no user is oversized, which holds iff N p_1 / sum(p) <= n̄_1;
/// exactly then the maximum sum rate equals the MAC sum capacity.
bool achieves_mac_capacity(const CdmaInstance& instance);

/// MAC sum capacity of the equivalent channel, in bits/chip.
double cdma_mac_capacity(const CdmaInstance& instance);

/// Smallest per-user multi-code limits that make the instance achieve
/// the MAC sum capacity: ceil(N p_k / sum(p)) (at least 1). The entries
/// total at most N + K - 1.
std::vector<int> minimal_upper_limit_profile(const std::vector<double>& powers,
                                             int processing_gain);

/// Maximum sum rate of the symbol-asynchronous, chip-synchronous
/// variant: delays are validated and the synchronous value is returned,
/// which is what the asynchronous equality asserts.
double async_sum_rate(const CdmaInstance& instance);

}  // namespace sumrate
