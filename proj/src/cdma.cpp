#include "sumrate/cdma.hpp"

#include <algorithm>
#include <cmath>

#include "sumrate/fdma.hpp"

namespace sumrate {

namespace {

// floor/ceil of 2N w with ties to the nearest integer snapped first, so
// that an exactly-integral stream count never straddles the boundary.
double snap_integral(double x) {
    const double r = std::round(x);
    return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? r : x;
}

}  // namespace

void validate(const CdmaInstance& instance) {
    validate(instance.constants);
    if (instance.powers.empty())
        throw std::invalid_argument("instance must contain at least one user");
    if (instance.limits.size() != instance.powers.size())
        throw std::invalid_argument("powers and limits must have equal length");
    bool any_positive = false;
    for (double p : instance.powers) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("powers must be non-negative and finite");
        any_positive |= p > 0.0;
    }
    if (!any_positive)
        throw std::invalid_argument("at least one user must have positive power");
    for (int n : instance.limits)
        if (n < 1) throw std::invalid_argument("multi-code limits must be at least 1");
    if (instance.delays) {
        if (instance.delays->size() != instance.powers.size())
            throw std::invalid_argument("delay profile length must match the user count");
        for (int tau : *instance.delays)
            if (tau < 0 || tau >= instance.constants.processing_gain)
                throw std::invalid_argument("delays must lie in {0..N-1}");
    }
}

FdmaProfile equivalent_fdma_profile(const CdmaInstance& instance) {
    const double denom = 2.0 * instance.constants.processing_gain;
    FdmaProfile profile;
    profile.powers = instance.powers;
    profile.limits.reserve(instance.limits.size());
    for (int n : instance.limits) profile.limits.push_back(n / denom);
    return profile;
}

FdmaConstants equivalent_fdma_constants(const CdmaConstants& constants) {
    return FdmaConstants{0.5, 2.0 * constants.noise_variance};
}

Classification classify_multicode(const CdmaInstance& instance) {
    validate(instance);
    Classification c =
        classify(equivalent_fdma_profile(instance), equivalent_fdma_constants(instance.constants));
    // Report the test numbers on the multi-code scale.
    for (double& v : c.test_values) v *= 2.0 * instance.constants.processing_gain;
    return c;
}

std::vector<double> equivalent_bandwidths(const CdmaInstance& instance, BoundaryForm form) {
    validate(instance);
    const FdmaProfile profile = equivalent_fdma_profile(instance);
    const FdmaConstants constants = equivalent_fdma_constants(instance.constants);
    return closed_form_bandwidths(profile, constants, classify(profile, constants), form);
}

StreamSplit choose_stream_split(const CdmaInstance& instance,
                                const std::vector<double>& equivalent_bandwidths,
                                SplitStrategy strategy) {
    validate(instance);
    if (equivalent_bandwidths.size() != instance.size())
        throw std::invalid_argument("equivalent bandwidth vector length must match the user count");
    const int user_count = static_cast<int>(instance.size());
    const double two_n = 2.0 * instance.constants.processing_gain;
    const double cap = 1.0 / two_n;

    StreamSplit split;
    split.bandwidths.resize(user_count);
    split.powers.resize(user_count);
    split.active_counts.resize(user_count);

    for (int k = 0; k < user_count; ++k) {
        const int streams = instance.limits[k];
        const double w_k = equivalent_bandwidths[k];
        if (w_k < -1e-15 || w_k > streams * cap * (1.0 + kTieRelTol))
            throw std::invalid_argument("equivalent bandwidth outside [0, limit/(2N)]");
        auto& w = split.bandwidths[k];
        auto& p = split.powers[k];
        w.assign(streams, 0.0);
        p.assign(streams, 0.0);

        if (strategy == SplitStrategy::EqualPower) {
            for (int l = 0; l < streams; ++l) {
                w[l] = w_k / streams;
                p[l] = instance.powers[k] / streams;
            }
        } else {
            const double scaled = snap_integral(two_n * w_k);
            int full = static_cast<int>(std::floor(scaled));
            full = std::min(full, streams);
            for (int l = 0; l < full; ++l) w[l] = cap;
            // Reconcile against w_k so the streams sum to it exactly.
            const double remainder = w_k - full * cap;
            if (scaled - full > 0.0 && full < streams)
                w[full] = remainder;
            else if (full > 0)
                w[full - 1] += remainder;
            if (w_k > 0.0)
                for (int l = 0; l < streams; ++l) p[l] = (w[l] / w_k) * instance.powers[k];
        }
        int active = 0;
        for (double pl : p) active += pl > 0.0 ? 1 : 0;
        split.active_counts[k] = active;
    }
    return split;
}

CdmaSolution solve_cdma(const CdmaInstance& instance, SplitStrategy strategy) {
    validate(instance);
    for (double p : instance.powers)
        if (!(p > 0.0)) throw std::invalid_argument("solve requires positive powers");

    const FdmaProfile profile = equivalent_fdma_profile(instance);
    const FdmaConstants constants = equivalent_fdma_constants(instance.constants);
    Allocation allocation = allocate_closed_form(profile, constants);

    CdmaSolution solution;
    solution.equivalent_bandwidths = allocation.bandwidths;
    solution.equivalent_duty_cycles.reserve(allocation.bandwidths.size());
    for (double w : allocation.bandwidths) solution.equivalent_duty_cycles.push_back(2.0 * w);
    solution.classification = allocation.classification;
    for (double& v : solution.classification.test_values)
        v *= 2.0 * instance.constants.processing_gain;
    solution.sum_rate = allocation.sum_rate;
    solution.split = choose_stream_split(instance, solution.equivalent_bandwidths, strategy);
    solution.achieves_mac = solution.classification.oversized_count == 0;

    // The optimal power distribution for non-undersized users is the
    // unique even split; for undersized users it follows the stream
    // bandwidths, which choose_stream_split already encodes.
    const int k2 = solution.classification.non_undersized_count;
    for (int k = 0; k < k2; ++k) {
        const int streams = instance.limits[k];
        for (int l = 0; l < streams; ++l) {
            solution.split.bandwidths[k][l] = 0.5 / instance.constants.processing_gain;
            solution.split.powers[k][l] = instance.powers[k] / streams;
        }
        solution.split.active_counts[k] = streams;
    }
    return solution;
}

StreamCounts stream_count_extremes(const CdmaInstance& instance) {
    const Classification classification = classify_multicode(instance);
    const int user_count = static_cast<int>(instance.size());
    const int k2 = classification.non_undersized_count;

    double dimensions_left = instance.constants.processing_gain;
    double tail_power = 0.0;
    for (int k = 0; k < user_count; ++k) {
        if (k < k2)
            dimensions_left -= instance.limits[k];
        else
            tail_power += instance.powers[k];
    }

    StreamCounts counts;
    counts.max_orthogonal.resize(user_count);
    counts.min_active.resize(user_count);
    for (int k = 0; k < user_count; ++k) {
        if (k < k2) {
            counts.max_orthogonal[k] = instance.limits[k];
            counts.min_active[k] = instance.limits[k];
        } else {
            const double share = snap_integral(dimensions_left * instance.powers[k] / tail_power);
            counts.max_orthogonal[k] = static_cast<int>(std::floor(share));
            counts.min_active[k] = static_cast<int>(std::ceil(share));
        }
    }
    return counts;
}

bool achieves_mac_capacity(const CdmaInstance& instance) {
    return classify_multicode(instance).oversized_count == 0;
}

double cdma_mac_capacity(const CdmaInstance& instance) {
    validate(instance);
    return mac_sum_capacity(equivalent_fdma_profile(instance),
                            equivalent_fdma_constants(instance.constants));
}

std::vector<int> minimal_upper_limit_profile(const std::vector<double>& powers,
                                             int processing_gain) {
    if (processing_gain < 1)
        throw std::invalid_argument("processing gain must be at least 1");
    double total = 0.0;
    for (double p : powers) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("powers must be non-negative and finite");
        total += p;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("at least one user must have positive power");

    std::vector<int> limits;
    limits.reserve(powers.size());
    for (double p : powers) {
        const double share = snap_integral(processing_gain * p / total);
        limits.push_back(std::max(1, static_cast<int>(std::ceil(share))));
    }
    return limits;
}

double async_sum_rate(const CdmaInstance& instance) {
    validate(instance);
    if (!instance.delays)
        throw std::invalid_argument("asynchronous evaluation requires a delay profile");
    // Delays do not change the maximum sum rate; the synchronous value
    // carries over unchanged.
    return solve_cdma(instance).sum_rate;
}

}  // namespace sumrate
