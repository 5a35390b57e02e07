#include "sumrate/fdma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sumrate {

namespace {

// w log2(1 + p/(n0 w)), continuously extended to 0 at w = 0.
double rate_term(double w, double p, double n0) {
    if (w <= 0.0 || p <= 0.0) return 0.0;
    return w * std::log2(1.0 + p / (n0 * w));
}

// Derivative of w ln(1 + p/(N0 w)) with respect to w, written in terms
// of the PSD x = p/w. Strictly increasing in x, zero at x = 0.
double psd_gradient(double x, double n0) {
    return std::log1p(x / n0) - x / (n0 + x);
}

void require_sorted_positive(const FdmaProfile& profile) {
    validate(profile);
    for (double p : profile.powers)
        if (!(p > 0.0)) throw std::invalid_argument("all powers must be positive here");
    if (!is_sorted_by_minimal_psd(profile))
        throw std::invalid_argument("profile must be sorted by non-increasing minimal PSD");
}

std::vector<double> suffix_power_sums(const std::vector<double>& powers) {
    std::vector<double> suffix(powers.size() + 1, 0.0);
    for (std::size_t k = powers.size(); k-- > 0;) suffix[k] = suffix[k + 1] + powers[k];
    return suffix;
}

bool over_limit(double due, double limit) {
    return due > limit && !nearly_equal_rel(due, limit);
}

}  // namespace

Classification classify(const FdmaProfile& profile, const FdmaConstants& constants) {
    require_sorted_positive(profile);
    validate(constants);
    const int user_count = static_cast<int>(profile.size());
    const auto suffix = suffix_power_sums(profile.powers);

    Classification c;
    c.labels.resize(user_count);
    c.test_values.resize(user_count);
    double remaining = constants.total_bandwidth;
    for (int k = 0; k < user_count; ++k) {
        c.test_values[k] = remaining * profile.powers[k] / suffix[k];
        remaining -= profile.limits[k];
    }

    // Oversized users form a prefix and undersized users a suffix, so a
    // single forward scan fixes both boundary counts.
    int k1 = 0;
    while (k1 < user_count && over_limit(c.test_values[k1], profile.limits[k1])) ++k1;
    int k2 = k1;
    while (k2 < user_count && nearly_equal_rel(c.test_values[k2], profile.limits[k2])) ++k2;

    c.oversized_count = k1;
    c.non_undersized_count = k2;
    for (int k = 0; k < user_count; ++k)
        c.labels[k] = k < k1   ? SizeClass::Oversized
                      : k < k2 ? SizeClass::CriticallySized
                               : SizeClass::Undersized;
    return c;
}

std::vector<double> closed_form_bandwidths(const FdmaProfile& profile,
                                           const FdmaConstants& constants,
                                           const Classification& classification,
                                           BoundaryForm form) {
    const int user_count = static_cast<int>(profile.size());
    const int boundary = form == BoundaryForm::Oversized ? classification.oversized_count
                                                         : classification.non_undersized_count;
    std::vector<double> bandwidths(user_count);
    double residual = constants.total_bandwidth;
    for (int k = 0; k < boundary; ++k) {
        bandwidths[k] = profile.limits[k];
        residual -= profile.limits[k];
    }
    if (boundary < user_count) {
        double tail_power = 0.0;
        for (int k = boundary; k < user_count; ++k) tail_power += profile.powers[k];
        for (int k = boundary; k < user_count; ++k)
            bandwidths[k] = residual * profile.powers[k] / tail_power;
    }
    return bandwidths;
}

namespace {

Allocation finish_allocation(const FdmaProfile& profile, const FdmaConstants& constants,
                             Classification classification, std::vector<double> bandwidths) {
    const int user_count = static_cast<int>(profile.size());
    const int k1 = classification.oversized_count;

    Allocation a;
    a.bandwidths = std::move(bandwidths);
    a.classification = std::move(classification);

    double capped_bw = 0.0;
    double tail_power = 0.0;
    for (int k = 0; k < user_count; ++k) {
        if (k < k1)
            capped_bw += profile.limits[k];
        else
            tail_power += profile.powers[k];
    }
    a.common_psd = k1 == user_count ? 0.0 : tail_power / (constants.total_bandwidth - capped_bw);

    // Maximum sum rate in the non-undersized boundary form: capped users
    // term by term plus one aggregate term for the proportional group.
    const int k2 = a.classification.non_undersized_count;
    double rate = 0.0;
    double residual = constants.total_bandwidth;
    double tail_after_k2 = 0.0;
    for (int k = 0; k < k2; ++k) {
        rate += rate_term(profile.limits[k], profile.powers[k], constants.noise_psd);
        residual -= profile.limits[k];
    }
    for (int k = k2; k < user_count; ++k) tail_after_k2 += profile.powers[k];
    if (k2 < user_count) rate += rate_term(residual, tail_after_k2, constants.noise_psd);
    a.sum_rate = rate;

    a.psds.resize(user_count);
    for (int k = 0; k < user_count; ++k)
        a.psds[k] = a.bandwidths[k] > 0.0 ? profile.powers[k] / a.bandwidths[k]
                                          : std::numeric_limits<double>::quiet_NaN();
    return a;
}

}  // namespace

Allocation allocate_closed_form(const FdmaProfile& profile, const FdmaConstants& constants) {
    Classification classification = classify(profile, constants);
    std::vector<double> bandwidths =
        closed_form_bandwidths(profile, constants, classification, BoundaryForm::NonUndersized);
    return finish_allocation(profile, constants, std::move(classification), std::move(bandwidths));
}

Allocation allocate_iterative(const FdmaProfile& profile, const FdmaConstants& constants,
                              bool record_trace) {
    require_sorted_positive(profile);
    validate(constants);
    const int user_count = static_cast<int>(profile.size());
    const auto suffix = suffix_power_sums(profile.powers);

    std::vector<double> bandwidths(user_count, 0.0);
    std::vector<double> examined_due(user_count, 0.0);
    std::vector<std::vector<double>> trace;
    double remaining_bw = constants.total_bandwidth;
    int head = 0;  // users before head are capped and off the list

    while (head < user_count) {
        const double list_power = suffix[head];
        std::vector<double> due(user_count - head);
        for (int k = head; k < user_count; ++k)
            due[k - head] = remaining_bw * profile.powers[k] / list_power;
        if (record_trace) {
            std::vector<double> snapshot(bandwidths.begin(), bandwidths.begin() + head);
            snapshot.insert(snapshot.end(), due.begin(), due.end());
            trace.push_back(std::move(snapshot));
        }
        if (over_limit(due[0], profile.limits[head])) {
            examined_due[head] = due[0];
            bandwidths[head] = profile.limits[head];
            remaining_bw -= profile.limits[head];
            ++head;
        } else {
            for (int k = head; k < user_count; ++k) {
                examined_due[k] = due[k - head];
                bandwidths[k] = due[k - head];
            }
            break;
        }
    }

    Classification c;
    c.oversized_count = head < user_count ? head : user_count;
    int k2 = c.oversized_count;
    while (k2 < user_count && nearly_equal_rel(bandwidths[k2], profile.limits[k2])) ++k2;
    c.non_undersized_count = k2;
    c.labels.resize(user_count);
    for (int k = 0; k < user_count; ++k)
        c.labels[k] = k < c.oversized_count ? SizeClass::Oversized
                      : k < k2              ? SizeClass::CriticallySized
                                            : SizeClass::Undersized;
    c.test_values = std::move(examined_due);

    Allocation a = finish_allocation(profile, constants, std::move(c), std::move(bandwidths));
    a.trace = std::move(trace);
    return a;
}

double fdma_sum_rate(const FdmaProfile& profile, const FdmaConstants& constants,
                     const std::vector<double>& bandwidths) {
    validate(constants);
    if (bandwidths.size() != profile.size())
        throw std::invalid_argument("bandwidth vector length must match the profile");
    double rate = 0.0;
    for (std::size_t k = 0; k < bandwidths.size(); ++k)
        rate += rate_term(bandwidths[k], profile.powers[k], constants.noise_psd);
    return rate;
}

double mac_sum_capacity(const FdmaProfile& profile, const FdmaConstants& constants) {
    validate(constants);
    double total_power = 0.0;
    for (double p : profile.powers) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("powers must be non-negative and finite");
        total_power += p;
    }
    return rate_term(constants.total_bandwidth, total_power, constants.noise_psd);
}

KktCertificate verify_kkt(const FdmaProfile& profile, const FdmaConstants& constants,
                          const std::vector<double>& bandwidths, double tolerance) {
    require_sorted_positive(profile);
    validate(constants);
    if (bandwidths.size() != profile.size())
        throw std::invalid_argument("bandwidth vector length must match the profile");
    const int user_count = static_cast<int>(profile.size());
    const Classification classification = classify(profile, constants);
    const int k1 = classification.oversized_count;
    const double n0 = constants.noise_psd;

    double capped_bw = 0.0, tail_power = 0.0;
    for (int k = 0; k < user_count; ++k) {
        if (k < k1)
            capped_bw += profile.limits[k];
        else
            tail_power += profile.powers[k];
    }
    const double s = k1 == user_count ? 0.0 : tail_power / (constants.total_bandwidth - capped_bw);
    const double grad_s = psd_gradient(s, n0);

    KktCertificate cert;
    cert.common_psd = s;
    cert.mu_total = grad_s;
    cert.mu_lower.assign(user_count, 0.0);
    cert.mu_upper.assign(user_count, 0.0);
    for (int k = 0; k < k1; ++k)
        cert.mu_upper[k] = psd_gradient(profile.powers[k] / profile.limits[k], n0) - grad_s;

    auto& r = cert.residuals;
    double grad_scale = std::abs(grad_s);
    double total_bw = 0.0;
    for (int k = 0; k < user_count; ++k) {
        const double w = bandwidths[k];
        total_bw += w;
        double grad_k;
        if (w > 0.0) {
            grad_k = psd_gradient(profile.powers[k] / w, n0);
        } else {
            // Objective gradient is unbounded as w -> 0 for positive power.
            grad_k = std::numeric_limits<double>::infinity();
        }
        grad_scale = std::max(grad_scale, std::isfinite(grad_k) ? std::abs(grad_k) : 0.0);
        r.stationarity = std::max(
            r.stationarity, std::abs(grad_k - cert.mu_upper[k] + cert.mu_lower[k] - cert.mu_total));
        r.primal_upper = std::max(r.primal_upper, w - profile.limits[k]);
        r.primal_lower = std::max(r.primal_lower, -w);
        r.dual_upper = std::max(r.dual_upper, -cert.mu_upper[k]);
        r.dual_lower = std::max(r.dual_lower, -cert.mu_lower[k]);
        r.slack_upper = std::max(r.slack_upper, std::abs(cert.mu_upper[k] * (w - profile.limits[k])));
        r.slack_lower = std::max(r.slack_lower, std::abs(cert.mu_lower[k] * w));
    }
    r.primal_upper = std::max(r.primal_upper, 0.0);
    r.primal_lower = std::max(r.primal_lower, 0.0);
    r.dual_upper = std::max(r.dual_upper, 0.0);
    r.dual_lower = std::max(r.dual_lower, 0.0);
    r.primal_total = std::max(0.0, total_bw - constants.total_bandwidth);
    r.dual_total = std::max(0.0, -cert.mu_total);
    r.slack_total = std::abs(cert.mu_total * (total_bw - constants.total_bandwidth));

    const double scale = std::max({1.0, constants.total_bandwidth, grad_scale});
    cert.tolerance = tolerance * scale;
    cert.valid = cert.residuals.max() <= cert.tolerance;
    return cert;
}

Allocation solve_tdma(const FdmaProfile& duty_profile, const FdmaConstants& constants) {
    validate(constants);
    FdmaProfile substituted = duty_profile;
    for (double& limit : substituted.limits) limit *= constants.total_bandwidth;
    Allocation a = allocate_closed_form(substituted, constants);
    for (double& w : a.bandwidths) w /= constants.total_bandwidth;
    return a;
}

Allocation extend_zero_power(const FdmaProfile& profile, const FdmaConstants& constants) {
    validate(profile);
    validate(constants);
    const UserOrder order = order_users(profile);
    FdmaProfile sorted{permute(profile.powers, order.permutation),
                       permute(profile.limits, order.permutation)};

    // Zero-power users have minimal PSD 0 and sort to the back.
    int active = static_cast<int>(sorted.size());
    while (active > 0 && sorted.powers[active - 1] == 0.0) --active;

    FdmaProfile head{{sorted.powers.begin(), sorted.powers.begin() + active},
                     {sorted.limits.begin(), sorted.limits.begin() + active}};
    Allocation solved = allocate_closed_form(head, constants);

    std::vector<double> bandwidths(sorted.size(), 0.0);
    std::copy(solved.bandwidths.begin(), solved.bandwidths.end(), bandwidths.begin());

    Allocation a;
    a.bandwidths = unpermute(bandwidths, order.permutation);
    a.classification = std::move(solved.classification);  // active users, sorted order
    a.sum_rate = solved.sum_rate;
    a.common_psd = solved.common_psd;
    a.psds.resize(sorted.size());
    for (std::size_t k = 0; k < a.psds.size(); ++k)
        a.psds[k] = a.bandwidths[k] > 0.0 ? profile.powers[k] / a.bandwidths[k]
                                          : std::numeric_limits<double>::quiet_NaN();
    return a;
}

std::vector<double> oracle_solve(const FdmaProfile& profile, const FdmaConstants& constants,
                                 double tolerance) {
    validate(profile);
    validate(constants);
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    const int user_count = static_cast<int>(profile.size());
    const double n0 = constants.noise_psd;
    const double w_tot = constants.total_bandwidth;

    double limit_sum = 0.0;
    for (double w : profile.limits) limit_sum += w;
    if (limit_sum <= w_tot) return profile.limits;  // every box constraint binds

    // For multiplier mu > 0 the stationarity condition fixes one PSD
    // ratio rho = p/(N0 w) shared by all unclamped users.
    auto rho_for = [&](double mu) {
        double hi = 1.0;
        int expand = 0;
        while (psd_gradient(hi, 1.0) < mu) {
            hi *= 2.0;
            if (++expand > 200) throw std::runtime_error("oracle bracket expansion failed");
        }
        double lo = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            (psd_gradient(mid, 1.0) < mu ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto bandwidth_sum = [&](double mu, std::vector<double>* out) {
        const double rho = rho_for(mu);
        double sum = 0.0;
        for (int k = 0; k < user_count; ++k) {
            const double w =
                profile.powers[k] > 0.0
                    ? std::min(profile.limits[k], profile.powers[k] / (n0 * rho))
                    : 0.0;
            if (out) (*out)[k] = w;
            sum += w;
        }
        return sum;
    };

    double mu_hi = 1.0;
    int expand = 0;
    while (bandwidth_sum(mu_hi, nullptr) > w_tot) {
        mu_hi *= 2.0;
        if (++expand > 200) throw std::runtime_error("oracle multiplier bracket failed");
    }
    double mu_lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (mu_lo + mu_hi);
        (bandwidth_sum(mid, nullptr) > w_tot ? mu_lo : mu_hi) = mid;
    }

    std::vector<double> bandwidths(user_count, 0.0);
    const double total = bandwidth_sum(mu_hi, &bandwidths);
    if (std::abs(total - w_tot) > std::max(tolerance, 1e-9) * w_tot)
        throw std::runtime_error("oracle bisection did not converge");
    if (total > w_tot)
        for (double& w : bandwidths) w *= w_tot / total;
    return bandwidths;
}

}  // namespace sumrate
