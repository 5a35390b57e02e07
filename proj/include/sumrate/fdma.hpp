#pragma once

#include "sumrate/types.hpp"

namespace sumrate {

/// Which boundary index the closed-form bandwidth expression is written
/// around. Both give the same allocation; evaluating the two routes and
/// comparing is part of the test oracle.
enum class BoundaryForm { Oversized, NonUndersized };

/// Classifies every user of a sorted positive-power profile as
/// oversized / critically-sized / undersized and returns the boundary
/// counts K1 and K2. Independent of the noise level. Equality at the
/// boundary is detected within kTieRelTol relative tolerance.
///
/// Throws std::invalid_argument if the profile is not sorted by
/// non-increasing minimal PSD or contains a zero power.
Classification classify(const FdmaProfile& profile, const FdmaConstants& constants);

/// Closed-form optimal bandwidths of the restricted FDMA problem:
/// capped users receive their limits, remaining users a proportional
/// share of the residual bandwidth.
std::vector<double> closed_form_bandwidths(const FdmaProfile& profile,
                                           const FdmaConstants& constants,
                                           const Classification& classification,
                                           BoundaryForm form);

/// Solves the restricted FDMA problem in closed form. Requires a sorted
/// profile with all powers positive.
Allocation allocate_closed_form(const FdmaProfile& profile, const FdmaConstants& constants);

/// Solves the same problem with the repeat/renumber/cap-or-finish
/// iterative algorithm; iterates min(K1+1, K) times. When record_trace
/// is set, the per-iteration tentative allocations are kept.
Allocation allocate_iterative(const FdmaProfile& profile, const FdmaConstants& constants,
                              bool record_trace = false);

/// Sum rate sum_k w_k log2(1 + p_k/(N0 w_k)) in bits/second, with the
/// w_k = 0 term defined as 0.
double fdma_sum_rate(const FdmaProfile& profile, const FdmaConstants& constants,
                     const std::vector<double>& bandwidths);

/// Unrestricted multiple-access sum capacity
/// w_tot log2(1 + sum_k p_k / (N0 w_tot)) in bits/second.
double mac_sum_capacity(const FdmaProfile& profile, const FdmaConstants& constants);

/// Builds the dual variables of the allocation certificate from the
/// instance classification and reports the residual of every optimality
/// condition at the given feasible candidate. The certificate is valid
/// iff all residuals fall below an instance-scaled threshold (1e-9 by
/// default, relative to the problem scale).
KktCertificate verify_kkt(const FdmaProfile& profile, const FdmaConstants& constants,
                          const std::vector<double>& bandwidths, double tolerance = 1e-9);

/// Restricted TDMA: substitutes limit_k = t̄_k w_tot, solves the FDMA
/// problem, and returns duty cycles t*_k = w*_k / w_tot. The sum rate is
/// identical to the substituted FDMA instance.
Allocation solve_tdma(const FdmaProfile& duty_profile, const FdmaConstants& constants);

/// Restricted FDMA with zero-power users allowed: active users are
/// allocated per the closed form, inactive users receive zero bandwidth.
/// The input does not have to be sorted; the result is in input order.
Allocation extend_zero_power(const FdmaProfile& profile, const FdmaConstants& constants);

/// Generic convex solver for the same problem, used as an independent
/// optimality oracle: bisects the multiplier of the total-bandwidth
/// constraint, clamping each user's stationarity solution to its box.
/// Makes no use of the classification or the closed form.
///
/// Throws std::runtime_error if bisection fails to bracket or converge.
std::vector<double> oracle_solve(const FdmaProfile& profile, const FdmaConstants& constants,
                                 double tolerance = 1e-9);

}  // namespace sumrate
