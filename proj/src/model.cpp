#include "sumrate/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sumrate {

double KktCertificate::Residuals::max() const {
    double m = stationarity;
    for (double r : {primal_upper, primal_lower, primal_total, dual_upper, dual_lower,
                     dual_total, slack_upper, slack_lower, slack_total})
        m = std::max(m, r);
    return m;
}

void validate(const FdmaConstants& c) {
    if (!(c.total_bandwidth > 0.0) || !std::isfinite(c.total_bandwidth))
        throw std::invalid_argument("total bandwidth must be positive and finite");
    if (!(c.noise_psd > 0.0) || !std::isfinite(c.noise_psd))
        throw std::invalid_argument("noise PSD must be positive and finite");
}

void validate(const CdmaConstants& c) {
    if (c.processing_gain < 1)
        throw std::invalid_argument("processing gain must be at least 1");
    if (!(c.noise_variance > 0.0) || !std::isfinite(c.noise_variance))
        throw std::invalid_argument("noise variance must be positive and finite");
}

void validate(const FdmaProfile& profile) {
    if (profile.powers.empty())
        throw std::invalid_argument("profile must contain at least one user");
    if (profile.limits.size() != profile.powers.size())
        throw std::invalid_argument("powers and limits must have equal length");
    bool any_positive = false;
    for (double p : profile.powers) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw std::invalid_argument("powers must be non-negative and finite");
        any_positive |= p > 0.0;
    }
    if (!any_positive)
        throw std::invalid_argument("at least one user must have positive power");
    for (double w : profile.limits)
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::invalid_argument("limits must be positive and finite");
}

UserOrder order_users(const FdmaProfile& profile) {
    validate(profile);
    const std::size_t n = profile.size();
    UserOrder order;
    order.permutation.resize(n);
    std::iota(order.permutation.begin(), order.permutation.end(), 0);
    std::stable_sort(order.permutation.begin(), order.permutation.end(), [&](int a, int b) {
        return profile.powers[a] / profile.limits[a] > profile.powers[b] / profile.limits[b];
    });
    order.minimal_psds.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int k = order.permutation[i];
        order.minimal_psds[i] = profile.powers[k] / profile.limits[k];
    }
    return order;
}

bool is_sorted_by_minimal_psd(const FdmaProfile& profile) {
    for (std::size_t k = 1; k < profile.size(); ++k) {
        if (profile.powers[k - 1] / profile.limits[k - 1] <
            profile.powers[k] / profile.limits[k])
            return false;
    }
    return true;
}

std::vector<double> permute(const std::vector<double>& values, const std::vector<int>& permutation) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < permutation.size(); ++i) out[i] = values[permutation[i]];
    return out;
}

std::vector<double> unpermute(const std::vector<double>& values, const std::vector<int>& permutation) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < permutation.size(); ++i) out[permutation[i]] = values[i];
    return out;
}

std::vector<double> pair_powers(const CorrelationPair& pair) {
    const auto& S = pair.sequences;
    const double n_chips = static_cast<double>(S.rows());
    std::vector<double> powers;
    powers.reserve(pair.correlations.size());
    Eigen::Index col = 0;
    for (const auto& P : pair.correlations) {
        if (col + P.cols() > S.cols())
            throw std::invalid_argument("correlation blocks exceed sequence columns");
        auto Sk = S.middleCols(col, P.cols());
        powers.push_back((Sk * P * Sk.transpose()).trace() / n_chips);
        col += P.cols();
    }
    if (col != S.cols())
        throw std::invalid_argument("correlation blocks do not cover all sequence columns");
    return powers;
}

CorrelationPair canonicalize(const CorrelationPair& pair) {
    const auto& S = pair.sequences;
    if (S.rows() < 1) throw std::invalid_argument("sequence matrix must have at least one row");
    if (!S.allFinite()) throw std::invalid_argument("sequence matrix has non-finite entries");
    const double n_chips = static_cast<double>(S.rows());
    const double root_n = std::sqrt(n_chips);

    CorrelationPair out;
    out.correlations.reserve(pair.correlations.size());
    out.sequences.resize(S.rows(), S.cols());

    Eigen::Index col = 0;
    for (const auto& P : pair.correlations) {
        if (P.rows() != P.cols()) throw std::invalid_argument("correlation block is not square");
        if (!P.allFinite()) throw std::invalid_argument("correlation block has non-finite entries");
        if (col + P.cols() > S.cols())
            throw std::invalid_argument("correlation blocks exceed sequence columns");
        const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
        if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw std::invalid_argument("correlation block is not symmetric");

        // Already-diagonal blocks keep their stream order.
        const bool diagonal =
            P.cols() == 1 ||
            (P - Eigen::MatrixXd(P.diagonal().asDiagonal())).cwiseAbs().maxCoeff() <= 1e-14 * scale;

        Eigen::VectorXd lam;
        Eigen::MatrixXd rotated;
        if (diagonal) {
            lam = P.diagonal();
            rotated = S.middleCols(col, P.cols());
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
            lam = eig.eigenvalues();
            rotated = S.middleCols(col, P.cols()) * eig.eigenvectors();
        }
        const double lam_max = lam.size() ? lam.maxCoeff() : 0.0;
        if (lam.size() && lam.minCoeff() < -1e-9 * std::max(1.0, lam_max))
            throw std::invalid_argument("correlation block is not positive semi-definite");
        // Noise floor: eigenvalues within 1e-12 of the largest are zero.
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            if (lam(i) < 1e-12 * lam_max) lam(i) = 0.0;
        Eigen::VectorXd powers(P.cols());
        for (Eigen::Index l = 0; l < P.cols(); ++l) {
            const double norm = rotated.col(l).norm();
            if (lam(l) == 0.0 || norm == 0.0) {
                // Zero-power stream: any squared-norm-N column works.
                powers(l) = 0.0;
                rotated.col(l).setZero();
                rotated(l % S.rows(), l) = root_n;
            } else {
                powers(l) = lam(l) * norm * norm / n_chips;
                rotated.col(l) *= root_n / norm;
            }
        }
        out.correlations.push_back(powers.asDiagonal());
        out.sequences.middleCols(col, P.cols()) = rotated;
        col += P.cols();
    }
    if (col != S.cols())
        throw std::invalid_argument("correlation blocks do not cover all sequence columns");
    return out;
}

}  // namespace sumrate
