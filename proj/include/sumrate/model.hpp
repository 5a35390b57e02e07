#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sumrate/types.hpp"

namespace sumrate {

/// A (data-correlation, signature-sequence) pair. The correlation matrix
/// is block diagonal with one symmetric PSD block per user; the sequence
/// matrix stacks the users' columns side by side, so S has sum-of-block-
/// sizes columns and one row per chip.
struct CorrelationPair {
    std::vector<Eigen::MatrixXd> correlations;  ///< P_k blocks
    Eigen::MatrixXd sequences;                  ///< N x (sum of block sizes)
};

/// Per-user transmitted powers tr(S_k P_k S_k^T)/N implied by a pair.
std::vector<double> pair_powers(const CorrelationPair& pair);

/// Rewrites a pair into the canonical form with diagonal correlation
/// blocks (non-negative entries) and squared-norm-N sequence columns,
/// preserving S P S^T. Eigenvalues below 1e-12 of the largest are
/// clamped to zero; columns whose power is zero get an arbitrary
/// axis-aligned vector scaled to sqrt(N).
///
/// Throws std::invalid_argument on dimension mismatch, asymmetric or
/// indefinite blocks, or non-finite entries.
CorrelationPair canonicalize(const CorrelationPair& pair);

}  // namespace sumrate
