#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "sumrate/cdma.hpp"

namespace sumrate {

/// One active data stream viewed as a stand-alone single-code user of
/// the equivalent system with equal bandwidth limits 1/(2N).
struct VirtualUser {
    int user = 0;
    int stream = 0;
    double power = 0.0;       ///< p*_{k,l} > 0
    SizeClass label = SizeClass::Undersized;
    bool full_bandwidth = false;  ///< w*_{k,l} = 1/(2N): gets an orthogonal sequence
};

struct VirtualUserSet {
    std::vector<VirtualUser> entries;   ///< all active streams, user-major order
    std::vector<int> stream_counts;     ///< per-user limits, fixes the column layout
    int full_count = 0;                 ///< |K2 set|
    int complement_dim = 0;             ///< N - full_count
    int processing_gain = 0;
};

/// Signature matrix: one column per (user, stream) slot; active columns
/// have squared norm N, inactive ones are zero.
struct SequenceMatrix {
    Eigen::MatrixXd columns;            ///< N x (sum of limits)
    std::vector<int> column_offsets;    ///< column index of each user's first stream
};

/// Residuals of the sequence-optimality structure, each normalized by
/// its natural scale (inner products by N, the complement Gram by its
/// target diagonal value).
struct GramReport {
    double max_orthogonal_offdiag = 0.0;  ///< pairwise among full-bandwidth columns
    double max_cross = 0.0;               ///< full-bandwidth vs complement columns
    double max_norm_deviation = 0.0;      ///< active column squared norms vs N
    double max_complement_deviation = 0.0;///< weighted complement Gram vs c I
    double max_residual = 0.0;
    bool pass = false;
};

inline constexpr double kGramTolerance = 1e-8;

/// Enumerates the active streams of a solved instance as virtual
/// single-code users, labels them through the equivalent equal-limit
/// FDMA instance, and marks the full-bandwidth set.
///
/// Throws std::invalid_argument if the split is inconsistent with the
/// per-user equivalent bandwidths.
VirtualUserSet build_virtual_users(const CdmaSolution& solution, const CdmaConstants& constants);

/// Builds the jointly optimal signature matrix: mutually orthogonal
/// squared-norm-N columns for the full-bandwidth set, and for the rest
/// sequences whose power-weighted Gram is a scalar multiple of the
/// identity on the orthogonal complement. Deterministic given the seed.
///
/// Throws std::runtime_error if a complement power exceeds the common
/// average beyond tolerance (an upstream inconsistency, not a valid
/// input state).
SequenceMatrix construct_sequences(const VirtualUserSet& vset, const CdmaConstants& constants,
                                   std::uint64_t seed);

/// Checks the constructed structure and reports residuals.
GramReport verify_gram(const SequenceMatrix& matrix, const VirtualUserSet& vset,
                       const CdmaConstants& constants);

/// Exact objective (1/2N) log2 det(I + S P S^T / sigma^2) in bits/chip,
/// evaluated through a Cholesky factorization.
///
/// Throws std::invalid_argument on negative stream powers or dimension
/// mismatch.
double logdet_sum_rate(const Eigen::MatrixXd& sequences, const Eigen::VectorXd& stream_powers,
                       const CdmaConstants& constants);

}  // namespace sumrate
