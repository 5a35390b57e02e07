#include "sumrate/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sumrate/fdma.hpp"

namespace sumrate {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Deterministic standard normals: Box-Muller over explicit 53-bit
// uniforms, so streams do not depend on the standard library's
// distribution internals.
class NormalSource {
  public:
    explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        spare_ = radius * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return radius * std::cos(2.0 * kPi * u2);
    }

  private:
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Seeded orthonormal basis of R^n with a fixed sign convention.
Eigen::MatrixXd random_orthonormal(int n, std::uint64_t seed) {
    NormalSource normals(seed);
    Eigen::MatrixXd gauss(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) gauss(i, j) = normals();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

// Columns of a d x m matrix B with B B^T = c I_d, rotated in pairs until
// the squared column norms match the prescribed powers. Right-hand
// Givens rotations leave B B^T untouched, so the weighted Gram identity
// survives to rotation roundoff.
Eigen::MatrixXd gwbe_columns(int dim, const std::vector<double>& powers) {
    const int count = static_cast<int>(powers.size());
    if (count < dim)
        throw std::runtime_error("fewer complement streams than dimensions to fill");
    const double total = std::accumulate(powers.begin(), powers.end(), 0.0);
    const double target_gram = total / dim;

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, count);
    for (int j = 0; j < dim; ++j) b(j, j) = std::sqrt(target_gram);

    std::vector<int> order(count);  // targets processed in ascending power
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int c) { return powers[a] < powers[c]; });

    std::vector<int> pool(count);  // current column of each working slot
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<double> norms(count, 0.0);
    for (int j = 0; j < count; ++j) norms[j] = b.col(j).squaredNorm();

    Eigen::MatrixXd fixed(dim, count);
    for (int step = 0; step < count; ++step) {
        const double target = powers[order[step]];
        if (static_cast<int>(pool.size()) == 1) {
            fixed.col(order[step]) = b.col(pool[0]);
            pool.clear();
            break;
        }
        const double eps = 1e-13 * std::max(1.0, target_gram);

        // Tightest bracket around the target: the largest norm not above
        // it paired with the smallest norm not below it. This keeps the
        // remaining norms majorizing the remaining targets.
        auto lo_it = pool.end();
        auto hi_it = pool.end();
        for (auto it = pool.begin(); it != pool.end(); ++it) {
            if (norms[*it] <= target + eps && (lo_it == pool.end() || norms[*it] > norms[*lo_it]))
                lo_it = it;
            if (norms[*it] >= target - eps && (hi_it == pool.end() || norms[*it] < norms[*hi_it]))
                hi_it = it;
        }
        if (lo_it == pool.end())
            lo_it = std::min_element(pool.begin(), pool.end(),
                                     [&](int a, int c) { return norms[a] < norms[c]; });
        if (hi_it == pool.end())
            hi_it = std::max_element(pool.begin(), pool.end(),
                                     [&](int a, int c) { return norms[a] < norms[c]; });
        const int lo = *lo_it;
        const int hi = *hi_it;

        if (std::abs(norms[hi] - target) <= eps) {
            fixed.col(order[step]) = b.col(hi);
            pool.erase(hi_it);
            continue;
        }
        if (std::abs(norms[lo] - target) <= eps) {
            fixed.col(order[step]) = b.col(lo);
            pool.erase(lo_it);
            continue;
        }

        // tan(theta) solving the norm equation for the (lo, hi) pair.
        const double cross = b.col(lo).dot(b.col(hi));
        const double a_coef = norms[hi] - target;
        const double c_coef = norms[lo] - target;
        const double disc = std::sqrt(std::max(0.0, cross * cross - a_coef * c_coef));
        const double tan_theta =
            cross >= 0.0 ? (-cross - disc) / a_coef : (-cross + disc) / a_coef;
        const double cos_theta = 1.0 / std::sqrt(1.0 + tan_theta * tan_theta);
        const double sin_theta = tan_theta * cos_theta;

        const Eigen::VectorXd hit = cos_theta * b.col(lo) + sin_theta * b.col(hi);
        const Eigen::VectorXd rest = -sin_theta * b.col(lo) + cos_theta * b.col(hi);
        fixed.col(order[step]) = hit;
        b.col(hi) = rest;
        norms[hi] = rest.squaredNorm();
        pool.erase(lo_it);
    }
    return fixed;
}

}  // namespace

VirtualUserSet build_virtual_users(const CdmaSolution& solution, const CdmaConstants& constants) {
    validate(constants);
    const int user_count = static_cast<int>(solution.equivalent_bandwidths.size());
    const double cap = 0.5 / constants.processing_gain;

    VirtualUserSet vset;
    vset.processing_gain = constants.processing_gain;
    vset.stream_counts.resize(user_count);

    for (int k = 0; k < user_count; ++k) {
        const auto& w = solution.split.bandwidths[k];
        const auto& p = solution.split.powers[k];
        vset.stream_counts[k] = static_cast<int>(w.size());
        double w_sum = 0.0;
        for (double wl : w) w_sum += wl;
        if (std::abs(w_sum - solution.equivalent_bandwidths[k]) >
            1e-9 * std::max(cap, solution.equivalent_bandwidths[k]))
            throw std::invalid_argument("stream bandwidths do not sum to the user aggregate");
        for (std::size_t l = 0; l < w.size(); ++l) {
            if (p[l] <= 0.0) continue;
            VirtualUser vu;
            vu.user = k;
            vu.stream = static_cast<int>(l);
            vu.power = p[l];
            vu.full_bandwidth = nearly_equal_rel(w[l], cap);
            vset.entries.push_back(vu);
        }
    }

    // Label the streams through the equal-limit instance they make up.
    FdmaProfile virt;
    std::vector<int> slot(vset.entries.size());
    std::iota(slot.begin(), slot.end(), 0);
    std::stable_sort(slot.begin(), slot.end(), [&](int a, int b) {
        return vset.entries[a].power > vset.entries[b].power;
    });
    for (int idx : slot) {
        virt.powers.push_back(vset.entries[idx].power);
        virt.limits.push_back(cap);
    }
    const Classification cls =
        classify(virt, equivalent_fdma_constants(constants));
    for (std::size_t i = 0; i < slot.size(); ++i)
        vset.entries[slot[i]].label = cls.labels[i];

    for (const auto& vu : vset.entries) vset.full_count += vu.full_bandwidth ? 1 : 0;
    vset.complement_dim = constants.processing_gain - vset.full_count;
    if (vset.complement_dim < 0)
        throw std::invalid_argument("more full-bandwidth streams than signal dimensions");
    return vset;
}

SequenceMatrix construct_sequences(const VirtualUserSet& vset, const CdmaConstants& constants,
                                   std::uint64_t seed) {
    validate(constants);
    const int n = constants.processing_gain;
    const double root_n = std::sqrt(static_cast<double>(n));

    SequenceMatrix matrix;
    matrix.column_offsets.resize(vset.stream_counts.size());
    int total = 0;
    for (std::size_t k = 0; k < vset.stream_counts.size(); ++k) {
        matrix.column_offsets[k] = total;
        total += vset.stream_counts[k];
    }
    matrix.columns = Eigen::MatrixXd::Zero(n, total);

    const Eigen::MatrixXd basis = random_orthonormal(n, seed);

    std::vector<const VirtualUser*> complement;
    int next_axis = 0;
    for (const auto& vu : vset.entries) {
        if (vu.full_bandwidth) {
            matrix.columns.col(matrix.column_offsets[vu.user] + vu.stream) =
                root_n * basis.col(next_axis++);
        } else {
            complement.push_back(&vu);
        }
    }

    if (!complement.empty()) {
        const int dim = vset.complement_dim;
        if (dim <= 0)
            throw std::runtime_error("complement streams present but no dimensions left");
        std::vector<double> powers;
        powers.reserve(complement.size());
        double total_power = 0.0;
        for (const auto* vu : complement) {
            powers.push_back(vu->power);
            total_power += vu->power;
        }
        const double average = total_power / dim;
        for (double p : powers)
            if (p > average * (1.0 + 1e-9))
                throw std::runtime_error("complement stream power exceeds the common average");

        Eigen::MatrixXd weighted = gwbe_columns(dim, powers);
        const Eigen::MatrixXd span = basis.rightCols(dim);  // orthonormal complement basis
        for (std::size_t j = 0; j < complement.size(); ++j) {
            Eigen::VectorXd unit = weighted.col(j).normalized();
            matrix.columns.col(matrix.column_offsets[complement[j]->user] + complement[j]->stream) =
                root_n * (span * unit);
        }
    }
    return matrix;
}

GramReport verify_gram(const SequenceMatrix& matrix, const VirtualUserSet& vset,
                       const CdmaConstants& constants) {
    const double n = constants.processing_gain;
    GramReport report;

    std::vector<Eigen::Index> full_cols, complement_cols;
    std::vector<double> complement_powers;
    for (const auto& vu : vset.entries) {
        const Eigen::Index col = matrix.column_offsets[vu.user] + vu.stream;
        if (vu.full_bandwidth) {
            full_cols.push_back(col);
        } else {
            complement_cols.push_back(col);
            complement_powers.push_back(vu.power);
        }
    }

    for (std::size_t i = 0; i < full_cols.size(); ++i) {
        for (std::size_t j = i + 1; j < full_cols.size(); ++j)
            report.max_orthogonal_offdiag =
                std::max(report.max_orthogonal_offdiag,
                         std::abs(matrix.columns.col(full_cols[i]).dot(matrix.columns.col(full_cols[j]))) / n);
        for (Eigen::Index cc : complement_cols)
            report.max_cross = std::max(
                report.max_cross, std::abs(matrix.columns.col(full_cols[i]).dot(matrix.columns.col(cc))) / n);
    }
    for (const auto& vu : vset.entries) {
        const Eigen::Index col = matrix.column_offsets[vu.user] + vu.stream;
        report.max_norm_deviation = std::max(
            report.max_norm_deviation, std::abs(matrix.columns.col(col).squaredNorm() - n) / n);
    }

    if (!complement_cols.empty()) {
        // Orthonormal basis of the complement of the full-bandwidth span,
        // rebuilt from the matrix itself rather than the construction.
        const int dim = vset.complement_dim;
        Eigen::MatrixXd anchor(matrix.columns.rows(), full_cols.size());
        for (std::size_t i = 0; i < full_cols.size(); ++i)
            anchor.col(i) = matrix.columns.col(full_cols[i]);
        Eigen::MatrixXd span;
        if (full_cols.empty()) {
            span = Eigen::MatrixXd::Identity(matrix.columns.rows(), matrix.columns.rows());
        } else {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(anchor);
            Eigen::MatrixXd q = qr.householderQ();
            span = q.rightCols(matrix.columns.rows() - full_cols.size());
        }
        span.conservativeResize(Eigen::NoChange, dim);

        double total_power = 0.0;
        for (double p : complement_powers) total_power += p;
        const double target = total_power / dim;

        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t j = 0; j < complement_cols.size(); ++j) {
            Eigen::VectorXd coords = span.transpose() * matrix.columns.col(complement_cols[j]) / std::sqrt(n);
            gram += complement_powers[j] * coords * coords.transpose();
        }
        report.max_complement_deviation =
            (gram - target * Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() / target;
    }

    report.max_residual = std::max({report.max_orthogonal_offdiag, report.max_cross,
                                    report.max_norm_deviation, report.max_complement_deviation});
    report.pass = report.max_residual <= kGramTolerance;
    return report;
}

double logdet_sum_rate(const Eigen::MatrixXd& sequences, const Eigen::VectorXd& stream_powers,
                       const CdmaConstants& constants) {
    validate(constants);
    if (stream_powers.size() != sequences.cols())
        throw std::invalid_argument("one stream power per sequence column required");
    for (Eigen::Index i = 0; i < stream_powers.size(); ++i)
        if (stream_powers(i) < -1e-12)
            throw std::invalid_argument("stream powers must be non-negative");

    const Eigen::Index n = sequences.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    a.noalias() += sequences * stream_powers.cwiseMax(0.0).asDiagonal() *
                   sequences.transpose() / constants.noise_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("objective matrix is not positive definite");
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(llt.matrixL()(i, i));
    log_det *= 2.0;
    return log_det / std::log(2.0) / (2.0 * constants.processing_gain);
}

}  // namespace sumrate
