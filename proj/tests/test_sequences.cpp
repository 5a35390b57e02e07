#include <cmath>
#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "sumrate/model.hpp"
#include "sumrate/sequences.hpp"

using namespace sumrate;

namespace {

CdmaInstance fig1_instance() {
    CdmaInstance instance;
    instance.powers = {30, 15, 10, 7, 3};
    instance.limits = {2, 2, 2, 2, 2};
    instance.constants = {8, 1.0};
    return instance;
}

Eigen::VectorXd stream_power_vector(const CdmaSolution& solution, const SequenceMatrix& matrix) {
    Eigen::VectorXd powers = Eigen::VectorXd::Zero(matrix.columns.cols());
    for (std::size_t k = 0; k < solution.split.powers.size(); ++k)
        for (std::size_t l = 0; l < solution.split.powers[k].size(); ++l)
            powers(matrix.column_offsets[k] + l) = solution.split.powers[k][l];
    return powers;
}

}  // namespace

TEST_CASE("virtual users of the reference instance") {
    auto instance = fig1_instance();

    auto min_count = solve_cdma(instance, SplitStrategy::MinCountMaxOrthogonal);
    auto vset = build_virtual_users(min_count, instance.constants);
    CHECK(vset.full_count == 7);  // 2+2+2 full streams plus user 4's capped stream
    CHECK(vset.complement_dim == 1);
    CHECK(vset.entries.size() == 9);  // user 5 activates a single stream

    auto equal = solve_cdma(instance, SplitStrategy::EqualPower);
    auto vset_equal = build_virtual_users(equal, instance.constants);
    CHECK(vset_equal.full_count == 6);
    CHECK(vset_equal.complement_dim == 2);
    CHECK(vset_equal.entries.size() == 10);
    for (const auto& vu : vset_equal.entries)
        if (vu.user >= 3) CHECK_FALSE(vu.full_bandwidth);

    // Tampered split: aggregate no longer matches.
    auto broken = min_count;
    broken.split.bandwidths[4][0] *= 0.5;
    CHECK_THROWS_AS(build_virtual_users(broken, instance.constants), std::invalid_argument);
}

TEST_CASE("all streams orthogonal when the limits fit the dimension") {
    CdmaInstance instance;
    instance.powers = {4, 2, 1};
    instance.limits = {2, 2, 2};
    instance.constants = {8, 1.0};
    auto solution = solve_cdma(instance);
    auto vset = build_virtual_users(solution, instance.constants);
    CHECK(vset.full_count == 6);
    CHECK(vset.complement_dim == 2);
    for (const auto& vu : vset.entries) CHECK(vu.full_bandwidth);

    auto matrix = construct_sequences(vset, instance.constants, 1);
    auto report = verify_gram(matrix, vset, instance.constants);
    CHECK(report.pass);
    CHECK(report.max_residual <= 1e-12);
}

TEST_CASE("one-dimensional complement produces scalar weights") {
    auto instance = fig1_instance();
    auto solution = solve_cdma(instance, SplitStrategy::MinCountMaxOrthogonal);
    auto vset = build_virtual_users(solution, instance.constants);
    REQUIRE(vset.complement_dim == 1);

    auto matrix = construct_sequences(vset, instance.constants, 3);
    auto report = verify_gram(matrix, vset, instance.constants);
    CHECK(report.pass);
    CHECK(report.max_residual <= 1e-10);

    // The two complement columns are collinear with the leftover axis,
    // and their power-weighted squared coordinates sum to the target.
    std::vector<Eigen::Index> complement;
    std::vector<double> powers;
    for (const auto& vu : vset.entries)
        if (!vu.full_bandwidth) {
            complement.push_back(matrix.column_offsets[vu.user] + vu.stream);
            powers.push_back(vu.power);
        }
    REQUIRE(complement.size() == 2);
    CHECK(powers[0] + powers[1] == doctest::Approx(5.0));
    const double cos = std::abs(matrix.columns.col(complement[0]).normalized().dot(
        matrix.columns.col(complement[1]).normalized()));
    CHECK(cos == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("construction is deterministic in the seed") {
    auto instance = fig1_instance();
    auto solution = solve_cdma(instance, SplitStrategy::MinCountMaxOrthogonal);
    auto vset = build_virtual_users(solution, instance.constants);
    auto a = construct_sequences(vset, instance.constants, 11);
    auto b = construct_sequences(vset, instance.constants, 11);
    CHECK((a.columns - b.columns).cwiseAbs().maxCoeff() == 0.0);
    auto c = construct_sequences(vset, instance.constants, 12);
    CHECK((a.columns - c.columns).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("construction rejects an overweight complement stream") {
    auto instance = fig1_instance();
    auto solution = solve_cdma(instance, SplitStrategy::MinCountMaxOrthogonal);
    auto vset = build_virtual_users(solution, instance.constants);
    for (auto& vu : vset.entries)
        if (!vu.full_bandwidth) vu.power *= vu.power > 2.5 ? 10.0 : 1.0;
    CHECK_THROWS_AS(construct_sequences(vset, instance.constants, 1), std::runtime_error);
}

TEST_CASE("gram verification flags perturbations") {
    auto instance = fig1_instance();
    auto solution = solve_cdma(instance, SplitStrategy::EqualPower);
    auto vset = build_virtual_users(solution, instance.constants);
    auto matrix = construct_sequences(vset, instance.constants, 5);
    REQUIRE(verify_gram(matrix, vset, instance.constants).pass);

    auto perturbed = matrix;
    perturbed.columns(0, 0) += 1e-3;
    CHECK_FALSE(verify_gram(perturbed, vset, instance.constants).pass);
}

TEST_CASE("identity-based orthogonal matrix has zero residual") {
    CdmaInstance instance;
    instance.powers = {2, 1};
    instance.limits = {2, 2};
    instance.constants = {4, 1.0};
    auto solution = solve_cdma(instance);
    auto vset = build_virtual_users(solution, instance.constants);
    REQUIRE(vset.full_count == 4);

    SequenceMatrix matrix;
    matrix.column_offsets = {0, 2};
    matrix.columns = 2.0 * Eigen::MatrixXd::Identity(4, 4);
    auto report = verify_gram(matrix, vset, instance.constants);
    CHECK(report.max_residual == 0.0);
}

TEST_CASE("log-det objective in closed form cases") {
    CdmaConstants constants{4, 1.0};
    Eigen::MatrixXd s = 2.0 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 3.0);
    CHECK(logdet_sum_rate(s, p, constants) ==
          doctest::Approx(0.5 * std::log2(13.0)).epsilon(1e-14));
    CHECK(logdet_sum_rate(s, Eigen::VectorXd::Zero(4), constants) == 0.0);
    CHECK_THROWS_AS(logdet_sum_rate(s, Eigen::VectorXd::Constant(4, -1.0), constants),
                    std::invalid_argument);
}

TEST_CASE("constructed sequences achieve the reference maximum") {
    auto instance = fig1_instance();
    for (auto strategy : {SplitStrategy::EqualPower, SplitStrategy::MinCountMaxOrthogonal}) {
        auto solution = solve_cdma(instance, strategy);
        auto vset = build_virtual_users(solution, instance.constants);
        auto matrix = construct_sequences(vset, instance.constants, 17);
        const double value =
            logdet_sum_rate(matrix.columns, stream_power_vector(solution, matrix),
                            instance.constants);
        CHECK(value == doctest::Approx(solution.sum_rate).epsilon(1e-9));
    }
}

TEST_CASE("end-to-end optimality on random instances") {
    std::mt19937_64 rng(61);
    for (int rep = 0; rep < 150; ++rep) {
        auto instance = testgen::random_cdma(rng, 6, 16, 4, false);
        for (auto strategy : {SplitStrategy::EqualPower, SplitStrategy::MinCountMaxOrthogonal}) {
            auto solution = solve_cdma(instance, strategy);
            auto vset = build_virtual_users(solution, instance.constants);
            auto matrix = construct_sequences(vset, instance.constants, rep);
            auto report = verify_gram(matrix, vset, instance.constants);
            CHECK(report.max_residual <= 1e-8);
            const double value =
                logdet_sum_rate(matrix.columns, stream_power_vector(solution, matrix),
                                instance.constants);
            CHECK(std::abs(value - solution.sum_rate) <= 1e-9 * std::max(1.0, solution.sum_rate));

            // Full-bandwidth streams and non-undersized labels coincide.
            for (const auto& vu : vset.entries)
                CHECK(vu.full_bandwidth == (vu.label != SizeClass::Undersized));

            // Critically sized streams are orthogonal to the complement.
            for (const auto& vu : vset.entries) {
                if (vu.label != SizeClass::CriticallySized) continue;
                const auto col = matrix.columns.col(matrix.column_offsets[vu.user] + vu.stream);
                for (const auto& other : vset.entries) {
                    if (other.full_bandwidth) continue;
                    const auto oc =
                        matrix.columns.col(matrix.column_offsets[other.user] + other.stream);
                    CHECK(std::abs(col.dot(oc)) <= 1e-8 * instance.constants.processing_gain);
                }
            }
        }
    }
}

TEST_CASE("per-user rotations preserve the objective") {
    std::mt19937_64 rng(67);
    std::normal_distribution<double> g;
    auto instance = fig1_instance();
    auto solution = solve_cdma(instance, SplitStrategy::EqualPower);
    auto vset = build_virtual_users(solution, instance.constants);
    auto matrix = construct_sequences(vset, instance.constants, 23);
    const Eigen::VectorXd powers = stream_power_vector(solution, matrix);
    const double reference = logdet_sum_rate(matrix.columns, powers, instance.constants);

    for (int rep = 0; rep < 20; ++rep) {
        CorrelationPair rotated;
        rotated.sequences = matrix.columns;
        for (std::size_t k = 0; k < instance.size(); ++k) {
            const int streams = instance.limits[k];
            Eigen::MatrixXd gauss(streams, streams);
            for (int i = 0; i < streams; ++i)
                for (int j = 0; j < streams; ++j) gauss(i, j) = g(rng);
            const Eigen::MatrixXd v =
                Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
            const Eigen::VectorXd block =
                powers.segment(matrix.column_offsets[k], streams);
            rotated.correlations.push_back(v * block.asDiagonal() * v.transpose());
            rotated.sequences.middleCols(matrix.column_offsets[k], streams) =
                matrix.columns.middleCols(matrix.column_offsets[k], streams) * v.transpose();
        }
        auto canon = canonicalize(rotated);
        Eigen::VectorXd canon_powers(powers.size());
        Eigen::Index col = 0;
        for (const auto& block : canon.correlations)
            for (Eigen::Index l = 0; l < block.cols(); ++l) canon_powers(col++) = block(l, l);
        const double value = logdet_sum_rate(canon.sequences, canon_powers, instance.constants);
        CHECK(value == doctest::Approx(reference).epsilon(1e-10));
    }
}
