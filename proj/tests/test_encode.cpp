#include "doctest.h"

#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "tdf/binary_io.hpp"
#include "tdf/codebook.hpp"
#include "tdf/encode.hpp"
#include "tdf/error.hpp"

#include <cmath>

namespace {

tdf::GmmModel random_gmm(oracle::Lcg& rng, Eigen::Index d, Eigen::Index k) {
    tdf::GmmModel m;
    m.weights = rng.matrix(k, 1, 0.2, 1.0);
    m.weights /= m.weights.sum();
    m.means = rng.matrix(d, k);
    m.variances = rng.matrix(d, k, 0.4, 1.5);
    m.variance_floor = 1e-9;
    return m;
}

double reconstruction_error(const Eigen::MatrixXd& words, const Eigen::VectorXd& x, const Eigen::VectorXd& c) {
    return (x - words * c).squaredNorm();
}

}  // namespace

TEST_CASE("average pooling") {
    Eigen::MatrixXd d(2, 2);
    d << 1, 3, 2, 4;
    const auto v = tdf::average_pool(d);
    CHECK(v.values == Eigen::Vector2d(2, 3));
    CHECK(v.method == tdf::EncodingMethod::average);
    CHECK(tdf::average_pool(d.col(1)).values == d.col(1));
    CHECK_THROWS_AS(tdf::average_pool(Eigen::MatrixXd(2, 0)), tdf::DataError);

    oracle::Lcg rng(41);
    const Eigen::MatrixXd r = rng.matrix(6, 37);
    Eigen::VectorXd reverse_sum = Eigen::VectorXd::Zero(6);
    for (Eigen::Index i = r.cols() - 1; i >= 0; --i) reverse_sum += r.col(i);
    CHECK((tdf::average_pool(r).values - reverse_sum / 37.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("LLC code of a codeword") {
    oracle::Lcg rng(42);
    const tdf::Codebook cb{rng.matrix(3, 8)};
    const auto code = tdf::llc_encode(cb, {.neighbors = 1, .lambda = 1e-4}, cb.centroids.col(5));
    CHECK(code == Eigen::VectorXd::Unit(8, 5));
}

TEST_CASE("LLC codes sum to one with at most k nonzeros") {
    oracle::Lcg rng(43);
    const tdf::Codebook cb{rng.matrix(4, 20)};
    for (int i = 0; i < 100; ++i) {
        const auto code = tdf::llc_encode(cb, {.neighbors = 5, .lambda = 1e-4}, rng.matrix(4, 1));
        CHECK(std::abs(code.sum() - 1.0) <= 1e-12);
        CHECK((code.array() != 0.0).count() <= 5);
    }
    CHECK_THROWS_AS(tdf::llc_encode(cb, {.neighbors = 21}, Eigen::VectorXd::Zero(4)), tdf::DataError);
    CHECK_THROWS_AS(tdf::llc_encode(cb, {}, Eigen::VectorXd::Zero(3)), tdf::DataError);
}

TEST_CASE("LLC matches projected gradient on the constrained problem") {
    oracle::Lcg rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const tdf::Codebook cb{rng.matrix(2, 10)};
        const Eigen::VectorXd x = rng.matrix(2, 1);
        const auto code = tdf::llc_encode(cb, {.neighbors = 3, .lambda = 1e-4}, x);
        const auto ref = oracle::llc_projected_gradient(cb.centroids, x, 3, 1e-4);
        CHECK(std::abs(reconstruction_error(cb.centroids, x, code) - reconstruction_error(cb.centroids, x, ref)) <
              1e-6);
    }
}

TEST_CASE("LLC max pooling") {
    oracle::Lcg rng(45);
    const tdf::Codebook cb{rng.matrix(3, 12)};
    const tdf::LlcParams p{.neighbors = 4, .lambda = 1e-4};
    const Eigen::MatrixXd one = rng.matrix(3, 1);
    CHECK(tdf::llc_pool(cb, p, one).values == tdf::llc_encode(cb, p, one.col(0)));

    Eigen::MatrixXd twice(3, 2);
    twice << one, one;
    CHECK(tdf::llc_pool(cb, p, twice).values == tdf::llc_pool(cb, p, one).values);

    const Eigen::MatrixXd set = rng.matrix(3, 15);
    const auto pooled = tdf::llc_pool(cb, p, set).values;
    CHECK(pooled.size() == 12);
    for (Eigen::Index j = 0; j < 12; ++j) {
        double best = -INFINITY;
        for (Eigen::Index i = 0; i < 15; ++i) best = std::max(best, tdf::llc_encode(cb, p, set.col(i))(j));
        CHECK(pooled(j) == best);
    }
    Eigen::MatrixXd reversed = set.rowwise().reverse();
    CHECK(tdf::llc_pool(cb, p, reversed).values == pooled);
}

TEST_CASE("Fisher vector at the mean") {
    tdf::GmmModel m{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Constant(3, 1, 0.5), Eigen::MatrixXd::Constant(3, 1, 2.0),
                    1e-9};
    const Eigen::MatrixXd d = Eigen::MatrixXd::Constant(3, 4, 0.5);
    const auto fv = tdf::fisher_encode(m, d, tdf::Branch::time, false).values;
    REQUIRE(fv.size() == 6);
    CHECK(fv.head(3).cwiseAbs().maxCoeff() == 0.0);
    for (int j = 3; j < 6; ++j) CHECK(fv(j) == doctest::Approx(-1 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("Fisher vector is invariant to duplication and order") {
    oracle::Lcg rng(46);
    const auto m = random_gmm(rng, 3, 4);
    const Eigen::MatrixXd d = rng.matrix(3, 9);
    Eigen::MatrixXd doubled(3, 18);
    doubled << d, d;
    const auto base = tdf::fisher_encode(m, d).values;
    CHECK((tdf::fisher_encode(m, doubled).values - base).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::MatrixXd reversed = d.rowwise().reverse();
    CHECK((tdf::fisher_encode(m, reversed).values - base).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(base.norm() - 1.0) < 1e-12);

    const Eigen::MatrixXd single = d.col(0);
    CHECK((tdf::fisher_encode(m, single.replicate(1, 5)).values - tdf::fisher_encode(m, single).values)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("Fisher vector equals scaled log-likelihood gradients") {
    oracle::Lcg rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index d = rng.integer(1, 8), k = rng.integer(1, 4), n = rng.integer(1, 50);
        const auto m = random_gmm(rng, d, k);
        const Eigen::MatrixXd data = rng.matrix(d, n, -1.5, 1.5);
        const auto fv = tdf::fisher_encode(m, data, tdf::Branch::time, false).values;
        const auto fd = oracle::fisher_by_finite_differences(m.weights, m.means, m.variances, data, 1e-5);
        CHECK((fv - fd).norm() <= 1e-4 * fv.norm());
    }
}

TEST_CASE("VLAD blocks") {
    Eigen::MatrixXd words(2, 3);
    words << 0, 5, 10, 0, 5, 10;
    const tdf::Codebook cb{words};
    Eigen::MatrixXd on_words(2, 2);
    on_words << 5, 10, 5, 10;
    CHECK(tdf::vlad_encode(cb, on_words, tdf::Branch::time, false).values == Eigen::VectorXd::Zero(6));

    Eigen::MatrixXd x(2, 1);
    x << 6, 4;
    const auto v = tdf::vlad_encode(cb, x, tdf::Branch::time, false).values;
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(6);
    expected.segment(2, 2) << 1, -1;
    CHECK(v == expected);
}

TEST_CASE("VLAD matches brute-force accumulation") {
    oracle::Lcg rng(48);
    for (int trial = 0; trial < 20; ++trial) {
        const tdf::Codebook cb{rng.matrix(4, 6)};
        const Eigen::MatrixXd data = rng.matrix(4, 40);
        const auto raw = tdf::vlad_encode(cb, data, tdf::Branch::dft, false).values;
        const auto ref = oracle::vlad_brute_force(cb.centroids, data);
        CHECK((raw - ref).cwiseAbs().maxCoeff() <= 1e-12);
        const auto normalized = tdf::vlad_encode(cb, data, tdf::Branch::dft).values;
        CHECK((normalized - oracle::signed_sqrt_l2(ref)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(normalized.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("encoder dimension laws") {
    oracle::Lcg rng(49);
    const Eigen::MatrixXd data = rng.matrix(5, 30);
    const tdf::Codebook cb{rng.matrix(5, 7)};
    const auto gmm = random_gmm(rng, 5, 3);
    CHECK(tdf::average_pool(data).values.size() == 5);
    CHECK(tdf::llc_pool(cb, {}, data).values.size() == 7);
    CHECK(tdf::fisher_encode(gmm, data).values.size() == 30);
    CHECK(tdf::vlad_encode(cb, data).values.size() == 35);
    CHECK_THROWS_AS(tdf::vlad_encode(cb, rng.matrix(4, 3)), tdf::DataError);
    CHECK_THROWS_AS(tdf::fisher_encode(gmm, rng.matrix(4, 3)), tdf::DataError);
}

TEST_CASE("late fusion") {
    oracle::Lcg rng(50);
    const tdf::VideoVector a{rng.matrix(4, 1), tdf::EncodingMethod::fv, tdf::Branch::time};
    const tdf::VideoVector b{rng.matrix(6, 1), tdf::EncodingMethod::fv, tdf::Branch::dft};
    const std::vector<std::pair<tdf::VideoVector, double>> two{{a, 0.6}, {b, 0.4}};
    const auto fused = tdf::fuse(two);
    CHECK(fused.method == tdf::EncodingMethod::fused);
    CHECK(fused.values.size() == 10);
    CHECK(std::abs(fused.values.head(4).norm() - 0.6) < 1e-12);
    CHECK(std::abs(fused.values.tail(6).norm() - 0.4) < 1e-12);
    CHECK(fused.values.norm() == doctest::Approx(std::sqrt(0.52)));

    const std::vector<std::pair<tdf::VideoVector, double>> one{{a, 1.0}};
    CHECK((tdf::fuse(one).values - a.values.normalized()).cwiseAbs().maxCoeff() < 1e-15);

    const std::vector<std::pair<tdf::VideoVector, double>> zero{{{Eigen::VectorXd::Zero(3)}, 1.0}};
    CHECK_THROWS_AS(tdf::fuse(zero), tdf::DataError);
}

TEST_CASE("method names") {
    CHECK(tdf::parse_encoding_method("fv") == tdf::EncodingMethod::fv);
    CHECK(tdf::to_string(tdf::EncodingMethod::vlad) == "vlad");
    CHECK_THROWS_AS(tdf::parse_encoding_method("bow"), tdf::ConfigError);
}

TEST_CASE("TDFV round-trip") {
    testing::TempDir dir("encode");
    oracle::Lcg rng(51);
    const tdf::VideoVector v{rng.matrix(9, 1), tdf::EncodingMethod::vlad, tdf::Branch::dft};
    tdf::save_video_vector(v, dir / "a.tdfv");
    const auto back = tdf::load_video_vector(dir / "a.tdfv");
    CHECK(back.values == v.values);
    CHECK(back.method == v.method);
    CHECK(back.branch == v.branch);
    tdf::save_video_vector(back, dir / "b.tdfv");
    CHECK(tdf::bin::read_file(dir / "a.tdfv") == tdf::bin::read_file(dir / "b.tdfv"));
    CHECK(tdf::bin::read_file(dir / "a.tdfv").size() == 4 + 4 + 1 + 1 + 4 + 9 * 8);
}
