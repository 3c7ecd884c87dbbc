#include "doctest.h"

#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"
#include "tdf/svm.hpp"

#include <cmath>

namespace {

// Two Gaussian clouds in the plane separated along the first axis.
void separable(oracle::Lcg& rng, int per_class, double gap, Eigen::MatrixXd& x, std::vector<std::uint32_t>& labels) {
    x.resize(2, 2 * per_class);
    labels.assign(2 * per_class, 0);
    for (int i = 0; i < 2 * per_class; ++i) {
        const int c = i % 2;
        labels[i] = c;
        x(0, i) = (c == 0 ? -gap : gap) + 0.3 * rng.normal();
        x(1, i) = rng.normal();
    }
}

std::vector<double> signs_for(const std::vector<std::uint32_t>& labels, std::uint32_t c) {
    std::vector<double> s;
    for (auto l : labels) s.push_back(l == c ? 1.0 : -1.0);
    return s;
}

}  // namespace

TEST_CASE("separable pair in one dimension") {
    Eigen::MatrixXd x(1, 2);
    x << -2, 2;
    const std::vector<std::uint32_t> labels{0, 1};
    const auto res = tdf::train_linear_svm_traced(x, labels, 2, {.penalty = 100});
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(tdf::predict(res.model, x.col(i)).first == labels[i]);
    CHECK(tdf::predict(res.model, Eigen::VectorXd::Constant(1, -2.0)).first == 0);
    for (std::uint32_t c = 0; c < 2; ++c) {
        const auto s = signs_for({0, 1}, c);
        const Eigen::VectorXd w = res.model.weights.row(c).transpose();
        const double b = res.model.biases(c);
        for (Eigen::Index i = 0; i < 2; ++i) CHECK(s[i] * (w.dot(x.col(i)) + b) >= 1.0 - 1e-6);
    }
}

TEST_CASE("training rejects missing classes and bad shapes") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 3);
    const std::vector<std::uint32_t> same{0, 0, 0};
    CHECK_THROWS_AS(tdf::train_linear_svm_traced(x, same, 2, {}), tdf::DataError);
    const std::vector<std::uint32_t> short_labels{0, 1};
    CHECK_THROWS_AS(tdf::train_linear_svm_traced(x, short_labels, 2, {}), tdf::DataError);

    std::vector<tdf::LabeledVector> mixed{{{Eigen::VectorXd::Ones(2)}, 0}, {{Eigen::VectorXd::Ones(3)}, 1}};
    CHECK_THROWS_AS(tdf::train_linear_svm(mixed, 2, {}), tdf::DataError);
}

TEST_CASE("prediction scores and ties") {
    tdf::LinearSvmModel m;
    m.weights.resize(2, 2);
    m.weights << 1, 2, -1, -2;
    m.biases = Eigen::Vector2d::Zero();
    m.penalty = 1;
    CHECK(tdf::predict(m, Eigen::Vector2d::Zero()).first == 0);

    oracle::Lcg rng(61);
    tdf::LinearSvmModel r{rng.matrix(4, 6), rng.matrix(4, 1), 1.0};
    for (int i = 0; i < 30; ++i) {
        const Eigen::VectorXd x = rng.matrix(6, 1);
        const auto [cls, scores] = tdf::predict(r, x);
        Eigen::Index best = 0;
        for (Eigen::Index c = 0; c < 4; ++c) {
            double s = r.biases(c);
            for (Eigen::Index j = 0; j < 6; ++j) s += r.weights(c, j) * x(j);
            CHECK(std::abs(scores(c) - s) < 1e-12);
            if (s > r.biases(best) + r.weights.row(best).dot(x)) best = c;
        }
        CHECK(cls == best);

        // Scores are affine in x.
        const double alpha = rng.uniform(-3, 3);
        const auto s0 = tdf::predict(r, Eigen::VectorXd::Zero(6)).second;
        const auto sa = tdf::predict(r, alpha * x).second;
        CHECK(((sa - s0) - alpha * (scores - s0)).cwiseAbs().maxCoeff() < 1e-12);
    }
    CHECK_THROWS_AS(tdf::predict(r, Eigen::VectorXd::Zero(5)), tdf::DataError);
}

TEST_CASE("hinge objective") {
    oracle::Lcg rng(62);
    const Eigen::MatrixXd x = rng.matrix(3, 10);
    std::vector<double> y(10);
    for (int i = 0; i < 10; ++i) y[i] = i % 3 == 0 ? 1.0 : -1.0;
    CHECK(tdf::hinge_objective(Eigen::VectorXd::Zero(3), 0.0, 2.5, x, y) == doctest::Approx(25.0));

    Eigen::MatrixXd sep(1, 2);
    sep << -2, 2;
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, 1.0);
    CHECK(tdf::hinge_objective(w, 0.0, 10.0, sep, std::vector<double>{-1, 1}) == doctest::Approx(0.5));

    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd wr = rng.matrix(3, 1);
        const double b = rng.uniform(-1, 1);
        double direct = 0.5 * wr.squaredNorm();
        for (int i = 0; i < 10; ++i) direct += 3.0 * std::max(0.0, 1.0 - y[i] * (wr.dot(x.col(i)) + b));
        CHECK(std::abs(tdf::hinge_objective(wr, b, 3.0, x, y) - direct) < 1e-12);
    }
}

TEST_CASE("per-epoch objective is non-increasing and converges") {
    oracle::Lcg rng(63);
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::MatrixXd x;
        std::vector<std::uint32_t> labels;
        separable(rng, 10, 1.5, x, labels);
        const auto res = tdf::train_linear_svm_traced(x, labels, 2, {.penalty = 1.0, .max_epochs = 2000, .tol = 1e-8});
        for (const auto& trace : res.objective_traces)
            for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-8);

        for (std::uint32_t c = 0; c < 2; ++c) {
            const auto y = signs_for(labels, c);
            const double ref = oracle::subgradient_svm(x, y, 1.0, 2000000);
            const double got = oracle::augmented_hinge(res.model.weights.row(c).transpose(), res.model.biases(c), 1.0,
                                                       x, y);
            CHECK(got == doctest::Approx(res.objective_traces[c].back()).epsilon(1e-12));
            CHECK(std::abs(got - ref) <= 1e-3 * ref);
        }
        for (Eigen::Index i = 0; i < x.cols(); ++i) CHECK(tdf::predict(res.model, x.col(i)).first == labels[i]);
    }
}

TEST_CASE("large penalty separates separable data") {
    oracle::Lcg rng(64);
    Eigen::MatrixXd x;
    std::vector<std::uint32_t> labels;
    separable(rng, 30, 2.0, x, labels);
    const auto m = tdf::train_linear_svm_traced(x, labels, 2, {.penalty = 100}).model;
    for (Eigen::Index i = 0; i < x.cols(); ++i) CHECK(tdf::predict(m, x.col(i)).first == labels[i]);
}

TEST_CASE("training is deterministic under a seed") {
    oracle::Lcg rng(65);
    const Eigen::MatrixXd x = rng.matrix(5, 40);
    std::vector<std::uint32_t> labels(40);
    for (int i = 0; i < 40; ++i) labels[i] = i % 3;
    const auto a = tdf::train_linear_svm_traced(x, labels, 3, {.penalty = 10, .seed = 4}).model;
    const auto b = tdf::train_linear_svm_traced(x, labels, 3, {.penalty = 10, .seed = 4}).model;
    CHECK(tdf::encode_svm(a) == tdf::encode_svm(b));
}

TEST_CASE("TDFM round-trip") {
    testing::TempDir dir("svm");
    oracle::Lcg rng(66);
    const tdf::LinearSvmModel m{rng.matrix(3, 5), rng.matrix(3, 1), 100.0};
    tdf::save_svm(m, dir / "a.tdfm");
    const auto back = tdf::load_svm(dir / "a.tdfm");
    CHECK(back.weights == m.weights);
    CHECK(back.biases == m.biases);
    CHECK(back.penalty == 100.0);
    tdf::save_svm(back, dir / "b.tdfm");
    CHECK(tdf::bin::read_file(dir / "a.tdfm") == tdf::bin::read_file(dir / "b.tdfm"));
    CHECK(tdf::bin::read_file(dir / "a.tdfm").size() == 4 + 4 + 4 + 4 + 8 + 8 * (15 + 3));
}
