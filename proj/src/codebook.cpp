#include "tdf/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tdf/binary_io.hpp"
#include "tdf/error.hpp"
#include "tdf/random.hpp"

namespace tdf {

namespace {

double squared_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    return (a - b).squaredNorm();
}

void check_fit_input(const Eigen::MatrixXd& descriptors, Eigen::Index k, const char* what) {
    if (k < 1) throw DataError(std::string(what) + ": number of components must be positive");
    if (descriptors.cols() < k) {
        throw DataError(std::string(what) + ": " + std::to_string(descriptors.cols()) +
                        " descriptors are not enough for " + std::to_string(k) + " components");
    }
    if (descriptors.rows() < 1) throw DataError(std::string(what) + ": descriptors have zero dimension");
    if (!descriptors.allFinite()) throw DataError(std::string(what) + ": non-finite descriptors");
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& data, Eigen::Index k, Rng& rng) {
    const Eigen::Index m = data.cols();
    Eigen::MatrixXd centers(data.rows(), k);
    centers.col(0) = data.col(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m))));

    std::vector<double> nearest(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) nearest[i] = squared_distance(data.col(i), centers.col(0));

    for (Eigen::Index c = 1; c < k; ++c) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        if (!(total > 0.0)) throw DataError("k-means: fewer distinct descriptors than requested words");
        const double target = rng.uniform() * total;
        double run = 0.0;
        Eigen::Index pick = -1;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (nearest[i] <= 0.0) continue;
            pick = i;
            run += nearest[i];
            if (run > target) break;
        }
        centers.col(c) = data.col(pick);
        for (Eigen::Index i = 0; i < m; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(data.col(i), centers.col(c)));
        }
    }
    return centers;
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double top = v.maxCoeff();
    if (!std::isfinite(top)) return top;
    return top + std::log((v.array() - top).exp().sum());
}

// log(pi_k) + log N(x; mu_k, diag(var_k)) for every k.
Eigen::VectorXd component_log_joint(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    static const double log_2pi = std::log(2.0 * std::numbers::pi);
    const Eigen::Index kc = model.num_components();
    Eigen::VectorXd out(kc);
    for (Eigen::Index k = 0; k < kc; ++k) {
        const auto var = model.variances.col(k).array();
        const double maha = ((x - model.means.col(k)).array().square() / var).sum();
        const double log_det = var.log().sum();
        out(k) = std::log(model.weights(k)) - 0.5 * (static_cast<double>(x.size()) * log_2pi + log_det + maha);
    }
    return out;
}

void check_dims(Eigen::Index expected, Eigen::Index got, const char* what) {
    if (expected != got) {
        throw DataError(std::string(what) + ": dimension mismatch, model has " + std::to_string(expected) +
                        ", input has " + std::to_string(got));
    }
}

}  // namespace

void Codebook::validate() const {
    if (centroids.cols() < 1 || centroids.rows() < 1) throw DataError("codebook is empty");
    if (!centroids.allFinite()) throw DataError("codebook has non-finite centroids");

    // Lexicographic sort, then neighbours only; exact duplicates always end up adjacent.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(centroids.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const auto ca = centroids.col(a);
        const auto cb = centroids.col(b);
        return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
        const double diff = (centroids.col(order[i]) - centroids.col(order[i - 1])).cwiseAbs().maxCoeff();
        if (diff <= 1e-12) throw DataError("codebook has duplicate centroids");
    }
}

KmeansResult kmeans_fit_traced(const Eigen::MatrixXd& descriptors, const KmeansOptions& opts) {
    check_fit_input(descriptors, opts.num_words, "k-means");
    if (opts.max_iters < 1) throw DataError("k-means: max_iters must be positive");

    const Eigen::Index m = descriptors.cols();
    const Eigen::Index k = opts.num_words;
    Rng rng(opts.seed);

    KmeansResult result;
    Eigen::MatrixXd centers = kmeans_plus_plus(descriptors, k, rng);
    std::vector<Eigen::Index> assign(static_cast<std::size_t>(m), -1);
    std::vector<Eigen::Index> previous;
    std::vector<double> dist(static_cast<std::size_t>(m));

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        Codebook current{centers};
        double objective = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            assign[i] = assign_nearest(current, descriptors.col(i));
            dist[i] = squared_distance(descriptors.col(i), centers.col(assign[i]));
            objective += dist[i];
        }
        result.objective_trace.push_back(objective);
        if (assign == previous) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(descriptors.rows(), k);
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < m; ++i) {
            sums.col(assign[i]) += descriptors.col(i);
            ++counts[assign[i]];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] > 0) centers.col(c) = sums.col(c) / static_cast<double>(counts[c]);
        }

        std::vector<bool> taken(static_cast<std::size_t>(m), false);
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            Eigen::Index far = -1;
            double far_dist = -1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (taken[i]) continue;
                const double d = squared_distance(descriptors.col(i), centers.col(assign[i]));
                if (d > far_dist) {
                    far_dist = d;
                    far = i;
                }
            }
            taken[far] = true;
            centers.col(c) = descriptors.col(far);
        }
        previous = assign;
    }

    result.codebook.centroids = std::move(centers);
    result.assignments = std::move(assign);
    return result;
}

Codebook kmeans_fit(const Eigen::MatrixXd& descriptors, const KmeansOptions& opts) {
    return kmeans_fit_traced(descriptors, opts).codebook;
}

Eigen::Index assign_nearest(const Codebook& codebook, const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_dims(codebook.dims(), x.size(), "assign_nearest");
    Eigen::Index best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < codebook.num_words(); ++c) {
        const double d = squared_distance(x, codebook.centroids.col(c));
        if (d < best_dist) {
            best_dist = d;
            best = c;
        }
    }
    return best;
}

void GmmModel::validate() const {
    const Eigen::Index k = weights.size();
    if (k < 1 || means.cols() != k || variances.cols() != k || variances.rows() != means.rows() || means.rows() < 1) {
        throw DataError("GMM parameter shapes are inconsistent");
    }
    if (!weights.allFinite() || !means.allFinite() || !variances.allFinite()) {
        throw DataError("GMM has non-finite parameters");
    }
    if ((weights.array() <= 0.0).any()) throw DataError("GMM weights must be positive");
    if (std::abs(weights.sum() - 1.0) > 1e-10) throw DataError("GMM weights must sum to 1");
    if ((variances.array() <= 0.0).any() || (variances.array() < variance_floor).any()) {
        throw DataError("GMM variances below floor");
    }
}

GmmResult gmm_fit_traced(const Eigen::MatrixXd& descriptors, const GmmOptions& opts) {
    check_fit_input(descriptors, opts.num_components, "GMM");
    if (opts.max_iters < 0) throw DataError("GMM: max_iters must be non-negative");

    const Eigen::Index m = descriptors.cols();
    const Eigen::Index dims = descriptors.rows();
    const Eigen::Index kc = opts.num_components;

    const Eigen::VectorXd data_mean = descriptors.rowwise().mean();
    const Eigen::VectorXd data_var =
        (descriptors.colwise() - data_mean).array().square().rowwise().sum() / static_cast<double>(m);
    // Strictly positive even for constant data.
    const double floor = std::max(1e-6 * data_var.mean(), 1e-12);

    const auto km = kmeans_fit_traced(descriptors, {kc, opts.seed, opts.kmeans_iters});

    GmmModel model;
    model.variance_floor = floor;
    model.means = km.codebook.centroids;
    model.weights = Eigen::VectorXd::Zero(kc);
    model.variances = Eigen::MatrixXd::Zero(dims, kc);
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index c = km.assignments[i];
        model.weights(c) += 1.0;
        model.variances.col(c) += (descriptors.col(i) - model.means.col(c)).array().square().matrix();
    }
    for (Eigen::Index c = 0; c < kc; ++c) {
        if (model.weights(c) >= 2.0) {
            model.variances.col(c) /= model.weights(c);
        } else {
            model.variances.col(c) = data_var;
        }
        model.weights(c) = std::max(model.weights(c), 1.0);
    }
    model.weights /= model.weights.sum();
    model.variances = model.variances.cwiseMax(floor);

    GmmResult result;
    Eigen::MatrixXd resp(kc, m);
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
        // E-step.
        double total = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::VectorXd lj = component_log_joint(model, descriptors.col(i));
            const double lse = log_sum_exp(lj);
            total += lse;
            resp.col(i) = (lj.array() - lse).exp().matrix();
        }
        const double avg = total / static_cast<double>(m);
        result.log_likelihood_trace.push_back(avg);
        if (iter >= opts.max_iters || (iter > 0 && avg - previous < opts.tol)) break;
        previous = avg;

        // M-step, with variances floored.
        const Eigen::VectorXd mass = resp.rowwise().sum();
        for (Eigen::Index c = 0; c < kc; ++c) {
            if (!(mass(c) > 0.0)) continue;
            const Eigen::VectorXd mu = descriptors * resp.row(c).transpose() / mass(c);
            Eigen::VectorXd var = Eigen::VectorXd::Zero(dims);
            for (Eigen::Index i = 0; i < m; ++i) {
                var += resp(c, i) * (descriptors.col(i) - mu).array().square().matrix();
            }
            model.means.col(c) = mu;
            model.variances.col(c) = (var / mass(c)).cwiseMax(floor);
        }
        model.weights = (mass / static_cast<double>(m)).cwiseMax(std::numeric_limits<double>::min());
        model.weights /= model.weights.sum();
    }

    result.model = std::move(model);
    return result;
}

GmmModel gmm_fit(const Eigen::MatrixXd& descriptors, const GmmOptions& opts) {
    return gmm_fit_traced(descriptors, opts).model;
}

Eigen::VectorXd gmm_posteriors(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_dims(model.dims(), x.size(), "gmm_posteriors");
    const Eigen::VectorXd lj = component_log_joint(model, x);
    Eigen::VectorXd q = (lj.array() - log_sum_exp(lj)).exp().matrix();
    return q / q.sum();
}

double gmm_log_density(const GmmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    check_dims(model.dims(), x.size(), "gmm_log_density");
    return log_sum_exp(component_log_joint(model, x));
}

std::vector<std::uint8_t> encode_codebook(const Codebook& codebook) {
    bin::Writer w;
    w.magic("TDFC");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(codebook.num_words()));
    w.u32(static_cast<std::uint32_t>(codebook.dims()));
    for (Eigen::Index c = 0; c < codebook.num_words(); ++c) {
        for (Eigen::Index j = 0; j < codebook.dims(); ++j) w.f64(codebook.centroids(j, c));
    }
    return w.bytes();
}

Codebook decode_codebook(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header("TDFC", 1);
    const std::uint32_t k = r.u32();
    const std::uint32_t dims = r.u32();
    if (k == 0 || dims == 0) throw DataError(origin + ": corrupt file (zero dimension)");
    r.require(static_cast<std::size_t>(k) * dims * 8);
    Codebook cb;
    cb.centroids.resize(dims, k);
    for (std::uint32_t c = 0; c < k; ++c) {
        for (std::uint32_t j = 0; j < dims; ++j) cb.centroids(j, c) = r.f64();
    }
    r.expect_end();
    try {
        cb.validate();
    } catch (const DataError& e) {
        throw DataError(origin + ": " + e.what());
    }
    return cb;
}

void save_codebook(const Codebook& codebook, const std::filesystem::path& path) {
    bin::write_file(path, encode_codebook(codebook));
}

Codebook load_codebook(const std::filesystem::path& path) { return decode_codebook(bin::read_file(path), path.string()); }

std::vector<std::uint8_t> encode_gmm(const GmmModel& model) {
    bin::Writer w;
    w.magic("TDFG");
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(model.num_components()));
    w.u32(static_cast<std::uint32_t>(model.dims()));
    for (Eigen::Index c = 0; c < model.num_components(); ++c) w.f64(model.weights(c));
    for (Eigen::Index c = 0; c < model.num_components(); ++c) {
        for (Eigen::Index j = 0; j < model.dims(); ++j) w.f64(model.means(j, c));
    }
    for (Eigen::Index c = 0; c < model.num_components(); ++c) {
        for (Eigen::Index j = 0; j < model.dims(); ++j) w.f64(model.variances(j, c));
    }
    w.f64(model.variance_floor);
    return w.bytes();
}

GmmModel decode_gmm(std::vector<std::uint8_t> bytes, const std::string& origin) {
    bin::Reader r(std::move(bytes), origin);
    r.expect_header("TDFG", 1);
    const std::uint32_t k = r.u32();
    const std::uint32_t dims = r.u32();
    if (k == 0 || dims == 0) throw DataError(origin + ": corrupt file (zero dimension)");
    r.require((static_cast<std::size_t>(k) * (2 * static_cast<std::size_t>(dims) + 1) + 1) * 8);
    GmmModel model;
    model.weights.resize(k);
    model.means.resize(dims, k);
    model.variances.resize(dims, k);
    for (std::uint32_t c = 0; c < k; ++c) model.weights(c) = r.f64();
    for (std::uint32_t c = 0; c < k; ++c) {
        for (std::uint32_t j = 0; j < dims; ++j) model.means(j, c) = r.f64();
    }
    for (std::uint32_t c = 0; c < k; ++c) {
        for (std::uint32_t j = 0; j < dims; ++j) model.variances(j, c) = r.f64();
    }
    model.variance_floor = r.f64();
    r.expect_end();
    try {
        model.validate();
    } catch (const DataError& e) {
        throw DataError(origin + ": " + e.what());
    }
    return model;
}

void save_gmm(const GmmModel& model, const std::filesystem::path& path) { bin::write_file(path, encode_gmm(model)); }

GmmModel load_gmm(const std::filesystem::path& path) { return decode_gmm(bin::read_file(path), path.string()); }

}  // namespace tdf
