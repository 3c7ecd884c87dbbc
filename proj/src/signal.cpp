#include "tdf/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "tdf/error.hpp"

namespace tdf {

namespace {

using cd = std::complex<double>;

void check_signal(std::span<const double> signal) {
    if (signal.empty()) throw DataError("signal must have at least one sample");
    for (double v : signal) {
        if (!std::isfinite(v)) throw DataError("non-finite signal value");
    }
}

// exp(-2 pi i num / den), with the angle reduced first so large products stay exact.
cd unit_root(std::uint64_t num, std::uint64_t den) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(num % den) / static_cast<double>(den);
    return {std::cos(angle), std::sin(angle)};
}

void fft_radix2(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    // Twiddles for the full length, indexed by stride at each stage.
    std::vector<cd> tw(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        tw[k] = unit_root(k, n);
        if (inverse) tw[k] = std::conj(tw[k]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cd u = a[i + k];
                const cd v = a[i + k + half] * tw[k * stride];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

void fft_bluestein(std::vector<cd>& a) {
    const std::size_t n = a.size();
    const std::size_t m = std::bit_ceil(2 * n - 1);

    // chirp[k] = exp(-i pi k^2 / n); k^2 is reduced mod 2n before scaling.
    std::vector<cd> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        chirp[k] = unit_root(static_cast<std::uint64_t>(k) * k, 2 * n);
    }

    std::vector<cd> x(m, cd{}), y(m, cd{});
    for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
    y[0] = std::conj(chirp[0]);
    for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);

    fft_radix2(x, false);
    fft_radix2(y, false);
    for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
    fft_radix2(x, true);

    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * scale * chirp[k];
}

// Keys kernel, a = -1/2.
double keys_weight(double s) {
    constexpr double a = -0.5;
    s = std::abs(s);
    if (s < 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
    if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
    return 0.0;
}

}  // namespace

void fft(std::vector<std::complex<double>>& data) {
    if (data.size() <= 1) return;
    if (std::has_single_bit(data.size())) {
        fft_radix2(data, false);
    } else {
        fft_bluestein(data);
    }
}

std::vector<double> dft_magnitude(std::span<const double> signal) {
    check_signal(signal);
    std::vector<cd> buf(signal.begin(), signal.end());
    fft(buf);
    std::vector<double> out(buf.size());
    std::transform(buf.begin(), buf.end(), out.begin(), [](const cd& z) { return std::abs(z); });
    return out;
}

std::vector<double> naive_dft_reference(std::span<const double> signal) {
    check_signal(signal);
    const std::size_t n = signal.size();
    std::vector<double> out(n);
    for (std::size_t s = 0; s < n; ++s) {
        cd acc{};
        for (std::size_t t = 0; t < n; ++t) acc += signal[t] * unit_root(static_cast<std::uint64_t>(t) * s, n);
        out[s] = std::abs(acc);
    }
    return out;
}

std::vector<double> cubic_resample(std::span<const double> points, int target_length) {
    if (target_length < 1) throw DataError("target length must be at least 1");
    if (points.empty()) throw DataError("cannot resample an empty signal");

    const auto n = static_cast<long>(points.size());
    const auto len = static_cast<long>(target_length);
    std::vector<double> out(static_cast<std::size_t>(len));

    if (n == 1) {
        std::fill(out.begin(), out.end(), points[0]);
        return out;
    }

    // Output position i on the knot index axis is i * (n-1) / (len-1); the
    // integer product keeps knot-aligned positions exact.
    auto knot_position = [&](long i) {
        return len == 1 ? 0.0 : static_cast<double>(i * (n - 1)) / static_cast<double>(len - 1);
    };

    if (n < 4) {
        for (long i = 0; i < len; ++i) {
            const double u = knot_position(i);
            const long j = std::min(static_cast<long>(std::floor(u)), n - 2);
            const double t = u - static_cast<double>(j);
            out[i] = (1.0 - t) * points[j] + t * points[j + 1];
        }
        return out;
    }

    auto sample = [&](long j) {
        if (j < 0) return points[0] + static_cast<double>(j) * (points[1] - points[0]);
        if (j >= n) return points[n - 1] + static_cast<double>(j - n + 1) * (points[n - 1] - points[n - 2]);
        return points[j];
    };

    for (long i = 0; i < len; ++i) {
        const double u = knot_position(i);
        const long j = std::min(static_cast<long>(std::floor(u)), n - 2);
        const double t = u - static_cast<double>(j);
        double acc = 0.0;
        for (long m = -1; m <= 2; ++m) acc += sample(j + m) * keys_weight(t - static_cast<double>(m));
        out[i] = acc;
    }
    return out;
}

Spectrum spectrum_of_matrix(const Eigen::MatrixXd& frames, int target_length) {
    if (target_length < 1) throw DataError("spectrum length must be at least 1");
    if (frames.rows() < 1 || frames.cols() < 1) throw DataError("empty feature matrix");

    Spectrum spec;
    spec.values.resize(frames.rows(), target_length);
    std::vector<double> row(static_cast<std::size_t>(frames.cols()));
    for (Eigen::Index k = 0; k < frames.rows(); ++k) {
        for (Eigen::Index i = 0; i < frames.cols(); ++i) row[i] = frames(k, i);
        const auto resampled = cubic_resample(dft_magnitude(row), target_length);
        for (int s = 0; s < target_length; ++s) spec.values(k, s) = std::max(0.0, resampled[s]);
    }

    spec.frequency_axis.resize(static_cast<std::size_t>(target_length));
    for (int s = 0; s < target_length; ++s) {
        spec.frequency_axis[s] = target_length == 1 ? 0.0 : static_cast<double>(s) / (target_length - 1);
    }
    return spec;
}

Spectrum spectrum_of_sequence(const FeatureSequence& seq, int target_length) {
    return spectrum_of_matrix(seq.values(), target_length);
}

}  // namespace tdf
