#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tdf/tensorio.hpp"

namespace tdf {

// Interpolated DFT magnitudes of a feature sequence. Column s is the DFT
// feature at normalized frequency frequency_axis[s] (0 = DC, 1 = sampling rate).
struct Spectrum {
    Eigen::MatrixXd values;               // dims x length, entries >= 0
    std::vector<double> frequency_axis;   // length entries, strictly increasing from 0

    Eigen::Index dims() const { return values.rows(); }
    Eigen::Index length() const { return values.cols(); }
};

// In-place forward DFT of arbitrary length: iterative radix-2 for powers of
// two, Bluestein's chirp-z otherwise.
void fft(std::vector<std::complex<double>>& data);

// |DFT| of a real signal via fft(). Output has the same length as the input.
std::vector<double> dft_magnitude(std::span<const double> signal);

// O(N^2) direct evaluation of the DFT sum followed by the modulus.
std::vector<double> naive_dft_reference(std::span<const double> signal);

// Keys cubic convolution (a = -1/2) from N knots on [0, 1] to L equally
// spaced points on [0, 1]. Taps outside the knots come from linear
// extrapolation of the two edge samples. N in {2, 3} falls back to linear
// interpolation and N = 1 to replication.
std::vector<double> cubic_resample(std::span<const double> points, int target_length);

// Per-dimension |DFT| resampled to target_length bins and clamped at zero.
Spectrum spectrum_of_sequence(const FeatureSequence& seq, int target_length);
Spectrum spectrum_of_matrix(const Eigen::MatrixXd& frames, int target_length);

}  // namespace tdf
