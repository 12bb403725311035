#pragma once

#include <complex>
#include <span>
#include <vector>

namespace lockloop::fft {

// Real-to-complex forward transform, length n/2+1 output, unnormalized
// (matches the usual DFT sum). Planning is serialized internally, so calls
// are safe from multiple threads.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Inverse of rfft, normalized by 1/n: irfft(rfft(x), x.size()) == x.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

// In-place complex FFT (forward: sign -1), unnormalized.
void cfft(std::vector<std::complex<double>>& data, bool inverse);

}  // namespace lockloop::fft
