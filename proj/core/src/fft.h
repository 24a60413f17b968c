#pragma once

#include <complex>
#include <vector>

namespace rainforge::detail {

// Row-major 2D complex DFT (forward: e^{-i...}, inverse unnormalized).
std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& in, int width,
                                       int height, bool inverse);

}  // namespace rainforge::detail
