#pragma once

#include <vector>

#include "pegtransfer/render.hpp"

namespace pegtransfer {

/// Activation map with the same dimensions as the correlated image:
/// A(u, v) = sum_{i,j} T(u + i - c, v + j - c) * M(i, j), with c the mask centre
/// and T zero outside the image.
struct ActivationMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    double at(int u, int v) const { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
};

/// Reference path: direct summation. O(W * H * S^2).
ActivationMap correlate_direct(const BinaryImage& image, const BinaryImage& mask);

/// Frequency-domain path for every mask of the set. Transforms of the masks are
/// cached per thread, keyed by mask fingerprint and image size.
std::vector<ActivationMap> correlate_fft(const BinaryImage& image, const MaskSet& masks);

/// Smallest integer >= n whose prime factors are all in {2, 3, 5, 7}.
int fft_friendly_size(int n);

}  // namespace pegtransfer
