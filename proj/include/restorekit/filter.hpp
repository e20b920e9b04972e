#pragma once

#include <complex>
#include <vector>

#include "restorekit/image.hpp"

namespace restorekit {

enum class Boundary { Reflect, Replicate };

/// Kernels with more taps than this go through the FFT path.
inline constexpr int kDirectConvolutionMaxTaps = 49;

/// Per-channel 2-D convolution (kernel flipped), output has the input shape.
/// Throws SizeError when the kernel is larger than the image.
Image convolve2d(const Image& img, const Kernel2D& kernel, Boundary boundary = Boundary::Reflect);

/// Forced direct or FFT evaluation; `convolve2d` picks by tap count.
Image convolve2d_direct(const Image& img, const Kernel2D& kernel, Boundary boundary = Boundary::Reflect);
Image convolve2d_fft(const Image& img, const Kernel2D& kernel, Boundary boundary = Boundary::Reflect);

/// 2x2 average pooling. Odd extents are replicate-padded on the bottom/right
/// edge first, so the result is ceil(h/2) x ceil(w/2).
Image downsample2(const Image& img);

/// Bilinear resampling with pixel centres aligned (half-pixel offsets).
Image resize_bilinear(const Image& img, int height, int width);

/// Pads by `pad_y` rows and `pad_x` columns on every side.
Image pad(const Image& img, int pad_y, int pad_x, Boundary boundary);

/// Separable min filter over a (2r+1)^2 window, reflect boundary.
Image min_filter(const Image& img, int radius);

/// Mean over the (2r+1)^2 window clipped to the image (count-normalized).
Image box_mean(const Image& img, int radius);

namespace fft {

/// Real 2-D forward transform of a row-major `rows x cols` plane. Returns the
/// half spectrum, `rows x (cols/2 + 1)`.
std::vector<std::complex<double>> forward(const std::vector<double>& plane, int rows, int cols);
/// Inverse of `forward`, normalized so that inverse(forward(x)) == x.
std::vector<double> inverse(const std::vector<std::complex<double>>& spectrum, int rows, int cols);

/// Embeds the kernel in a `rows x cols` plane with its centre at the origin
/// (circularly wrapped), suitable for circular convolution.
std::vector<double> kernel_plane(const Kernel2D& kernel, int rows, int cols);

}  // namespace fft

}  // namespace restorekit
