#include <cmath>
#include <complex>

#include "restorekit/cues.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"

namespace restorekit {

Image wiener_deconvolve(const Image& img, const Kernel2D& psf, double k) {
    if (!(k >= 0.0)) throw DomainError("wiener_deconvolve: k must be >= 0");
    if (std::all_of(psf.taps().begin(), psf.taps().end(), [](double v) { return v == 0.0; })) {
        throw DomainError("wiener_deconvolve: PSF is all zeros");
    }
    if (psf.height() > img.height() || psf.width() > img.width()) {
        throw SizeError("wiener_deconvolve: PSF larger than image");
    }
    const Kernel2D h = psf.normalized();

    // Even-symmetric extension to 2H x 2W removes the wrap-around seam.
    const int rows = 2 * img.height();
    const int cols = 2 * img.width();
    const auto otf = fft::forward(fft::kernel_plane(h, rows, cols), rows, cols);
    std::vector<std::complex<double>> gain(otf.size());
    for (std::size_t i = 0; i < otf.size(); ++i) {
        const double power = std::norm(otf[i]);
        const double denom = power + k;
        gain[i] = denom > 0.0 ? std::conj(otf[i]) / denom : std::complex<double>{};
    }

    Image out(img.height(), img.width(), img.channels());
    std::vector<double> plane(static_cast<std::size_t>(rows) * cols);
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < rows; ++y) {
            const int sy = reflect_index(y, img.height());
            for (int x = 0; x < cols; ++x) {
                plane[static_cast<std::size_t>(y) * cols + x] = img.at(sy, reflect_index(x, img.width()), c);
            }
        }
        auto spec = fft::forward(plane, rows, cols);
        for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= gain[i];
        const auto res = fft::inverse(spec, rows, cols);
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) out.at(y, x, c) = res[static_cast<std::size_t>(y) * cols + x];
        }
    }
    return out;
}

}  // namespace restorekit
