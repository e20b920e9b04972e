#include "restorekit/filter.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <string>

#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

int map_index(int i, int n, Boundary b) noexcept {
    return b == Boundary::Reflect ? reflect_index(i, n) : replicate_index(i, n);
}

void check_kernel_fits(const Image& img, const Kernel2D& k) {
    if (k.height() > img.height() || k.width() > img.width()) {
        throw SizeError("kernel " + std::to_string(k.height()) + "x" + std::to_string(k.width()) +
                        " larger than image " + std::to_string(img.height()) + "x" +
                        std::to_string(img.width()));
    }
}

// FFTW's planner is not re-entrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

}  // namespace

Image pad(const Image& img, int pad_y, int pad_x, Boundary boundary) {
    const int h = img.height() + 2 * pad_y;
    const int w = img.width() + 2 * pad_x;
    const int ch = img.channels();
    Image out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        const int sy = map_index(y - pad_y, img.height(), boundary);
        for (int x = 0; x < w; ++x) {
            const int sx = map_index(x - pad_x, img.width(), boundary);
            for (int c = 0; c < ch; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

Image convolve2d(const Image& img, const Kernel2D& kernel, Boundary boundary) {
    check_kernel_fits(img, kernel);
    if (kernel.height() * kernel.width() > kDirectConvolutionMaxTaps) return convolve2d_fft(img, kernel, boundary);
    return convolve2d_direct(img, kernel, boundary);
}

Image convolve2d_direct(const Image& img, const Kernel2D& kernel, Boundary boundary) {
    check_kernel_fits(img, kernel);
    const int ry = kernel.radius_y();
    const int rx = kernel.radius_x();
    const Image padded = pad(img, ry, rx, boundary);
    const int ch = img.channels();
    Image out(img.height(), img.width(), ch);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < ch; ++c) {
                double acc = 0.0;
                for (int i = 0; i < kernel.height(); ++i) {
                    for (int j = 0; j < kernel.width(); ++j) {
                        // Flipped taps: true convolution.
                        acc += kernel.at(i, j) * padded.at(y + 2 * ry - i, x + 2 * rx - j, c);
                    }
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

Image convolve2d_fft(const Image& img, const Kernel2D& kernel, Boundary boundary) {
    check_kernel_fits(img, kernel);
    const int ry = kernel.radius_y();
    const int rx = kernel.radius_x();
    const Image padded = pad(img, ry, rx, boundary);
    const int rows = padded.height();
    const int cols = padded.width();
    const auto kspec = fft::forward(fft::kernel_plane(kernel, rows, cols), rows, cols);
    Image out(img.height(), img.width(), img.channels());
    std::vector<double> plane(static_cast<std::size_t>(rows) * cols);
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < rows; ++y) {
            for (int x = 0; x < cols; ++x) plane[static_cast<std::size_t>(y) * cols + x] = padded.at(y, x, c);
        }
        auto spec = fft::forward(plane, rows, cols);
        for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= kspec[i];
        const auto res = fft::inverse(spec, rows, cols);
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                out.at(y, x, c) = res[static_cast<std::size_t>(y + ry) * cols + (x + rx)];
            }
        }
    }
    return out;
}

Image downsample2(const Image& img) {
    const int oh = (img.height() + 1) / 2;
    const int ow = (img.width() + 1) / 2;
    const int ch = img.channels();
    Image out(oh, ow, ch);
    for (int y = 0; y < oh; ++y) {
        const int y0 = 2 * y;
        const int y1 = std::min(2 * y + 1, img.height() - 1);
        for (int x = 0; x < ow; ++x) {
            const int x0 = 2 * x;
            const int x1 = std::min(2 * x + 1, img.width() - 1);
            for (int c = 0; c < ch; ++c) {
                out.at(y, x, c) =
                    0.25 * (img.at(y0, x0, c) + img.at(y0, x1, c) + img.at(y1, x0, c) + img.at(y1, x1, c));
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& img, int height, int width) {
    if (height < 1 || width < 1) throw DomainError("resize target must be at least 1x1");
    if (height == img.height() && width == img.width()) return img;
    const int ch = img.channels();
    Image out(height, width, ch);
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = fx - x0;
            for (int c = 0; c < ch; ++c) {
                const double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                const double bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out.at(y, x, c) = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

Image min_filter(const Image& img, int radius) {
    if (radius < 0) throw DomainError("min_filter radius must be >= 0");
    if (radius == 0) return img;
    const int h = img.height();
    const int w = img.width();
    const int ch = img.channels();
    Image rows(h, w, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double m = std::numeric_limits<double>::infinity();
                for (int d = -radius; d <= radius; ++d) m = std::min(m, img.at(y, reflect_index(x + d, w), c));
                rows.at(y, x, c) = m;
            }
        }
    }
    Image out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double m = std::numeric_limits<double>::infinity();
                for (int d = -radius; d <= radius; ++d) m = std::min(m, rows.at(reflect_index(y + d, h), x, c));
                out.at(y, x, c) = m;
            }
        }
    }
    return out;
}

Image box_mean(const Image& img, int radius) {
    const int h = img.height();
    const int w = img.width();
    const int ch = img.channels();
    // Summed-area table with a zero guard row/column.
    std::vector<double> sat(static_cast<std::size_t>(h + 1) * (w + 1) * ch, 0.0);
    auto idx = [&](int y, int x, int c) { return (static_cast<std::size_t>(y) * (w + 1) + x) * ch + c; };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                sat[idx(y + 1, x + 1, c)] =
                    img.at(y, x, c) + sat[idx(y, x + 1, c)] + sat[idx(y + 1, x, c)] - sat[idx(y, x, c)];
            }
        }
    }
    Image out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w, x + radius + 1);
            const double count = static_cast<double>(y1 - y0) * (x1 - x0);
            for (int c = 0; c < ch; ++c) {
                const double s = sat[idx(y1, x1, c)] - sat[idx(y0, x1, c)] - sat[idx(y1, x0, c)] + sat[idx(y0, x0, c)];
                out.at(y, x, c) = s / count;
            }
        }
    }
    return out;
}

namespace fft {

std::vector<std::complex<double>> forward(const std::vector<double>& plane, int rows, int cols) {
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const std::size_t nc = static_cast<std::size_t>(rows) * (cols / 2 + 1);
    FftwBuffer<double> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    FftwBuffer<fftw_complex> out(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_2d(rows, cols, in.get(), out.get(), FFTW_ESTIMATE);
    }
    std::memcpy(in.get(), plane.data(), sizeof(double) * n);
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<std::complex<double>> spec(nc);
    for (std::size_t i = 0; i < nc; ++i) spec[i] = {out[i][0], out[i][1]};
    return spec;
}

std::vector<double> inverse(const std::vector<std::complex<double>>& spectrum, int rows, int cols) {
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const std::size_t nc = static_cast<std::size_t>(rows) * (cols / 2 + 1);
    FftwBuffer<fftw_complex> in(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
    FftwBuffer<double> out(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_c2r_2d(rows, cols, in.get(), out.get(), FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < nc; ++i) {
        in[i][0] = spectrum[i].real();
        in[i][1] = spectrum[i].imag();
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    std::vector<double> res(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = out[i] * scale;
    return res;
}

std::vector<double> kernel_plane(const Kernel2D& kernel, int rows, int cols) {
    std::vector<double> plane(static_cast<std::size_t>(rows) * cols, 0.0);
    const int ry = kernel.radius_y();
    const int rx = kernel.radius_x();
    for (int i = 0; i < kernel.height(); ++i) {
        for (int j = 0; j < kernel.width(); ++j) {
            const int y = ((i - ry) % rows + rows) % rows;
            const int x = ((j - rx) % cols + cols) % cols;
            plane[static_cast<std::size_t>(y) * cols + x] += kernel.at(i, j);
        }
    }
    return plane;
}

}  // namespace fft

}  // namespace restorekit
