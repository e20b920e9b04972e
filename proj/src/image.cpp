#include "restorekit/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

void check_dims(int height, int width, int channels) {
    if (height <= 0 || width <= 0) {
        throw SizeError("image extent must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width));
    }
    if (channels != 1 && channels != 3) {
        throw FormatError("image must have 1 or 3 channels, got " + std::to_string(channels));
    }
}

}  // namespace

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    check_dims(height, width, channels);
    if (!std::isfinite(fill)) throw DomainError("image fill value must be finite");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    check_dims(height, width, channels);
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw SizeError("image data length " + std::to_string(data_.size()) +
                        " does not match " + std::to_string(height) + "x" +
                        std::to_string(width) + "x" + std::to_string(channels));
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
        throw DomainError("image data contains non-finite values");
    }
}

Image Image::clamped(double lo, double hi) const {
    Image out = *this;
    for (double& v : out.data_) v = std::clamp(v, lo, hi);
    return out;
}

Image Image::channel(int c) const {
    Image out(height_, width_, 1);
    const std::size_t n = pixel_count();
    for (std::size_t i = 0; i < n; ++i) out.data_[i] = data_[i * channels_ + c];
    return out;
}

void Image::set_channel(int c, const Image& plane) {
    if (!same_extent(plane) || plane.channels() != 1) {
        throw SizeError("set_channel: plane extent mismatch");
    }
    const std::size_t n = pixel_count();
    for (std::size_t i = 0; i < n; ++i) data_[i * channels_ + c] = plane.data_[i];
}

double Image::min_value() const { return *std::min_element(data_.begin(), data_.end()); }
double Image::max_value() const { return *std::max_element(data_.begin(), data_.end()); }
double Image::mean() const {
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

Image to_gray(const Image& img) {
    if (img.channels() == 1) return img;
    Image out(img.height(), img.width(), 1);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    }
    return out;
}

Image broadcast_channels(const Image& gray, int channels) {
    if (gray.channels() == channels) return gray;
    if (gray.channels() != 1) throw FormatError("broadcast_channels expects a 1-channel image");
    Image out(gray.height(), gray.width(), channels);
    for (int c = 0; c < channels; ++c) out.set_channel(c, gray);
    return out;
}

Kernel2D::Kernel2D(int height, int width, std::vector<double> taps)
    : height_(height), width_(width), taps_(std::move(taps)) {
    if (height <= 0 || width <= 0 || height % 2 == 0 || width % 2 == 0) {
        throw SizeError("kernel extent must be odd and positive, got " + std::to_string(height) +
                        "x" + std::to_string(width));
    }
    if (taps_.size() != static_cast<std::size_t>(height) * width) {
        throw SizeError("kernel tap count does not match its extent");
    }
    if (!std::all_of(taps_.begin(), taps_.end(), [](double v) { return std::isfinite(v); })) {
        throw DomainError("kernel taps must be finite");
    }
}

Kernel2D Kernel2D::identity() { return Kernel2D(1, 1, {1.0}); }

Kernel2D Kernel2D::box(int size) {
    if (size <= 0 || size % 2 == 0) throw SizeError("box kernel size must be odd");
    const double w = 1.0 / (static_cast<double>(size) * size);
    return Kernel2D(size, size, std::vector<double>(static_cast<std::size_t>(size) * size, w));
}

Kernel2D Kernel2D::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw DomainError("gaussian kernel sigma must be positive");
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    const int n = 2 * r + 1;
    std::vector<double> taps(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dy = i - r;
            const double dx = j - r;
            taps[static_cast<std::size_t>(i) * n + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        }
    }
    return Kernel2D(n, n, std::move(taps)).normalized();
}

Kernel2D Kernel2D::motion(int length, double angle_deg) {
    if (length < 1) throw DomainError("motion kernel length must be >= 1");
    const int r = length / 2;
    const int n = 2 * r + 1;
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(theta);
    const double uy = -std::sin(theta);
    const double half = 0.5 * (length - 1);
    // Supersampled line segment, splatted bilinearly.
    std::vector<double> taps(static_cast<std::size_t>(n) * n, 0.0);
    const int samples = 8 * length + 1;
    for (int s = 0; s < samples; ++s) {
        const double u = samples == 1 ? 0.0 : -half + (2.0 * half) * s / (samples - 1);
        const double fx = r + u * ux;
        const double fy = r + u * uy;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double ax = fx - x0;
        const double ay = fy - y0;
        const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
        for (int k = 0; k < 4; ++k) {
            if (xs[k] >= 0 && xs[k] < n && ys[k] >= 0 && ys[k] < n) {
                taps[static_cast<std::size_t>(ys[k]) * n + xs[k]] += w[k];
            }
        }
    }
    return Kernel2D(n, n, std::move(taps)).normalized();
}

double Kernel2D::sum() const { return std::accumulate(taps_.begin(), taps_.end(), 0.0); }

bool Kernel2D::non_negative() const {
    return std::all_of(taps_.begin(), taps_.end(), [](double v) { return v >= 0.0; });
}

bool Kernel2D::is_normalized() const { return non_negative() && std::abs(sum() - 1.0) <= 1e-6; }

Kernel2D Kernel2D::normalized() const {
    const double s = sum();
    if (s == 0.0) throw DomainError("cannot normalize a kernel whose taps sum to zero");
    std::vector<double> taps = taps_;
    for (double& v : taps) v /= s;
    return Kernel2D(height_, width_, std::move(taps));
}

int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

int replicate_index(int i, int n) noexcept { return std::clamp(i, 0, n - 1); }

}  // namespace restorekit
