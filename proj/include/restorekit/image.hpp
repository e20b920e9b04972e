#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace restorekit {

/// Row-major, channel-interleaved floating-point raster.
///
/// Element (y, x, c) lives at `(y * width + x) * channels + c`. Values are
/// nominally intensities in [0, 1] but the type only enforces finiteness:
/// clamping is always an explicit call to `clamped()`.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);
    Image(int height, int width, int channels, std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
    }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int y, int x, int c = 0) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int y, int x, int c = 0) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }
    bool same_extent(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    /// Copy with every value clamped to [lo, hi].
    Image clamped(double lo = 0.0, double hi = 1.0) const;
    /// Single channel `c` as a 1-channel image.
    Image channel(int c) const;
    void set_channel(int c, const Image& plane);

    double min_value() const;
    double max_value() const;
    double mean() const;

    friend bool operator==(const Image&, const Image&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Rec. 601 luma for 3-channel input; identity copy for 1-channel.
Image to_gray(const Image& img);

/// Replicate a 1-channel image into `channels` identical planes.
Image broadcast_channels(const Image& gray, int channels);

/// Odd-sized 2-D filter taps, row-major.
class Kernel2D {
public:
    Kernel2D() = default;
    Kernel2D(int height, int width, std::vector<double> taps);

    static Kernel2D identity();
    static Kernel2D box(int size);
    /// Sampled Gaussian with radius ceil(3 sigma), normalized.
    static Kernel2D gaussian(double sigma);
    /// Anti-aliased line of `length` pixels at `angle_deg`, normalized.
    static Kernel2D motion(int length, double angle_deg);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int radius_y() const noexcept { return height_ / 2; }
    int radius_x() const noexcept { return width_ / 2; }
    std::span<const double> taps() const noexcept { return taps_; }
    double at(int i, int j) const noexcept { return taps_[static_cast<std::size_t>(i) * width_ + j]; }

    double sum() const;
    bool non_negative() const;
    /// Non-negative with taps summing to 1 within 1e-6.
    bool is_normalized() const;
    /// Divide by the tap sum. Throws DomainError when the sum is zero.
    Kernel2D normalized() const;

    friend bool operator==(const Kernel2D&, const Kernel2D&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> taps_;
};

/// Maps an out-of-range coordinate onto [0, n) by half-sample symmetric
/// reflection (`... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...`).
int reflect_index(int i, int n) noexcept;
/// Clamps a coordinate onto [0, n).
int replicate_index(int i, int n) noexcept;

}  // namespace restorekit
