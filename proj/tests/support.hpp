#pragma once

// Shared fixtures for the test binaries: seeded random images, synthetic
// scenes, and scratch directories.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "restorekit/image.hpp"
#include "restorekit/metrics.hpp"

namespace testsupport {

using restorekit::Image;

inline Image random_image(std::uint64_t seed, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(h, w, c);
    for (double& v : img.data()) v = u(rng);
    return img;
}

inline Image constant_image(int h, int w, int c, double v) { return Image(h, w, c, v); }

/// Smooth colourful scene: low-frequency gradients plus a few soft blobs.
/// Band-limited enough that deconvolution round-trips are well conditioned.
inline Image smooth_scene(std::uint64_t seed, int h, int w) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, 3);
    double base[3], gx[3], gy[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = 0.25 + 0.5 * u(rng);
        gx[c] = 0.3 * (u(rng) - 0.5);
        gy[c] = 0.3 * (u(rng) - 0.5);
    }
    struct Blob { double cx, cy, s, amp[3]; };
    Blob blobs[5];
    for (auto& b : blobs) {
        b.cx = u(rng) * w;
        b.cy = u(rng) * h;
        b.s = (0.08 + 0.12 * u(rng)) * std::min(h, w);
        for (double& a : b.amp) a = 0.4 * (u(rng) - 0.5);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + gx[c] * (x / double(w) - 0.5) + gy[c] * (y / double(h) - 0.5);
                for (const auto& b : blobs) {
                    const double d2 = (x - b.cx) * (x - b.cx) + (y - b.cy) * (y - b.cy);
                    v += b.amp[c] * std::exp(-d2 / (2 * b.s * b.s));
                }
                img.at(y, x, c) = std::clamp(v, 0.02, 0.98);
            }
        }
    }
    return img;
}

/// Outdoor-like scene whose every local patch contains a near-zero channel:
/// saturated colour tiles with soft texture.
inline Image dark_channel_sparse_scene(std::uint64_t seed, int h, int w, int tile = 8) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, 3);
    const int ty = (h + tile - 1) / tile;
    const int tx = (w + tile - 1) / tile;
    std::vector<std::array<double, 3>> colors(static_cast<std::size_t>(ty) * tx);
    for (auto& col : colors) {
        const int zero = static_cast<int>(u(rng) * 3) % 3;
        for (int c = 0; c < 3; ++c) col[c] = c == zero ? 0.02 * u(rng) : 0.2 + 0.75 * u(rng);
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto& col = colors[static_cast<std::size_t>(y / tile) * tx + x / tile];
            const double tex = 0.9 + 0.1 * std::sin(0.7 * x + 0.3 * y);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(col[c] * tex, 0.0, 1.0);
        }
    }
    return img;
}

/// dark_channel_sparse_scene with a sky band over the top quarter whose
/// radiance sits near `sky` (the airlight of the intended haze).
inline Image outdoor_scene(std::uint64_t seed, int h, int w, double sky = 0.9) {
    Image img = dark_channel_sparse_scene(seed, h, w);
    const int band = h / 4;
    for (int y = 0; y < band; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = sky - 0.05 * y / std::max(1, band - 1);
    return img;
}

/// PSNR on the centred crop keeping `fraction` of each dimension.
inline double interior_psnr(const Image& a, const Image& b, double fraction = 0.8) {
    const int my = static_cast<int>(std::lround(a.height() * (1.0 - fraction) / 2.0));
    const int mx = static_cast<int>(std::lround(a.width() * (1.0 - fraction) / 2.0));
    const int h = a.height() - 2 * my;
    const int w = a.width() - 2 * mx;
    Image ca(h, w, a.channels()), cb(h, w, b.channels());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < a.channels(); ++c) {
                ca.at(y, x, c) = a.at(y + my, x + mx, c);
                cb.at(y, x, c) = b.at(y + my, x + mx, c);
            }
    return restorekit::psnr(ca, cb);
}

class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("restorekit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
