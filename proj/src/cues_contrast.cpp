#include <algorithm>
#include <cmath>

#include "restorekit/cues.hpp"
#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

constexpr int kBins = 256;

int bin_of(double v) { return std::clamp(static_cast<int>(v * kBins), 0, kBins - 1); }

/// Clipped-histogram equalization curve for one tile.
struct TileMapping {
    bool identity = false;
    std::array<double, kBins> lut{};

    double operator()(double v) const { return identity ? v : lut[bin_of(v)]; }
};

TileMapping build_mapping(const Image& luma, int y0, int y1, int x0, int x1, double clip_limit) {
    std::array<double, kBins> hist{};
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) hist[bin_of(luma.at(y, x))] += 1.0;
    }
    const double total = static_cast<double>(y1 - y0) * (x1 - x0);
    TileMapping m;
    if (std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; }) <= 1) {
        m.identity = true;
        return m;
    }
    const double clip = std::max(1.0, clip_limit * total / kBins);
    double excess = 0.0;
    for (double& h : hist) {
        if (h > clip) {
            excess += h - clip;
            h = clip;
        }
    }
    const double share = excess / kBins;
    double cdf = 0.0;
    for (int b = 0; b < kBins; ++b) {
        cdf += hist[b] + share;
        m.lut[b] = std::min(1.0, cdf / total);
    }
    return m;
}

// Splits [0, n) into `parts` contiguous, nearly equal ranges.
std::vector<int> split(int n, int parts) {
    std::vector<int> edges(parts + 1);
    for (int i = 0; i <= parts; ++i) edges[i] = static_cast<int>(static_cast<long>(n) * i / parts);
    return edges;
}

}  // namespace

Image color_map_raw(const Image& img, double eps) {
    if (img.channels() != 3) throw DomainError("color_map requires a 3-channel image");
    Image out(img.height(), img.width(), 3);
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const double sum = src[3 * i] + src[3 * i + 1] + src[3 * i + 2];
        for (int c = 0; c < 3; ++c) dst[3 * i + c] = std::clamp(3.0 * src[3 * i + c] / (sum + eps), 0.0, 3.0);
    }
    return out;
}

Image color_map(const Image& img, double eps) {
    Image out = color_map_raw(img, eps);
    for (double& v : out.data()) v /= 3.0;
    return out;
}

Image clahe(const Image& img, int tile, double clip_limit) {
    if (tile < 2) throw DomainError("clahe: tile must be >= 2");
    if (!(clip_limit >= 1.0)) throw DomainError("clahe: clip_limit must be >= 1");
    const Image luma = to_gray(img).clamped();
    const int h = img.height();
    const int w = img.width();
    const bool global = h < tile || w < tile;
    const int ny = global ? 1 : h / tile;
    const int nx = global ? 1 : w / tile;
    const auto ey = split(h, ny);
    const auto ex = split(w, nx);

    std::vector<TileMapping> maps;
    maps.reserve(static_cast<std::size_t>(ny) * nx);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) maps.push_back(build_mapping(luma, ey[ty], ey[ty + 1], ex[tx], ex[tx + 1], clip_limit));
    }
    std::vector<double> cy(ny), cx(nx);
    for (int i = 0; i < ny; ++i) cy[i] = 0.5 * (ey[i] + ey[i + 1]) - 0.5;
    for (int i = 0; i < nx; ++i) cx[i] = 0.5 * (ex[i] + ex[i + 1]) - 0.5;

    // Neighbouring tile indices and blend weight along one axis.
    auto locate = [](const std::vector<double>& centers, double p, int& i0, int& i1, double& wt) {
        const int n = static_cast<int>(centers.size());
        if (p <= centers.front()) {
            i0 = i1 = 0;
            wt = 0.0;
            return;
        }
        if (p >= centers.back()) {
            i0 = i1 = n - 1;
            wt = 0.0;
            return;
        }
        i0 = static_cast<int>(std::upper_bound(centers.begin(), centers.end(), p) - centers.begin()) - 1;
        i1 = i0 + 1;
        wt = (p - centers[i0]) / (centers[i1] - centers[i0]);
    };

    Image out(h, w, img.channels());
    for (int y = 0; y < h; ++y) {
        int y0, y1;
        double wy;
        locate(cy, y, y0, y1, wy);
        for (int x = 0; x < w; ++x) {
            int x0, x1;
            double wx;
            locate(cx, x, x0, x1, wx);
            const double v = luma.at(y, x);
            const double top = (1 - wx) * maps[y0 * nx + x0](v) + wx * maps[y0 * nx + x1](v);
            const double bottom = (1 - wx) * maps[y1 * nx + x0](v) + wx * maps[y1 * nx + x1](v);
            const double mapped = (1 - wy) * top + wy * bottom;
            if (img.channels() == 1) {
                out.at(y, x) = mapped;
            } else if (v > 0.0) {
                const double ratio = mapped / v;
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = std::clamp(img.at(y, x, c) * ratio, 0.0, 1.0);
            } else {
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = mapped;
            }
        }
    }
    return out;
}

}  // namespace restorekit
