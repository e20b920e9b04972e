#pragma once

// Brute-force reference implementations. Each one is written directly from
// the defining formula, without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "restorekit/image.hpp"

namespace oracle {

using restorekit::Image;

inline int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

inline Image dark_channel(const Image& img, int r) {
    Image out(img.height(), img.width(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double m = std::numeric_limits<double>::infinity();
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    for (int c = 0; c < 3; ++c)
                        m = std::min(m, img.at(reflect(y + dy, img.height()), reflect(x + dx, img.width()), c));
            out.at(y, x) = m;
        }
    return out;
}

/// Per-window least squares of src on guide, then average of the window
/// coefficients covering each pixel. Windows are clipped at the border.
inline Image guided_filter(const Image& guide, const Image& src, int r, double eps) {
    const int h = guide.height(), w = guide.width();
    std::vector<double> a(static_cast<std::size_t>(h) * w), b(a.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double n = 0, sg = 0, sp = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    sg += guide.at(yy, xx);
                    sp += src.at(yy, xx);
                    n += 1;
                }
            const double mg = sg / n, mp = sp / n;
            double var = 0, cov = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    var += (guide.at(yy, xx) - mg) * (guide.at(yy, xx) - mg);
                    cov += (guide.at(yy, xx) - mg) * (src.at(yy, xx) - mp);
                }
            var /= n;
            cov /= n;
            a[y * w + x] = cov / (var + eps);
            b[y * w + x] = mp - a[y * w + x] * mg;
        }
    Image out(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double n = 0, sa = 0, sb = 0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
                for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                    sa += a[yy * w + xx];
                    sb += b[yy * w + xx];
                    n += 1;
                }
            out.at(y, x) = sa / n * guide.at(y, x) + sb / n;
        }
    return out;
}

/// One explicit Perona-Malik step: each of the four neighbours that exists
/// contributes g(|d|) d with g(s) = exp(-(s/K)^2).
inline Image perona_malik_step(const Image& u, double K, double dt) {
    Image out = u;
    const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
    for (int y = 0; y < u.height(); ++y)
        for (int x = 0; x < u.width(); ++x)
            for (int c = 0; c < u.channels(); ++c) {
                double sum = 0;
                for (int k = 0; k < 4; ++k) {
                    const int yy = y + dy[k], xx = x + dx[k];
                    if (yy < 0 || yy >= u.height() || xx < 0 || xx >= u.width()) continue;
                    const double d = u.at(yy, xx, c) - u.at(y, x, c);
                    sum += std::exp(-(d / K) * (d / K)) * d;
                }
                out.at(y, x, c) = u.at(y, x, c) + dt * sum;
            }
    return out;
}

/// Shock evolution on a 1-D signal with edge replication.
inline std::vector<double> shock_step_1d(const std::vector<double>& e, double dt) {
    const int n = static_cast<int>(e.size());
    auto at = [&](int i) { return e[std::clamp(i, 0, n - 1)]; };
    auto minmod = [](double a, double b) {
        if (a > 0 && b > 0) return std::min(a, b);
        if (a < 0 && b < 0) return std::max(a, b);
        return 0.0;
    };
    std::vector<double> out(e);
    for (int i = 0; i < n; ++i) {
        const double lap = at(i - 1) + at(i + 1) - 2 * at(i);
        const double g = std::abs(minmod(at(i + 1) - at(i), at(i) - at(i - 1)));
        const double s = (lap > 0) - (lap < 0);
        out[i] = e[i] - s * g * dt;
    }
    return out;
}

}  // namespace oracle
