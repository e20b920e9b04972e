#include <algorithm>
#include <cmath>

#include "restorekit/cues.hpp"
#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

double minmod(double a, double b) noexcept {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

double sign(double v) noexcept { return (v > 0.0) - (v < 0.0); }

// Neumann boundary: the mirrored neighbour equals the edge pixel.
double at_clamped(const Image& e, int y, int x) {
    return e.at(std::clamp(y, 0, e.height() - 1), std::clamp(x, 0, e.width() - 1));
}

}  // namespace

Image shock_step(const Image& e, double dt) {
    Image next = e;
    for (int y = 0; y < e.height(); ++y) {
        for (int x = 0; x < e.width(); ++x) {
            const double c = e.at(y, x);
            const double n = at_clamped(e, y - 1, x);
            const double s = at_clamped(e, y + 1, x);
            const double w = at_clamped(e, y, x - 1);
            const double ea = at_clamped(e, y, x + 1);
            const double lap = n + s + w + ea - 4.0 * c;
            if (lap == 0.0) continue;
            const double gx = minmod(ea - c, c - w);
            const double gy = minmod(s - c, c - n);
            const double grad = std::sqrt(gx * gx + gy * gy);
            next.at(y, x) = c - sign(lap) * grad * dt;
        }
    }
    return next;
}

ShockResult shock_filter(const Image& img, double dt, int iterations, double edge_threshold) {
    if (!(dt > 0.0 && dt <= 0.5)) throw DomainError("shock_filter: dt must lie in (0, 0.5]");
    if (iterations < 1) throw DomainError("shock_filter: iterations must be >= 1");
    Image e = to_gray(img);
    for (int i = 0; i < iterations; ++i) e = shock_step(e, dt);

    Image mag(e.height(), e.width(), 1);
    double peak = 0.0;
    for (int y = 0; y < e.height(); ++y) {
        for (int x = 0; x < e.width(); ++x) {
            const double gx = 0.5 * (at_clamped(e, y, x + 1) - at_clamped(e, y, x - 1));
            const double gy = 0.5 * (at_clamped(e, y + 1, x) - at_clamped(e, y - 1, x));
            const double m = std::sqrt(gx * gx + gy * gy);
            mag.at(y, x) = m;
            peak = std::max(peak, m);
        }
    }
    Image edges(e.height(), e.width(), 1, 0.0);
    if (peak > 0.0) {
        for (std::size_t i = 0; i < edges.size(); ++i) {
            edges.data()[i] = mag.data()[i] / peak > edge_threshold ? 1.0 : 0.0;
        }
    }
    return {std::move(edges), std::move(e)};
}

Image perona_malik(const Image& img, double conduction, double dt, int iterations) {
    if (!(conduction > 0.0)) throw DomainError("perona_malik: K must be positive");
    if (!(dt > 0.0)) throw DomainError("perona_malik: dt must be positive");
    if (dt > 0.25) throw StabilityError("perona_malik: dt > 0.25 violates the explicit-scheme stability bound");
    if (iterations < 1) throw DomainError("perona_malik: iterations must be >= 1");

    const int h = img.height();
    const int w = img.width();
    const int ch = img.channels();
    const double inv_k2 = 1.0 / (conduction * conduction);
    Image u = img;
    // flux_e(y, x): flow from (y, x+1) into (y, x); flux_s likewise from below.
    std::vector<double> flux_e(static_cast<std::size_t>(h) * w * ch, 0.0);
    std::vector<double> flux_s(static_cast<std::size_t>(h) * w * ch, 0.0);
    auto idx = [&](int y, int x, int c) { return (static_cast<std::size_t>(y) * w + x) * ch + c; };
    for (int it = 0; it < iterations; ++it) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < ch; ++c) {
                    const double v = u.at(y, x, c);
                    if (x + 1 < w) {
                        const double d = u.at(y, x + 1, c) - v;
                        flux_e[idx(y, x, c)] = std::exp(-d * d * inv_k2) * d;
                    }
                    if (y + 1 < h) {
                        const double d = u.at(y + 1, x, c) - v;
                        flux_s[idx(y, x, c)] = std::exp(-d * d * inv_k2) * d;
                    }
                }
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < ch; ++c) {
                    double div = 0.0;
                    if (x + 1 < w) div += flux_e[idx(y, x, c)];
                    if (x > 0) div -= flux_e[idx(y, x - 1, c)];
                    if (y + 1 < h) div += flux_s[idx(y, x, c)];
                    if (y > 0) div -= flux_s[idx(y - 1, x, c)];
                    u.at(y, x, c) += dt * div;
                }
            }
        }
    }
    return u;
}

Image pm_edge_map(const Image& img, double k_small, double k_large, double dt, int iterations) {
    if (!(k_small < k_large)) throw DomainError("pm_edge_map: K_small must be < K_large");
    const Image fine = perona_malik(img, k_small, dt, iterations);
    const Image coarse = perona_malik(img, k_large, dt, iterations);
    const int ch = img.channels();
    Image out(img.height(), img.width(), 1);
    double peak = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (int c = 0; c < ch; ++c) acc += std::abs(coarse.data()[i * ch + c] - fine.data()[i * ch + c]);
        out.data()[i] = acc / ch;
        peak = std::max(peak, out.data()[i]);
    }
    if (peak > 0.0) {
        for (double& v : out.data()) v /= peak;
    }
    return out;
}

}  // namespace restorekit
