#include <algorithm>
#include <cmath>
#include <numeric>

#include "restorekit/cues.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"

namespace restorekit {

Image dark_channel(const Image& img, int patch_radius) {
    if (img.channels() != 3) throw DomainError("dark_channel requires a 3-channel image");
    if (patch_radius < 0) throw DomainError("dark_channel patch radius must be >= 0");
    Image per_pixel(img.height(), img.width(), 1);
    auto src = img.data();
    auto dst = per_pixel.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = std::min({src[3 * i], src[3 * i + 1], src[3 * i + 2]});
    return min_filter(per_pixel, patch_radius);
}

std::array<double, 3> estimate_atmospheric_light(const Image& img, const Image& dark, double top_fraction) {
    if (img.channels() != 3) throw DomainError("atmospheric light estimation requires a 3-channel image");
    if (!dark.same_extent(img) || dark.channels() != 1) throw DomainError("dark channel extent mismatch");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0)) throw DomainError("top_fraction must lie in (0, 1]");

    const std::size_t n = img.pixel_count();
    const auto count = static_cast<std::size_t>(std::floor(top_fraction * static_cast<double>(n)));
    auto px = img.data();
    std::array<double, 3> a{};
    if (count == 0) {
        std::size_t best = 0;
        double best_sum = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = px[3 * i] + px[3 * i + 1] + px[3 * i + 2];
            if (s > best_sum) {
                best_sum = s;
                best = i;
            }
        }
        for (int c = 0; c < 3; ++c) a[c] = px[3 * best + c];
        return a;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto dv = dark.data();
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                      [&](std::size_t l, std::size_t r) { return dv[l] != dv[r] ? dv[l] > dv[r] : l < r; });
    for (std::size_t k = 0; k < count; ++k) {
        for (int c = 0; c < 3; ++c) a[c] += px[3 * order[k] + c];
    }
    for (double& v : a) v /= static_cast<double>(count);
    return a;
}

TransmissionMap transmission_map(const Image& img, const std::array<double, 3>& airlight, double omega,
                                 int patch_radius, double t_floor) {
    if (img.channels() != 3) throw DomainError("transmission_map requires a 3-channel image");
    for (double v : airlight) {
        if (!(v > 0.0)) throw DomainError("atmospheric light channels must be positive");
    }
    if (!(omega > 0.0 && omega <= 1.0)) throw DomainError("omega must lie in (0, 1]");
    if (!(t_floor >= 0.0 && t_floor <= 1.0)) throw DomainError("t_floor must lie in [0, 1]");
    Image normalized = img;
    auto d = normalized.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= airlight[i % 3];
    Image t = dark_channel(normalized, patch_radius);
    for (double& v : t.data()) v = std::clamp(1.0 - omega * v, t_floor, 1.0);
    return {std::move(t), t_floor};
}

Image guided_filter(const Image& guide, const Image& src, int radius, double eps) {
    if (!guide.same_extent(src)) throw DomainError("guided_filter: guide and source extents differ");
    if (guide.channels() != 1 && guide.channels() != src.channels()) {
        throw DomainError("guided_filter: guide must be 1-channel or match the source channels");
    }
    if (radius < 1) throw DomainError("guided_filter: radius must be >= 1");
    if (!(eps > 0.0)) throw DomainError("guided_filter: eps must be positive");

    Image out(src.height(), src.width(), src.channels());
    for (int c = 0; c < src.channels(); ++c) {
        const Image g = guide.channels() == 1 ? guide : guide.channel(c);
        const Image p = src.channels() == 1 ? src : src.channel(c);
        Image gp = g, gg = g;
        for (std::size_t i = 0; i < gp.size(); ++i) {
            gp.data()[i] = g.data()[i] * p.data()[i];
            gg.data()[i] = g.data()[i] * g.data()[i];
        }
        const Image mean_g = box_mean(g, radius);
        const Image mean_p = box_mean(p, radius);
        const Image mean_gp = box_mean(gp, radius);
        const Image mean_gg = box_mean(gg, radius);
        Image a(g.height(), g.width(), 1), b(g.height(), g.width(), 1);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double mg = mean_g.data()[i];
            const double mp = mean_p.data()[i];
            const double cov = mean_gp.data()[i] - mg * mp;
            const double var = mean_gg.data()[i] - mg * mg;
            a.data()[i] = cov / (var + eps);
            b.data()[i] = mp - a.data()[i] * mg;
        }
        const Image mean_a = box_mean(a, radius);
        const Image mean_b = box_mean(b, radius);
        Image q(g.height(), g.width(), 1);
        for (std::size_t i = 0; i < q.size(); ++i) {
            q.data()[i] = mean_a.data()[i] * g.data()[i] + mean_b.data()[i];
        }
        out.set_channel(c, q);
    }
    return out;
}

Image dehaze_estimate(const Image& img, const Image& transmission, const std::array<double, 3>& airlight,
                      double t_floor) {
    if (!transmission.same_extent(img) || transmission.channels() != 1) {
        throw DomainError("dehaze_estimate: transmission must be 1-channel with the image extent");
    }
    const int ch = img.channels();
    Image out(img.height(), img.width(), ch);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double t = std::max(transmission.at(y, x), t_floor);
            for (int c = 0; c < ch; ++c) {
                const double a = ch == 3 ? airlight[c] : (airlight[0] + airlight[1] + airlight[2]) / 3.0;
                out.at(y, x, c) = std::clamp((img.at(y, x, c) - a) / t + a, 0.0, 1.0);
            }
        }
    }
    return out;
}

HazeCues extract_haze(const Image& img, const CueParams& p) {
    HazeCues h;
    const Image dark = dark_channel(img, p.patch_radius);
    h.airlight = estimate_atmospheric_light(img, dark, p.top_fraction);
    for (double& v : h.airlight) v = std::max(v, 1e-3);  // an all-black scene still needs a divisor
    h.raw = transmission_map(img, h.airlight, p.omega, p.patch_radius, p.t_floor);
    h.refined = guided_filter(to_gray(img), h.raw.values, p.guide_radius, p.guide_eps).clamped(p.t_floor, 1.0);
    h.estimate = dehaze_estimate(img, h.refined, h.airlight, p.t_floor);
    return h;
}

}  // namespace restorekit
