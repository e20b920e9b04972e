#include <algorithm>
#include <cmath>
#include <limits>

#include "restorekit/control.hpp"
#include "restorekit/errors.hpp"

namespace restorekit {

FeatureMap::FeatureMap(int level_, int channels_, int height_, int width_, double fill)
    : level(level_), channels(channels_), height(height_), width(width_) {
    if (channels <= 0 || height <= 0 || width <= 0) throw DomainError("feature map dimensions must be positive");
    data.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

FeatureMap to_feature_map(const Image& img, int channels) {
    if (img.channels() != 1 && img.channels() != channels) {
        throw DomainError("to_feature_map: cannot map " + std::to_string(img.channels()) + " channels to " +
                          std::to_string(channels));
    }
    FeatureMap f(0, channels, img.height(), img.width());
    for (int c = 0; c < channels; ++c) {
        const int src = img.channels() == 1 ? 0 : c;
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) f.at(c, y, x) = img.at(y, x, src);
        }
    }
    return f;
}

nlohmann::json feature_stats(const FeatureMap& f) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : f.data) {
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double n = static_cast<double>(f.data.size());
    const double mean = sum / n;
    double var = 0.0;
    for (double v : f.data) var += (v - mean) * (v - mean);
    return {{"shape", {f.channels, f.height, f.width}},
            {"mean", mean},
            {"std", std::sqrt(var / n)},
            {"min", lo},
            {"max", hi}};
}

std::size_t Tensor::count() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

namespace {

void expect_shape(const Tensor& t, std::vector<int> shape, const char* what) {
    if (t.shape != shape) throw DomainError(std::string(what) + ": weight shape mismatch");
}

FeatureMap conv_impl(const FeatureMap& x, const Tensor& weight, const Tensor* bias, bool depthwise) {
    if (weight.shape.size() != 4 || weight.shape[2] != weight.shape[3] || weight.shape[2] % 2 == 0) {
        throw DomainError("conv2d: weight must be (Cout, Cin, k, k) with odd k");
    }
    const int cout = weight.shape[0];
    const int cin = weight.shape[1];
    const int k = weight.shape[2];
    const int r = k / 2;
    if (depthwise ? (cin != 1 || cout != x.channels) : cin != x.channels) {
        throw DomainError("conv2d: input has " + std::to_string(x.channels) + " channels");
    }
    if (bias) expect_shape(*bias, {cout}, "conv2d bias");
    FeatureMap out(x.level, cout, x.height, x.width);
    const int h = x.height;
    const int w = x.width;
    for (int co = 0; co < cout; ++co) {
        double* dst = &out.data[co * out.plane()];
        if (bias) std::fill(dst, dst + out.plane(), bias->values[co]);
        for (int ci = 0; ci < cin; ++ci) {
            const int src_c = depthwise ? co : ci;
            const double* src = &x.data[src_c * x.plane()];
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    const double wt = weight.values[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx];
                    if (wt == 0.0) continue;
                    const int dy = ky - r;
                    const int dx = kx - r;
                    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    for (int y = y0; y < y1; ++y) {
                        double* drow = dst + static_cast<std::size_t>(y) * w;
                        const double* srow = src + static_cast<std::size_t>(y + dy) * w + dx;
                        for (int xx = x0; xx < x1; ++xx) drow[xx] += wt * srow[xx];
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace

FeatureMap conv2d(const FeatureMap& x, const Tensor& weight, const Tensor* bias) {
    return conv_impl(x, weight, bias, false);
}

FeatureMap depthwise_conv2d(const FeatureMap& x, const Tensor& weight, const Tensor* bias) {
    return conv_impl(x, weight, bias, true);
}

FeatureMap group_norm(const FeatureMap& x, int groups, const Tensor& gamma, const Tensor& beta, double eps) {
    if (groups <= 0 || x.channels % groups != 0) throw DomainError("group_norm: groups must divide channels");
    expect_shape(gamma, {x.channels}, "group_norm gamma");
    expect_shape(beta, {x.channels}, "group_norm beta");
    FeatureMap out = x;
    const int per = x.channels / groups;
    const std::size_t n = static_cast<std::size_t>(per) * x.plane();
    for (int g = 0; g < groups; ++g) {
        const double* src = &x.data[g * n];
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += src[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (src[i] - mean) * (src[i] - mean);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int c = g * per; c < (g + 1) * per; ++c) {
            double* dst = &out.data[c * x.plane()];
            for (std::size_t i = 0; i < x.plane(); ++i) {
                dst[i] = (dst[i] - mean) * inv * gamma.values[c] + beta.values[c];
            }
        }
    }
    return out;
}

FeatureMap silu(FeatureMap x) {
    for (double& v : x.data) v = v / (1.0 + std::exp(-v));
    return x;
}

FeatureMap simple_gate(const FeatureMap& x) {
    if (x.channels % 2 != 0) throw DomainError("simple_gate: channel count must be even");
    const int half = x.channels / 2;
    FeatureMap out(x.level, half, x.height, x.width);
    const std::size_t n = static_cast<std::size_t>(half) * x.plane();
    for (std::size_t i = 0; i < n; ++i) out.data[i] = x.data[i] * x.data[i + n];
    return out;
}

FeatureMap channel_attention(const FeatureMap& x, const Tensor& weight, const Tensor& bias) {
    expect_shape(weight, {x.channels, x.channels}, "channel_attention");
    expect_shape(bias, {x.channels}, "channel_attention bias");
    std::vector<double> avg(x.channels, 0.0);
    for (int c = 0; c < x.channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.plane(); ++i) s += x.data[c * x.plane() + i];
        avg[c] = s / static_cast<double>(x.plane());
    }
    FeatureMap out = x;
    for (int c = 0; c < x.channels; ++c) {
        double scale = bias.values[c];
        for (int d = 0; d < x.channels; ++d) scale += weight.values[static_cast<std::size_t>(c) * x.channels + d] * avg[d];
        for (std::size_t i = 0; i < x.plane(); ++i) out.data[c * x.plane() + i] *= scale;
    }
    return out;
}

FeatureMap downsample2(const FeatureMap& x) {
    const int oh = (x.height + 1) / 2;
    const int ow = (x.width + 1) / 2;
    FeatureMap out(x.level + 1, x.channels, oh, ow);
    for (int c = 0; c < x.channels; ++c) {
        for (int y = 0; y < oh; ++y) {
            const int ya = 2 * y, yb = std::min(2 * y + 1, x.height - 1);
            for (int xx = 0; xx < ow; ++xx) {
                const int xa = 2 * xx, xb = std::min(2 * xx + 1, x.width - 1);
                out.at(c, y, xx) = 0.25 * (x.at(c, ya, xa) + x.at(c, ya, xb) + x.at(c, yb, xa) + x.at(c, yb, xb));
            }
        }
    }
    return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
    if (!a.same_shape(b)) throw DomainError("feature maps differ in shape");
    FeatureMap out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

}  // namespace restorekit
