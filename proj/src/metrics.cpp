#include "restorekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw DomainError(std::string(what) + ": image shapes differ");
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    auto da = a.data();
    auto db = b.data();
    // Neumaier summation.
    double acc = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        const double term = d * d;
        const double t = acc + term;
        comp += std::abs(acc) >= term ? (acc - t) + term : (term - t) + acc;
        acc = t;
    }
    return (acc + comp) / static_cast<double>(da.size());
}

double psnr(const Image& a, const Image& b, double peak) {
    require_same_shape(a, b, "psnr");
    const double e = mse(a, b);
    if (e == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / e));
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
    require_same_shape(a, b, "ssim");
    const Image ga = to_gray(a);
    const Image gb = to_gray(b);
    const int h = ga.height();
    const int w = ga.width();
    if (p.window < 1 || p.window > std::min(h, w)) throw DomainError("ssim: window larger than image");

    std::vector<double> win(static_cast<std::size_t>(p.window) * p.window);
    const int r = p.window / 2;
    double wsum = 0.0;
    for (int i = 0; i < p.window; ++i) {
        for (int j = 0; j < p.window; ++j) {
            const double dy = i - r, dx = j - r;
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * p.sigma * p.sigma));
            win[static_cast<std::size_t>(i) * p.window + j] = v;
            wsum += v;
        }
    }
    for (double& v : win) v /= wsum;

    const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
    const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
    double total = 0.0;
    long count = 0;
    for (int y = 0; y + p.window <= h; ++y) {
        for (int x = 0; x + p.window <= w; ++x) {
            double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < p.window; ++i) {
                for (int j = 0; j < p.window; ++j) {
                    const double wt = win[static_cast<std::size_t>(i) * p.window + j];
                    const double va = ga.at(y + i, x + j);
                    const double vb = gb.at(y + i, x + j);
                    mu_a += wt * va;
                    mu_b += wt * vb;
                    aa += wt * va * va;
                    bb += wt * vb * vb;
                    ab += wt * va * vb;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

QualityRecord evaluate_pair(const std::string& id, const Image& restored, const Image& reference) {
    QualityRecord rec;
    rec.image_id = id;
    rec.mse = mse(restored, reference);
    rec.psnr = psnr(restored, reference);
    const int window = std::min({11, restored.height(), restored.width()});
    SsimParams sp;
    sp.window = window;
    rec.ssim = ssim(restored, reference, sp);
    return rec;
}

nlohmann::json quality_summary(const std::vector<QualityRecord>& records) {
    std::vector<double> p, s, m;
    for (const auto& r : records) {
        p.push_back(std::min(r.psnr, kPsnrCap));
        s.push_back(r.ssim);
        m.push_back(r.mse);
    }
    return {
        {"count", records.size()},
        {"psnr", {{"mean", mean(p)}, {"median", median(p)}}},
        {"ssim", {{"mean", mean(s)}, {"median", median(s)}}},
        {"mse", {{"mean", mean(m)}, {"median", median(m)}}},
    };
}

nlohmann::json quality_to_json(const std::vector<QualityRecord>& records) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : records) {
        rows.push_back({{"image_id", r.image_id},
                        {"psnr", std::min(r.psnr, kPsnrCap)},
                        {"ssim", r.ssim},
                        {"mse", r.mse}});
    }
    return {{"records", rows}, {"summary", quality_summary(records)}, {"psnr_cap", kPsnrCap}};
}

std::string quality_to_csv(const std::vector<QualityRecord>& records) {
    std::ostringstream out;
    out << "image_id,psnr,ssim,mse\n" << std::setprecision(10);
    for (const auto& r : records) {
        out << r.image_id << ',' << std::min(r.psnr, kPsnrCap) << ',' << r.ssim << ',' << r.mse << '\n';
    }
    return out.str();
}

}  // namespace restorekit
