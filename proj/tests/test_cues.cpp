#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "restorekit/cues.hpp"
#include "restorekit/degrade.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"
#include "restorekit/metrics.hpp"
#include "support.hpp"

using namespace restorekit;
using testsupport::random_image;

namespace {

std::vector<double> values(const Image& img) { return {img.data().begin(), img.data().end()}; }

double max_abs_diff(const Image& a, const Image& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

double mean_abs_diff(const Image& a, const Image& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
    return s / static_cast<double>(a.size());
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

double stddev(const Image& img) {
    const double m = img.mean();
    double s = 0;
    for (double v : img.data()) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(img.size()));
}

/// Blurred 1-D step replicated over `rows` rows.
Image blurred_step(int rows, int cols, double sigma) {
    Image img(rows, cols, 1);
    for (int x = 0; x < cols; ++x) {
        const double v = 0.5 * (1.0 + std::erf((x - cols / 2 + 0.5) / (sigma * std::sqrt(2.0))));
        for (int y = 0; y < rows; ++y) img.at(y, x) = 0.2 + 0.6 * v;
    }
    return img;
}

}  // namespace

TEST_CASE("task names") {
    CHECK(parse_task("Haze") == TaskKind::Haze);
    CHECK(parse_task("noise") == TaskKind::Noise);
    CHECK_THROWS_AS(parse_task("rain"), ConfigError);
    CHECK(parse_task_list("all").size() == 4);
    CHECK(parse_task_list("dark,blur,dark") == std::vector<TaskKind>{TaskKind::Dark, TaskKind::Blur});
}

// ---------------------------------------------------------------------------
// dark channel / airlight / transmission

TEST_CASE("dark_channel basics") {
    const Image flat(6, 6, 3, 0.42);
    for (double v : values(dark_channel(flat, 3))) CHECK(v == 0.42);

    const Image px(1, 1, 3, std::vector<double>{0.2, 0.7, 0.9});
    CHECK(dark_channel(px, 0).at(0, 0) == 0.2);
    CHECK_THROWS_AS(dark_channel(Image(4, 4, 1), 1), DomainError);
}

TEST_CASE("dark_channel matches the brute-force min filter") {
    const Image img = random_image(31, 5, 5, 3);
    CHECK(dark_channel(img, 1) == oracle::dark_channel(img, 1));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image r = random_image(seed, 3 + seed % 17, 4 + seed % 13, 3);
        CHECK(dark_channel(r, static_cast<int>(seed % 5)) == oracle::dark_channel(r, static_cast<int>(seed % 5)));
    }
}

TEST_CASE("dark_channel is monotone") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image a = random_image(seed, 16, 16, 3, 0.0, 0.5);
        Image b = a;
        const Image bump = random_image(seed + 100, 16, 16, 3, 0.0, 0.5);
        for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] += bump.data()[i];
        const Image da = dark_channel(a, 2), db = dark_channel(b, 2);
        for (std::size_t i = 0; i < da.size(); ++i) CHECK(da.data()[i] <= db.data()[i]);
    }
}

TEST_CASE("estimate_atmospheric_light") {
    const Image flat(10, 10, 3, 0.6);
    auto a = estimate_atmospheric_light(flat, dark_channel(flat, 2), 0.001);
    for (double v : a) CHECK(v == doctest::Approx(0.6));

    Image dots(20, 20, 3, 0.0);
    for (int c = 0; c < 3; ++c) dots.at(7, 11, c) = 1.0;
    a = estimate_atmospheric_light(dots, dark_channel(dots, 0), 0.001);
    for (double v : a) CHECK(v == 1.0);
    // Radius 7 wipes the lone pixel from the dark channel; the empty-selection
    // fallback still finds it.
    a = estimate_atmospheric_light(dots, dark_channel(dots, 7), 0.001);
    for (double v : a) CHECK(v == 1.0);

    CHECK_THROWS_AS(estimate_atmospheric_light(flat, Image(3, 3, 1), 0.1), DomainError);
    CHECK_THROWS_AS(estimate_atmospheric_light(flat, dark_channel(flat, 1), 0.0), DomainError);
}

TEST_CASE("estimate_atmospheric_light recovers A = 0.9 from a synthetic hazy scene") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image clean = testsupport::dark_channel_sparse_scene(seed, 96, 96);
        // Distant band at the top with thick haze, nearer scene below.
        Image t(96, 96, 1, 0.6);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 96; ++x) t.at(y, x) = 0.02;
        const Image hazy = apply_haze(clean, {0.9, 0.9, 0.9}, t);
        const auto a = estimate_atmospheric_light(hazy, dark_channel(hazy, 7), 0.001);
        for (double v : a) CHECK(std::abs(v - 0.9) <= 0.05);
    }
}

TEST_CASE("transmission_map") {
    const std::array<double, 3> a{0.8, 0.7, 0.9};
    Image img(8, 8, 3);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = a[c];
    for (double v : values(transmission_map(img, a, 0.95, 2, 0.0).values)) CHECK(v == doctest::Approx(0.05));
    for (double v : values(transmission_map(img, a, 0.95, 2, 0.1).values)) CHECK(v == doctest::Approx(0.1));
    for (double v : values(transmission_map(Image(8, 8, 3, 0.0), a, 0.95, 2).values)) CHECK(v == 1.0);
    CHECK_THROWS_AS(transmission_map(img, {0.0, 0.5, 0.5}, 0.95, 2), DomainError);
}

TEST_CASE("transmission_map round-trip through apply_haze (t = 0.6, A = 0.9)") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image clean = testsupport::dark_channel_sparse_scene(seed, 64, 64);
        const Image hazy = apply_haze(clean, {0.9, 0.9, 0.9}, 0.6);
        const auto t = transmission_map(hazy, {0.9, 0.9, 0.9}, 0.95, 7);
        const std::vector<double> vals(t.values.data().begin(), t.values.data().end());
        const double m = median(vals);
        CHECK(m >= 0.5);
        CHECK(m <= 0.7);
        for (double v : vals) {
            CHECK(v >= 0.1);
            CHECK(v <= 1.0);
        }
    }
}

// ---------------------------------------------------------------------------
// guided filter

TEST_CASE("guided_filter: self-guided with tiny eps reproduces the source") {
    const Image g = random_image(3, 20, 20, 1);
    CHECK(max_abs_diff(guided_filter(g, g, 2, 1e-9), g) < 1e-4);
}

TEST_CASE("guided_filter: constant source passes through") {
    const Image g = random_image(4, 17, 13, 1);
    const Image src(17, 13, 3, 0.37);
    for (double v : values(guided_filter(g, src, 3, 1e-3))) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("guided_filter matches the per-window regression oracle") {
    const Image g = random_image(5, 16, 16, 1);
    const Image p = random_image(6, 16, 16, 1);
    CHECK(max_abs_diff(guided_filter(g, p, 2, 1e-3), oracle::guided_filter(g, p, 2, 1e-3)) < 1e-5);

    // Randomized property: up to 32x32, 100 seeds.
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const int h = 2 + static_cast<int>(rng() % 31);
        const int w = 2 + static_cast<int>(rng() % 31);
        const int r = 1 + static_cast<int>(rng() % 5);
        const double eps = std::pow(10.0, -1.0 - static_cast<double>(rng() % 5));
        const Image gi = random_image(seed * 2, h, w, 1);
        const Image pi = random_image(seed * 2 + 1, h, w, 1);
        CHECK(max_abs_diff(guided_filter(gi, pi, r, eps), oracle::guided_filter(gi, pi, r, eps)) < 1e-5);
    }
}

TEST_CASE("guided_filter pairs channels and rejects bad inputs") {
    const Image g = random_image(7, 12, 12, 3);
    const Image p = random_image(8, 12, 12, 3);
    const Image out = guided_filter(g, p, 2, 1e-2);
    for (int c = 0; c < 3; ++c) {
        CHECK(max_abs_diff(out.channel(c), oracle::guided_filter(g.channel(c), p.channel(c), 2, 1e-2)) < 1e-9);
    }
    CHECK_THROWS_AS(guided_filter(g, Image(11, 12, 3), 2, 1e-3), DomainError);
    CHECK_THROWS_AS(guided_filter(g, p, 0, 1e-3), DomainError);
    CHECK_THROWS_AS(guided_filter(g, p, 2, 0.0), DomainError);
}

// ---------------------------------------------------------------------------
// dehaze

TEST_CASE("dehaze_estimate") {
    const Image img = random_image(9, 10, 10, 3);
    const std::array<double, 3> a{0.9, 0.85, 0.8};
    CHECK(max_abs_diff(dehaze_estimate(img, Image(10, 10, 1, 1.0), a), img) < 1e-15);

    // Transmission below the floor: denominator clamps, output stays in [0, 1].
    const Image out = dehaze_estimate(img, Image(10, 10, 1, 0.01), a, 0.05);
    CHECK(out.min_value() >= 0.0);
    CHECK(out.max_value() <= 1.0);
}

TEST_CASE("dehaze_estimate inverts apply_haze with the true t and A") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image clean = testsupport::smooth_scene(seed, 48, 48);
        const std::array<double, 3> a{0.9, 0.85, 0.95};
        Image t(48, 48, 1);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 48; ++x) t.at(y, x) = 0.3 + 0.6 * x / 47.0;
        const Image out = dehaze_estimate(apply_haze(clean, a, t), t, a);
        CHECK(testsupport::interior_psnr(out, clean) >= 40.0);
    }
}

TEST_CASE("haze extraction is least aggressive on clean input") {
    CueParams p;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image clean = testsupport::dark_channel_sparse_scene(seed, 64, 64);
        const Image hazy = apply_haze(clean, {0.9, 0.9, 0.9}, 0.6);
        const double d_clean = mean_abs_diff(extract_cues(clean, {TaskKind::Haze}, p).at(TaskKind::Haze).primary, clean);
        const double d_hazy = mean_abs_diff(extract_cues(hazy, {TaskKind::Haze}, p).at(TaskKind::Haze).primary, hazy);
        CHECK(d_clean < d_hazy);
    }
}

// ---------------------------------------------------------------------------
// Wiener

TEST_CASE("wiener_deconvolve: identity PSF with k = 0 is the identity") {
    const Image img = random_image(10, 21, 18, 3);
    CHECK(max_abs_diff(wiener_deconvolve(img, Kernel2D::identity(), 0.0), img) < 1e-5);
}

TEST_CASE("wiener_deconvolve: huge k drives the output to zero") {
    const Image img = random_image(11, 32, 32, 3);
    const Image out = wiener_deconvolve(img, Kernel2D::gaussian(1.0), 1e6);
    CHECK(std::max(std::abs(out.min_value()), std::abs(out.max_value())) <= 1e-3);
}

TEST_CASE("wiener_deconvolve undoes a matched Gaussian blur (sigma 2, k 1e-8)") {
    const auto psf = Kernel2D::gaussian(2.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image clean = testsupport::smooth_scene(seed, 64, 64);
        const Image out = wiener_deconvolve(convolve2d(clean, psf), psf, 1e-8);
        CHECK(testsupport::interior_psnr(out, clean) >= 40.0);
    }
}

TEST_CASE("wiener_deconvolve errors") {
    CHECK_THROWS_AS(wiener_deconvolve(Image(8, 8, 1), Kernel2D(3, 3, std::vector<double>(9, 0.0)), 1e-3), DomainError);
    CHECK_THROWS_AS(wiener_deconvolve(Image(8, 8, 1), Kernel2D::identity(), -1.0), DomainError);
    CHECK_THROWS_AS(wiener_deconvolve(Image(4, 4, 1), Kernel2D::box(5), 1e-3), SizeError);
}

// ---------------------------------------------------------------------------
// shock filter

TEST_CASE("shock_filter leaves constant and flat images unchanged") {
    const Image flat(12, 9, 1, 0.3);
    const auto r = shock_filter(flat, 0.25, 7);
    CHECK(r.shock_image == flat);
    for (double v : r.edge_map.data()) CHECK(v == 0.0);

    // Piecewise constant with a binary step: minmod gradients vanish on both sides.
    Image step(10, 10, 1, 0.0);
    for (int y = 0; y < 10; ++y)
        for (int x = 5; x < 10; ++x) step.at(y, x) = 1.0;
    CHECK(shock_step(step, 0.3) == step);
}

TEST_CASE("shock_filter steepens a blurred step like the 1-D reference") {
    const Image start = blurred_step(4, 64, 2.0);
    std::vector<double> ref(64);
    for (int x = 0; x < 64; ++x) ref[x] = start.at(0, x);
    Image e = start;
    double prev = e.at(0, 32) - e.at(0, 31);
    for (int it = 0; it < 10; ++it) {
        e = shock_step(e, 0.1);
        ref = oracle::shock_step_1d(ref, 0.1);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 64; ++x) CHECK(e.at(y, x) == doctest::Approx(ref[x]).epsilon(1e-12));
        const double grad = e.at(0, 32) - e.at(0, 31);
        CHECK(grad > prev);
        prev = grad;
    }
    const auto r = shock_filter(start, 0.1, 10);
    CHECK(r.shock_image == e);
    CHECK(r.edge_map.at(0, 32) == 1.0);
    CHECK(r.edge_map.at(0, 5) == 0.0);
}

TEST_CASE("shock_step per-pixel change is bounded by dt * max |grad|") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image e = random_image(seed, 16, 16, 1);
        double gmax = 0;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const double gx = std::max(std::abs(e.at(y, std::min(x + 1, 15)) - e.at(y, x)),
                                           std::abs(e.at(y, x) - e.at(y, std::max(x - 1, 0))));
                const double gy = std::max(std::abs(e.at(std::min(y + 1, 15), x) - e.at(y, x)),
                                           std::abs(e.at(y, x) - e.at(std::max(y - 1, 0), x)));
                gmax = std::max(gmax, std::hypot(gx, gy));
            }
        const Image next = shock_step(e, 0.2);
        for (std::size_t i = 0; i < e.size(); ++i) CHECK(std::abs(next.data()[i] - e.data()[i]) <= 0.2 * gmax + 1e-15);
    }
}

TEST_CASE("shock_filter argument checks") {
    CHECK_THROWS_AS(shock_filter(Image(4, 4, 1), 0.0, 1), DomainError);
    CHECK_THROWS_AS(shock_filter(Image(4, 4, 1), 0.6, 1), DomainError);
    CHECK_THROWS_AS(shock_filter(Image(4, 4, 1), 0.1, 0), DomainError);
}

// ---------------------------------------------------------------------------
// Perona-Malik

TEST_CASE("perona_malik: constant image is a fixed point") {
    const Image flat(9, 9, 3, 0.61);
    CHECK(perona_malik(flat, 0.1, 0.25, 20) == flat);
}

TEST_CASE("perona_malik: 3x3 single step matches the scalar stencil") {
    const Image img(3, 3, 1, std::vector<double>{0.1, 0.5, 0.2, 0.9, 0.4, 0.3, 0.0, 0.8, 0.6});
    const Image out = perona_malik(img, 0.1, 0.2, 1);
    const Image ref = oracle::perona_malik_step(img, 0.1, 0.2);
    CHECK(max_abs_diff(out, ref) < 1e-7);
    // Centre pixel by hand: neighbours 0.5, 0.8, 0.9, 0.3 around 0.4.
    double sum = 0;
    for (double nb : {0.5, 0.8, 0.9, 0.3}) {
        const double d = nb - 0.4;
        sum += std::exp(-(d / 0.1) * (d / 0.1)) * d;
    }
    CHECK(out.at(1, 1) == doctest::Approx(0.4 + 0.2 * sum).epsilon(1e-12));
}

TEST_CASE("perona_malik conserves the mean and obeys the maximum principle over 50 steps") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Image img = random_image(seed, 24, 20, seed % 2 ? 3 : 1);
        const Image out = perona_malik(img, 0.05 + 0.05 * seed, 0.25, 50);
        CHECK(std::abs(out.mean() - img.mean()) < 1e-5);
        CHECK(out.max_value() <= img.max_value() + 1e-7);
        CHECK(out.min_value() >= img.min_value() - 1e-7);
    }
}

TEST_CASE("perona_malik rejects unstable steps") {
    CHECK_THROWS_AS(perona_malik(Image(4, 4, 1), 0.1, 0.26, 1), StabilityError);
    CHECK_THROWS_AS(perona_malik(Image(4, 4, 1), 0.0, 0.2, 1), DomainError);
}

TEST_CASE("pm_edge_map") {
    for (double v : values(pm_edge_map(Image(8, 8, 3, 0.4), 0.05, 0.2, 0.2, 10))) CHECK(v == 0.0);
    CHECK_THROWS_AS(pm_edge_map(Image(8, 8, 1), 0.2, 0.2, 0.2, 5), DomainError);

    // Step at column 20 | 21.
    Image step(8, 40, 1, 0.2);
    for (int y = 0; y < 8; ++y)
        for (int x = 21; x < 40; ++x) step.at(y, x) = 0.7;
    const Image m = pm_edge_map(step, 0.1, 1.0, 0.2, 15);
    int arg = 0;
    for (int x = 0; x < 40; ++x)
        if (m.at(4, x) > m.at(4, arg)) arg = x;
    CHECK(std::abs(arg - 20.5) <= 2.0);
    CHECK(m.max_value() == doctest::Approx(1.0));

    // Rescaling intensities and both conductions by a common factor leaves the map unchanged.
    for (double c : {0.5, 2.0}) {
        Image scaled = step;
        for (double& v : scaled.data()) v *= c;
        const Image ms = pm_edge_map(scaled, 0.1 * c, 1.0 * c, 0.2, 15);
        int arg_s = 0;
        for (int x = 0; x < 40; ++x)
            if (ms.at(4, x) > ms.at(4, arg_s)) arg_s = x;
        CHECK(arg_s == arg);
        CHECK(max_abs_diff(ms, m) < 1e-9);
    }
}

// ---------------------------------------------------------------------------
// colour map and CLAHE

TEST_CASE("color_map") {
    const Image gray(1, 1, 3, std::vector<double>{0.4, 0.4, 0.4});
    for (double v : values(color_map_raw(gray))) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));
    const Image px(1, 1, 3, std::vector<double>{0.2, 0.3, 0.5});
    const Image raw = color_map_raw(px, 0.0);
    CHECK(raw.at(0, 0, 0) == doctest::Approx(0.6));
    CHECK(raw.at(0, 0, 1) == doctest::Approx(0.9));
    CHECK(raw.at(0, 0, 2) == doctest::Approx(1.5));
    CHECK(color_map(px, 0.0).at(0, 0, 2) == doctest::Approx(0.5));
    for (double v : values(color_map(Image(2, 2, 3, 0.0)))) CHECK(v == 0.0);
    CHECK_THROWS_AS(color_map(Image(2, 2, 1)), DomainError);
}

TEST_CASE("clahe: constant image maps to itself") {
    for (double v : {0.0, 0.13, 0.5, 1.0}) {
        for (const Image& img : {Image(64, 64, 3, v), Image(10, 10, 1, v)}) {
            for (double o : values(clahe(img, 16, 2.0))) CHECK(o == doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("clahe: two-level image keeps its ordering (global mode)") {
    Image img(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) img.at(y, x) = (x < 4) ? 0.2 : 0.8;
    const Image out = clahe(img, 32, 2.0);  // smaller than one tile
    CHECK(out.at(0, 0) < out.at(0, 7));
    for (int y = 0; y < 8; ++y) {
        CHECK(out.at(y, 0) == out.at(0, 0));
        CHECK(out.at(y, 7) == out.at(0, 7));
    }
}

TEST_CASE("clahe raises the contrast of a darkened scene") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image dark = apply_darken(testsupport::smooth_scene(seed, 96, 96), 0.3, 2.0);
        const Image out = clahe(dark, 32, 3.0);
        CHECK(stddev(out) > stddev(dark));
        CHECK(out.min_value() >= 0.0);
        CHECK(out.max_value() <= 1.0);
    }
}

TEST_CASE("clahe argument checks") {
    CHECK_THROWS_AS(clahe(Image(8, 8, 1), 1, 2.0), DomainError);
    CHECK_THROWS_AS(clahe(Image(8, 8, 1), 4, 0.5), DomainError);
}

// ---------------------------------------------------------------------------
// orchestration

TEST_CASE("extract_cues cardinality") {
    const Image img = testsupport::smooth_scene(1, 48, 48);
    CueParams p;
    const CueSet dark = extract_cues(img, {TaskKind::Dark}, p);
    CHECK(dark.primary_count() == 1);
    CHECK(dark.secondary_count() == 1);

    const CueSet all = extract_cues(img, {kAllTasks.begin(), kAllTasks.end()}, p, Kernel2D::gaussian(1.0));
    CHECK(all.primary_count() == 4);
    CHECK(all.secondary_count() == 5);
    CHECK(all.at(TaskKind::Blur).secondaries.size() == 2);
    for (const auto& [task, tc] : all.entries()) {
        CHECK(tc.primary.same_extent(img));
        CHECK(tc.primary.min_value() >= 0.0);
        CHECK(tc.primary.max_value() <= 1.0);
        for (const auto& s : tc.secondaries) {
            CHECK(s.same_extent(img));
            CHECK(s.min_value() >= 0.0);
            CHECK(s.max_value() <= 1.0);
        }
    }
}

TEST_CASE("extract_cues configuration errors") {
    const Image img = testsupport::smooth_scene(2, 32, 32);
    CHECK_THROWS_AS(extract_cues(img, {TaskKind::Blur}, CueParams{}), ConfigError);
    CHECK_THROWS_AS(extract_cues(img, {}, CueParams{}), ConfigError);
}

TEST_CASE("extract_cues: parallel evaluation gives identical results") {
    const Image img = testsupport::smooth_scene(3, 40, 40);
    CueParams seq, par;
    par.parallel = true;
    const std::vector<TaskKind> all(kAllTasks.begin(), kAllTasks.end());
    const CueSet a = extract_cues(img, all, seq, Kernel2D::gaussian(1.2));
    const CueSet b = extract_cues(img, all, par, Kernel2D::gaussian(1.2));
    for (TaskKind t : kAllTasks) {
        CHECK(a.at(t).primary == b.at(t).primary);
        CHECK(a.at(t).secondaries == b.at(t).secondaries);
    }
}

TEST_CASE("CueSet enforces secondary counts and shared extents") {
    CueSet set(4, 4);
    CHECK_THROWS_AS(set.set(TaskKind::Dark, {Image(4, 4, 3), {Image(4, 4, 1), Image(4, 4, 1)}}), DomainError);
    CHECK_NOTHROW(set.set(TaskKind::Blur, {Image(4, 4, 3), {Image(4, 4, 1), Image(4, 4, 1)}}));
    CHECK_THROWS_AS(set.set(TaskKind::Blur, {Image(4, 4, 3), {Image(4, 4, 1), Image(4, 4, 1), Image(4, 4, 1)}}),
                    DomainError);
    CHECK_THROWS_AS(set.set(TaskKind::Haze, {Image(4, 5, 3), {}}), DomainError);
}

TEST_CASE("cue sets persist as PNG directory + manifest") {
    testsupport::ScratchDir dir("cues");
    const Image img = testsupport::smooth_scene(4, 32, 32);
    CueParams p;
    const CueSet set = extract_cues(img, {TaskKind::Dark, TaskKind::Blur}, p, Kernel2D::gaussian(1.0));
    save_cue_set(set, dir.path(), p, {{"source", "scene.png"}});
    const CueSet back = load_cue_set(dir.path());
    CHECK(back.primary_count() == 2);
    CHECK(back.secondary_count() == 3);
    for (TaskKind t : {TaskKind::Dark, TaskKind::Blur}) {
        CHECK(max_abs_diff(back.at(t).primary, set.at(t).primary) <= 0.5 / 65535.0 + 1e-12);
        for (std::size_t i = 0; i < set.at(t).secondaries.size(); ++i) {
            CHECK(max_abs_diff(back.at(t).secondaries[i], set.at(t).secondaries[i]) <= 0.5 / 65535.0 + 1e-12);
        }
    }
    CHECK(cue_params_to_json(cue_params_from_json(cue_params_to_json(p))) == cue_params_to_json(p));
}
