#include <doctest.h>

#include <cmath>

#include "restorekit/degrade.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"
#include "support.hpp"

using namespace restorekit;
using testsupport::random_image;

namespace {

constexpr std::array<double, 3> kWhite{1.0, 1.0, 1.0};

void check_all(const Image& img, double expected, double tol = 1e-12) {
    for (double v : img.data()) CHECK(v == doctest::Approx(expected).epsilon(tol));
}

}  // namespace

TEST_CASE("apply_darken") {
    const Image img = random_image(1, 8, 8, 3);
    CHECK(apply_darken(img, 1.0, 1.0) == img);
    check_all(apply_darken(Image(4, 4, 3, 1.0), 0.5, 2.0), 0.5);
    check_all(apply_darken(Image(4, 4, 3, 0.5), 0.8, 2.0), 0.2);
    CHECK_THROWS_AS(apply_darken(img, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(apply_darken(img, 1.2, 1.0), DomainError);
    CHECK_THROWS_AS(apply_darken(img, 0.5, 0.9), DomainError);
}

TEST_CASE("apply_haze") {
    const Image img = random_image(2, 8, 8, 3);
    CHECK(apply_haze(img, {0.9, 0.8, 0.7}, 1.0) == img);

    const std::array<double, 3> a{0.9, 0.8, 0.7};
    const Image thick = apply_haze(img, a, 1e-3);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) CHECK(std::abs(thick.at(y, x, c) - a[c]) <= 1e-3);

    check_all(apply_haze(Image(3, 3, 3, 0.5), kWhite, 0.5), 0.75);

    CHECK_THROWS_AS(apply_haze(img, kWhite, 0.0), DomainError);
    CHECK_THROWS_AS(apply_haze(img, kWhite, 1.01), DomainError);
    Image tmap(8, 8, 1, 0.5);
    tmap.at(3, 3) = 0.0;
    CHECK_THROWS_AS(apply_haze(img, kWhite, tmap), DomainError);
    CHECK_THROWS_AS(apply_haze(img, kWhite, Image(4, 4, 1, 0.5)), DomainError);
}

TEST_CASE("apply_haze per-pixel map equals constant map path") {
    const Image img = random_image(3, 6, 5, 3);
    CHECK(apply_haze(img, {0.9, 0.9, 0.9}, Image(6, 5, 1, 0.6)) == apply_haze(img, {0.9, 0.9, 0.9}, 0.6));
}

TEST_CASE("apply_noise") {
    const Image img = random_image(4, 16, 16, 3);
    CHECK(apply_noise(img, 0.0, false, 1) == img);
    CHECK(apply_noise(img, 0.2, true, 42) == apply_noise(img, 0.2, true, 42));
    CHECK(apply_noise(img, 0.2, false, 42) != apply_noise(img, 0.2, false, 43));
    CHECK_THROWS_AS(apply_noise(img, 0.31, false, 1), DomainError);
    CHECK_THROWS_AS(apply_noise(img, -0.01, false, 1), DomainError);
}

TEST_CASE("apply_noise: sigma 0.1 on constant 0.5 has sample std in [0.097, 0.103]") {
    // 65536 samples: the std of the sample std is ~0.1/sqrt(2n) = 2.8e-4, so
    // the +-0.003 band is more than 10 standard errors wide.
    const Image in(256, 256, 1, 0.5);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Image out = apply_noise(in, 0.1, false, seed);
        double s = 0, s2 = 0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out.data()[i] - in.data()[i];
            s += d;
            s2 += d * d;
        }
        const double n = static_cast<double>(out.size());
        const double sd = std::sqrt((s2 - s * s / n) / (n - 1));
        CHECK(sd >= 0.097);
        CHECK(sd <= 0.103);
        CHECK(std::abs(s / n) < 0.002);
    }
}

TEST_CASE("apply_noise: Poisson shot noise has variance v / photons") {
    const Image in(128, 128, 1, 0.4);
    const Image out = apply_noise(in, 0.0, true, 7);
    double s = 0, s2 = 0;
    for (double v : out.data()) {
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(out.size());
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(s / n == doctest::Approx(0.4).epsilon(0.01));
    CHECK(var == doctest::Approx(0.4 / kPhotonsPerUnit).epsilon(0.05));
}

TEST_CASE("degrade composes stages in darken -> blur -> haze -> noise order") {
    const Image one(5, 5, 3, 1.0);

    DegradationRecipe identity;
    identity.darken = DarkenStage{1.0, 1.0};
    const Image img = random_image(5, 9, 9, 3);
    CHECK(degrade(img, identity) == img);

    DegradationRecipe dh;
    dh.darken = DarkenStage{0.5, 1.0};
    dh.haze = HazeStage{kWhite, 0.5, {}};
    check_all(degrade(one, dh), 0.75);

    // Reverse order by hand: haze first leaves 1.0 (A = 1), darken then gives 0.5.
    const Image reversed = apply_darken(apply_haze(one, kWhite, 0.5), 0.5, 1.0);
    check_all(reversed, 0.5);
    CHECK(degrade(one, dh) != reversed);
}

TEST_CASE("degrade: single-stage recipes equal the stage function") {
    const Image img = random_image(6, 20, 20, 3);
    {
        DegradationRecipe r;
        r.blur = BlurStage{BlurStage::Kind::Gaussian, 1.5, 9, 0.0, std::nullopt};
        CHECK(degrade(img, r) == convolve2d(img, Kernel2D::gaussian(1.5)));
    }
    {
        DegradationRecipe r;
        r.haze = HazeStage{{0.9, 0.85, 0.8}, 0.6, {}};
        CHECK(degrade(img, r) == apply_haze(img, {0.9, 0.85, 0.8}, 0.6));
    }
    {
        DegradationRecipe r;
        r.noise = NoiseStage{0.1, false, 99};
        CHECK(degrade(img, r) == apply_noise(img, 0.1, false, 99));
    }
    {
        DegradationRecipe r;
        r.darken = DarkenStage{0.3, 2.0};
        CHECK(degrade(img, r) == apply_darken(img, 0.3, 2.0));
    }
}

TEST_CASE("degrade without noise stays inside [min(A, min img), max(A, max img)]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.05, 1.0);
        const Image img = random_image(seed, 32, 32, 3);
        DegradationRecipe r;
        r.darken = DarkenStage{u(rng), 1.0 + 2.0 * u(rng)};
        r.blur = random_blur(rng);
        const double a = u(rng);
        r.haze = HazeStage{{a, a, a}, u(rng), {}};
        const Image out = degrade(img, r);
        const double lo = std::min(a, img.min_value());
        const double hi = std::max(a, img.max_value());
        CHECK(out.min_value() >= lo - 1e-12);
        CHECK(out.max_value() <= hi + 1e-12);
    }
}

TEST_CASE("degrade is deterministic under a fixed seed") {
    std::mt19937_64 rng(11);
    DegradationRecipe r;
    r.darken = DarkenStage{0.7, 1.5};
    r.blur = random_blur(rng);
    r.haze = HazeStage{{0.9, 0.9, 0.9}, 0.7, {}};
    r.noise = NoiseStage{random_noise_sigma(rng), true, 1234};
    const Image img = random_image(12, 32, 32, 3);
    CHECK(degrade(img, r) == degrade(img, r));
}

TEST_CASE("recipe validation") {
    DegradationRecipe empty;
    CHECK_THROWS_AS(empty.validate(), DomainError);
    DegradationRecipe r;
    r.noise = NoiseStage{0.5, false, 0};
    CHECK_THROWS_AS(degrade(Image(4, 4, 1), r), DomainError);
    r.noise->sigma = 0.3;
    CHECK_NOTHROW(r.validate());
}

TEST_CASE("random degradation draws stay in the synthesis ranges") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const double s = random_noise_sigma(rng);
        CHECK(s >= 0.02);
        CHECK(s <= 0.30);
        const BlurStage b = random_blur(rng);
        if (b.kind == BlurStage::Kind::Gaussian) {
            CHECK(b.sigma >= 1.0);
            CHECK(b.sigma <= 4.0);
        } else {
            CHECK(b.kind == BlurStage::Kind::Motion);
            CHECK(b.length >= 5);
            CHECK(b.length <= 21);
        }
        CHECK(b.kernel().is_normalized());
    }
}

TEST_CASE("recipe serialization: random recipes survive text and JSON round-trips") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < 50; ++i) {
        DegradationRecipe r;
        if (rng() % 2) r.darken = DarkenStage{u(rng), 1.0 + u(rng)};
        if (rng() % 2) r.blur = random_blur(rng);
        if (rng() % 4 == 0) r.blur = BlurStage::from_kernel(Kernel2D::gaussian(0.8 + u(rng)));
        if (rng() % 2) r.haze = HazeStage{{u(rng), u(rng), u(rng)}, u(rng), {}};
        if (rng() % 2 || r.empty()) r.noise = NoiseStage{0.3 * u(rng), rng() % 2 == 0, rng()};
        const Image img = random_image(i, 32, 32, 3);
        const Image expected = degrade(img, r);
        CHECK(degrade(img, recipe_from_text(recipe_to_text(r))) == expected);
        CHECK(degrade(img, recipe_from_json(nlohmann::json::parse(recipe_to_json(r).dump()))) == expected);
        CHECK(recipe_to_json(recipe_from_text(recipe_to_text(r))) == recipe_to_json(r));
    }
}

TEST_CASE("recipe text parsing errors") {
    CHECK_THROWS_AS(recipe_from_text("darken.gain=abc"), ConfigError);
    CHECK_THROWS_AS(recipe_from_text("nonsense"), ConfigError);
    CHECK_THROWS_AS(recipe_from_text("blur.kind=zigzag"), ConfigError);
    CHECK_THROWS_AS(recipe_from_text("foo.bar=1"), ConfigError);
    const auto r = recipe_from_text("# comment\nhaze.airlight=0.9\nhaze.t=0.6  # trailing\n");
    REQUIRE(r.haze);
    CHECK(r.haze->airlight[2] == 0.9);
    CHECK(std::get<double>(r.haze->transmission) == 0.6);
}
