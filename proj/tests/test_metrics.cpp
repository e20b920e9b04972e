#include <doctest.h>

#include <cmath>

#include "restorekit/degrade.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/metrics.hpp"
#include "support.hpp"

using namespace restorekit;
using testsupport::random_image;

namespace {

Image checkerboard(int n, double lo, double hi) {
    Image img(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) img.at(y, x) = (x + y) % 2 ? hi : lo;
    return img;
}

}  // namespace

TEST_CASE("psnr closed forms") {
    for (int side : {8, 16, 64}) {
        CHECK(psnr(Image(side, side, 3, 0.5), Image(side, side, 3, 0.6)) == 20.0);
        CHECK(psnr(Image(side, side, 1, 0.0), Image(side, side, 1, 0.1)) == 20.0);
        CHECK(psnr(Image(side, side, 3, 0.2), Image(side, side, 3, 0.7)) == doctest::Approx(6.0206).epsilon(1e-5));
    }
    CHECK(psnr(Image(4, 4, 3, 0.2), Image(4, 4, 3, 0.7)) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-14));
    const Image x = random_image(1, 16, 16, 3);
    CHECK(psnr(x, x) == kPsnrCap);
    CHECK(mse(x, x) == 0.0);
    CHECK(psnr(Image(4, 4, 1, 0.0), Image(4, 4, 1, 2.0), 2.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK_THROWS_AS(psnr(x, Image(16, 16, 1)), DomainError);
    CHECK_THROWS_AS(psnr(x, Image(15, 16, 3)), DomainError);
}

TEST_CASE("psnr is symmetric and agrees with mse") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image a = random_image(seed, 12, 9, 3), b = random_image(seed + 100, 12, 9, 3);
        CHECK(psnr(a, b) == psnr(b, a));
        CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / mse(a, b))).epsilon(1e-14));
    }
}

TEST_CASE("ssim closed forms") {
    const Image x = random_image(2, 32, 32, 3);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(ssim(x, x) - 1.0) <= 1e-9);

    // Constant images: only the luminance term survives.
    const double c1 = 1e-4;
    const double expect = (2 * 0.3 * 0.7 + c1) / (0.09 + 0.49 + c1);
    CHECK(ssim(Image(16, 16, 1, 0.3), Image(16, 16, 1, 0.7)) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(expect - 0.724185) < 1e-6);

    const Image board = checkerboard(16, 0.25, 0.75);
    Image inverted = board;
    for (double& v : inverted.data()) v = 1.0 - v;
    CHECK(ssim(board, inverted) < 0.0);

    CHECK_THROWS_AS(ssim(Image(8, 8, 1), Image(8, 8, 1)), DomainError);  // window 11 > 8
    SsimParams small;
    small.window = 7;
    CHECK_NOTHROW(ssim(Image(8, 8, 1), Image(8, 8, 1), small));
    CHECK_THROWS_AS(ssim(x, Image(32, 32, 1)), DomainError);
}

TEST_CASE("ssim is symmetric and bounded") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Image a = random_image(seed, 20, 24, seed % 2 ? 3 : 1);
        const Image b = random_image(seed + 50, 20, 24, seed % 2 ? 3 : 1);
        const double s = ssim(a, b);
        CHECK(std::abs(s - ssim(b, a)) <= 1e-9);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("ssim on 3 channels equals ssim on Rec. 601 luma") {
    const Image a = random_image(7, 24, 24, 3), b = random_image(8, 24, 24, 3);
    CHECK(ssim(a, b) == ssim(to_gray(a), to_gray(b)));
}

TEST_CASE("psnr and ssim fall as noise grows") {
    const Image clean = testsupport::smooth_scene(3, 64, 64);
    double last_psnr = kPsnrCap + 1, last_ssim = 2.0;
    for (double sigma : {0.01, 0.05, 0.1, 0.2}) {
        const Image noisy = apply_noise(clean, sigma, false, 99);
        const double p = psnr(noisy, clean), s = ssim(noisy, clean);
        CHECK(p < last_psnr);
        CHECK(s < last_ssim);
        last_psnr = p;
        last_ssim = s;
    }
}

TEST_CASE("quality records and reports") {
    const Image ref = Image(16, 16, 3, 0.5);
    const QualityRecord same = evaluate_pair("same", ref, ref);
    CHECK(same.psnr == kPsnrCap);
    CHECK(same.mse == 0.0);
    const QualityRecord off = evaluate_pair("off", Image(16, 16, 3, 0.6), ref);
    CHECK(off.psnr == doctest::Approx(20.0).epsilon(1e-12));
    const QualityRecord tiny = evaluate_pair("tiny", Image(4, 5, 1, 0.2), Image(4, 5, 1, 0.3));
    CHECK(tiny.psnr == doctest::Approx(20.0).epsilon(1e-12));

    const std::vector<QualityRecord> recs{same, off, tiny};
    const auto j = quality_to_json(recs);
    CHECK(j["records"].size() == 3);
    CHECK(j["records"][0]["psnr"] == kPsnrCap);
    CHECK(j["psnr_cap"] == kPsnrCap);
    CHECK(j["summary"]["count"] == 3);
    CHECK(j["summary"]["psnr"]["median"].get<double>() == doctest::Approx(20.0));
    CHECK(j["summary"]["psnr"]["mean"].get<double>() == doctest::Approx((99.0 + 40.0) / 3.0));

    const std::string csv = quality_to_csv(recs);
    CHECK(csv.rfind("image_id,psnr,ssim,mse\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("same,99,") != std::string::npos);
}
