#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "restorekit/image.hpp"

namespace restorekit {

/// PSNR reported for identical inputs, and the serialization cap for any
/// larger value.
inline constexpr double kPsnrCap = 99.0;

double mse(const Image& a, const Image& b);

/// 10 log10(peak^2 / MSE), capped at kPsnrCap. Throws DomainError on shape mismatch.
double psnr(const Image& a, const Image& b, double peak = 1.0);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;
};

/// Mean SSIM over all valid window positions (Gaussian-weighted window, no
/// padding). 3-channel inputs are compared on Rec. 601 luma.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

struct QualityRecord {
    std::string image_id;
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
};

QualityRecord evaluate_pair(const std::string& id, const Image& restored, const Image& reference);

/// Mean and median of each metric over `records`.
nlohmann::json quality_summary(const std::vector<QualityRecord>& records);

/// `{"records": [...], "summary": {...}}`; psnr values never exceed kPsnrCap.
nlohmann::json quality_to_json(const std::vector<QualityRecord>& records);
/// Header `image_id,psnr,ssim,mse` plus one row per record.
std::string quality_to_csv(const std::vector<QualityRecord>& records);

}  // namespace restorekit
