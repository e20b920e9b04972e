#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include <json.hpp>

#include "restorekit/image.hpp"

namespace restorekit {

/// Photon count per unit intensity used by the Poisson (shot noise) stage.
inline constexpr double kPhotonsPerUnit = 1000.0;
/// Upper end of the synthetic AWGN range (30%).
inline constexpr double kMaxNoiseSigma = 0.3;

struct DarkenStage {
    double gain = 1.0;   ///< alpha in (0, 1]
    double gamma = 1.0;  ///< >= 1
};

/// Describes a blur PSF so it can be serialized; `kernel()` materializes it.
struct BlurStage {
    enum class Kind { Gaussian, Motion, Box, Custom };
    Kind kind = Kind::Gaussian;
    double sigma = 1.0;      ///< Gaussian
    int length = 9;          ///< Motion line length / box size
    double angle_deg = 0.0;  ///< Motion
    std::optional<Kernel2D> custom;

    Kernel2D kernel() const;
    static BlurStage from_kernel(Kernel2D k);
};

struct HazeStage {
    std::array<double, 3> airlight{1.0, 1.0, 1.0};
    /// Constant transmission, or a 1-channel per-pixel map.
    std::variant<double, Image> transmission = 1.0;
    /// Source path of a per-pixel map, echoed on serialization.
    std::string transmission_path;
};

struct NoiseStage {
    double sigma = 0.0;
    bool poisson = false;
    std::uint64_t seed = 0;
};

/// Parameters of I = H(B(D(S))) + eta. Absent stages are skipped.
struct DegradationRecipe {
    std::optional<DarkenStage> darken;
    std::optional<BlurStage> blur;
    std::optional<HazeStage> haze;
    std::optional<NoiseStage> noise;

    bool empty() const { return !darken && !blur && !haze && !noise; }
    /// Throws DomainError on any out-of-range parameter or an empty recipe.
    void validate() const;
};

/// out = gain * img^gamma, clamped to [0, 1].
Image apply_darken(const Image& img, double gain, double gamma);

/// out = img * t + A * (1 - t). `t` is constant or a 1-channel map with
/// the image's extent; every value must lie in (0, 1].
Image apply_haze(const Image& img, const std::array<double, 3>& airlight, double t);
Image apply_haze(const Image& img, const std::array<double, 3>& airlight, const Image& t);

/// Optional Poisson shot noise (kPhotonsPerUnit scale) followed by i.i.d.
/// Gaussian noise of std `sigma`, then a final clamp to [0, 1]. Output is a
/// pure function of (img, sigma, poisson, seed).
Image apply_noise(const Image& img, double sigma, bool poisson, std::uint64_t seed);

/// Applies darken -> blur -> haze -> noise, skipping absent stages. Earlier
/// stages are clamped to [0, 1] before noise is added.
Image degrade(const Image& img, const DegradationRecipe& recipe);

// -- random recipes for the mixed-degradation synthesis --------------------

/// Gaussian (sigma in [1, 4]) or motion line (length 5..21, uniform angle),
/// each with probability 1/2.
BlurStage random_blur(std::mt19937_64& rng);
/// Uniform in [0.02, 0.30].
double random_noise_sigma(std::mt19937_64& rng);

// -- serialization ---------------------------------------------------------

nlohmann::json recipe_to_json(const DegradationRecipe& recipe);
DegradationRecipe recipe_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// `key=value` lines, e.g. `darken.gain=0.5`, `haze.airlight=0.9,0.9,0.9`,
/// `haze.t=0.6`, `blur.kind=gaussian`, `noise.sigma=0.1`. `#` starts a comment.
std::string recipe_to_text(const DegradationRecipe& recipe);
DegradationRecipe recipe_from_text(const std::string& text, const std::filesystem::path& base_dir = {});

/// Reads `.json` as JSON and anything else as key=value text. Per-pixel
/// transmission paths are resolved relative to the recipe file.
DegradationRecipe load_recipe(const std::string& path);

nlohmann::json kernel_to_json(const Kernel2D& k);
Kernel2D kernel_from_json(const nlohmann::json& j);

}  // namespace restorekit
