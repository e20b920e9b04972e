#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "restorekit/image.hpp"

namespace restorekit {

/// Degradation task a cue bundle targets.
enum class TaskKind { Haze, Blur, Dark, Noise };

inline constexpr std::array<TaskKind, 4> kAllTasks{TaskKind::Haze, TaskKind::Blur, TaskKind::Dark,
                                                   TaskKind::Noise};

std::string_view task_name(TaskKind task) noexcept;
/// Accepts "haze", "blur", "dark", "noise" (case-insensitive). Throws ConfigError.
TaskKind parse_task(std::string_view name);
/// Comma-separated list, or "all".
std::vector<TaskKind> parse_task_list(std::string_view csv);

// ---------------------------------------------------------------------------
// Haze: dark channel prior, transmission, guided filter, haze-free estimate

/// Per pixel: min over channels, then min over the (2r+1)^2 neighbourhood
/// (reflect boundary). Requires a 3-channel image.
Image dark_channel(const Image& img, int patch_radius);

/// Per-channel mean of the pixels whose dark-channel value is in the top
/// `top_fraction` (ties broken by raster order). When floor(fraction * N) is
/// zero the single brightest pixel (largest channel sum) is used instead.
std::array<double, 3> estimate_atmospheric_light(const Image& img, const Image& dark, double top_fraction);

struct TransmissionMap {
    Image values;  ///< 1 channel, each value in [floor, 1]
    double floor = 0.1;
};

/// t = clamp(1 - omega * dark_channel(img / A), t_floor, 1).
TransmissionMap transmission_map(const Image& img, const std::array<double, 3>& airlight, double omega,
                                 int patch_radius, double t_floor = 0.1);

/// Local linear model filter. `guide` is 1-channel or has as many channels
/// as `src` (paired channel-wise). Windows are clipped at the border.
Image guided_filter(const Image& guide, const Image& src, int radius, double eps);

/// (img - A) / max(t, t_floor) + A, clamped to [0, 1].
Image dehaze_estimate(const Image& img, const Image& transmission, const std::array<double, 3>& airlight,
                      double t_floor = 0.1);

// ---------------------------------------------------------------------------
// Blur: Wiener deconvolution and shock-filter edges

/// Frequency-domain Wiener filter conj(H) G / (|H|^2 + k), per channel. The
/// image is mirror-extended to twice its size before the transform, which
/// makes the circular model exact for reflect-blurred input with a symmetric
/// PSF. A PSF that does not sum to one is normalized; all-zero throws.
Image wiener_deconvolve(const Image& img, const Kernel2D& psf, double k);

struct ShockResult {
    Image edge_map;     ///< binary, 1 channel
    Image shock_image;  ///< final evolved image, 1 channel
};

/// Evolves e <- e - sign(Laplacian e) |grad e| dt starting from gray(img).
/// The Laplacian is the 5-point stencil; |grad e| uses minmod one-sided
/// differences. The edge map thresholds |grad e| / max |grad e| (central
/// differences) at `edge_threshold`.
ShockResult shock_filter(const Image& img, double dt, int iterations, double edge_threshold = 0.1);
/// One evolution step on a 1-channel image.
Image shock_step(const Image& e, double dt);

// ---------------------------------------------------------------------------
// Noise: Perona-Malik diffusion

/// Explicit 4-neighbour scheme with g(s) = exp(-(s/K)^2) and zero flux across
/// the border, channels diffused independently. Throws StabilityError when
/// dt > 0.25.
Image perona_malik(const Image& img, double conduction, double dt, int iterations);

/// Channel-mean |PM(K_large) - PM(K_small)| scaled so its maximum is 1
/// (all zeros when the two diffusions agree). 1-channel output.
Image pm_edge_map(const Image& img, double k_small, double k_large, double dt, int iterations);

// ---------------------------------------------------------------------------
// Dark: colour map and contrast-limited adaptive histogram equalization

/// 3 I_c / (sum_c I_c + eps), clamped to [0, 3]. Unscaled.
Image color_map_raw(const Image& img, double eps = 1e-6);
/// `color_map_raw / 3`, so the stored map lives in [0, 1].
Image color_map(const Image& img, double eps = 1e-6);

/// CLAHE on luma with `tile`-pixel tiles, 256 bins, clip at
/// `clip_limit * pixels / 256` per tile, bilinear blending between tile
/// mappings. Colour is carried by the per-pixel luma ratio. Tiles whose
/// histogram has a single occupied bin map identically. Images smaller than
/// one tile are equalized globally.
Image clahe(const Image& img, int tile, double clip_limit);

// ---------------------------------------------------------------------------
// Orchestration

struct CueParams {
    // Haze
    double omega = 0.95;
    int patch_radius = 7;
    double t_floor = 0.1;
    double top_fraction = 0.001;
    int guide_radius = 28;
    double guide_eps = 1e-3;
    // Blur
    double wiener_k = 1e-3;
    double shock_dt = 0.1;
    int shock_iterations = 10;
    double edge_threshold = 0.1;
    // Dark
    int clahe_tile = 32;
    double clahe_clip = 3.0;
    double color_eps = 1e-6;
    // Noise
    double pm_conduction = 0.1;
    double pm_dt = 0.2;
    int pm_iterations = 10;
    double pm_k_small = 0.05;
    double pm_k_large = 0.2;
    /// Evaluate tasks on separate threads. Results do not depend on it.
    bool parallel = false;
};

nlohmann::json cue_params_to_json(const CueParams& p);
CueParams cue_params_from_json(const nlohmann::json& j);

/// Haze pipeline: A from the dark channel, raw transmission, guided-filter
/// refinement on gray(img), then the haze-free estimate.
struct HazeCues {
    std::array<double, 3> airlight{};
    TransmissionMap raw;
    Image refined;
    Image estimate;
};
HazeCues extract_haze(const Image& img, const CueParams& params);

struct TaskCues {
    Image primary;
    std::vector<Image> secondaries;
};

/// Primary estimate plus secondary guidance maps for each requested task.
/// All entries share one spatial extent.
class CueSet {
public:
    CueSet() = default;
    CueSet(int height, int width) : height_(height), width_(width) {}

    /// Throws DomainError on extent mismatch or a secondary-count violation
    /// (Blur <= 2, others <= 1).
    void set(TaskKind task, TaskCues cues);
    bool contains(TaskKind task) const { return entries_.count(task) != 0; }
    const TaskCues& at(TaskKind task) const;
    const std::map<TaskKind, TaskCues>& entries() const { return entries_; }
    std::size_t primary_count() const { return entries_.size(); }
    std::size_t secondary_count() const;
    int height() const { return height_; }
    int width() const { return width_; }

private:
    int height_ = 0;
    int width_ = 0;
    std::map<TaskKind, TaskCues> entries_;
};

/// Haze: dehaze estimate | transmission. Blur: Wiener | edge map, shock
/// image. Dark: CLAHE | colour map. Noise: Perona-Malik | PM edge map.
/// 1-channel inputs are broadcast to 3 channels first. Throws ConfigError
/// when Blur is requested without a PSF or no task is requested.
CueSet extract_cues(const Image& img, const std::vector<TaskKind>& tasks, const CueParams& params,
                    const std::optional<Kernel2D>& psf = std::nullopt);

/// Writes `<task>_<rank>.png` (16-bit) plus `manifest.json` into `dir`.
/// `extra` is merged into the manifest root.
void save_cue_set(const CueSet& cues, const std::filesystem::path& dir, const CueParams& params,
                  const nlohmann::json& extra = nlohmann::json::object());
CueSet load_cue_set(const std::filesystem::path& dir);

}  // namespace restorekit
