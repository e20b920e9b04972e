#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "restorekit/control.hpp"
#include "restorekit/cues.hpp"
#include "restorekit/degrade.hpp"
#include "restorekit/metrics.hpp"

namespace restorekit {

namespace fs = std::filesystem;

/// Effective settings for one CLI subcommand after merging the config file
/// and flags.
struct PipelineConfig {
    fs::path input;
    fs::path output;
    std::optional<fs::path> reference;
    std::optional<DegradationRecipe> recipe;
    std::string recipe_source;
    bool random_blur = false;
    std::vector<TaskKind> tasks;
    CueParams cue_params;
    std::uint64_t seed = 0;
    int workers = 1;
    std::optional<double> sigma;
    bool sigma_random = false;
    std::optional<Kernel2D> psf;
    std::string psf_source;

    ControlConfig control;
    std::optional<fs::path> weights;
    int control_size = 64;
    int timestep = 0;

    std::vector<std::pair<std::string, fs::path>> methods;
};

/// Canonical JSON of every setting that influences outputs.
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
/// Applies the keys present in `j` on top of `cfg`. Relative paths are
/// resolved against `base_dir`.
void apply_pipeline_config(PipelineConfig& cfg, const nlohmann::json& j, const fs::path& base_dir = {});
/// FNV-1a of the canonical config JSON, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

/// Reads a PSF from a JSON kernel (`{height, width, taps}`) or a 1-channel
/// image (normalized to unit sum).
Kernel2D load_psf(const fs::path& path);

/// Derives a per-item seed from the run seed and the item's file name.
std::uint64_t item_seed(std::uint64_t seed, const std::string& name);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads. The first
/// exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Every run_* writes its artifacts plus `manifest.json` into cfg.output and
/// returns the manifest.
nlohmann::json run_degrade(const PipelineConfig& cfg);
nlohmann::json run_cues(const PipelineConfig& cfg);
nlohmann::json run_restore_classical(const PipelineConfig& cfg);
nlohmann::json run_control_forward(const PipelineConfig& cfg);
nlohmann::json run_schedule(const PipelineConfig& cfg);
nlohmann::json run_evaluate(const PipelineConfig& cfg);
nlohmann::json run_grid(const PipelineConfig& cfg);

/// Restoration order used by run_restore_classical (noise, haze, blur, dark).
std::vector<TaskKind> restore_order(const std::vector<TaskKind>& requested);
Image restore_image(const Image& img, const std::vector<TaskKind>& order, const CueParams& params,
                    const std::optional<Kernel2D>& psf);

/// Places `img` centred on a `height x width` 3-channel canvas of `fill`.
Image letterbox(const Image& img, int height, int width, double fill = 0.0);
/// Draws `text` with a 5x7 bitmap font (scale 1 = 6 px advance) at (x, y).
void draw_text(Image& canvas, const std::string& text, int x, int y, int scale, double value);

}  // namespace restorekit
