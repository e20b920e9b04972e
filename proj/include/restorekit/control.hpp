#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "restorekit/cues.hpp"
#include "restorekit/image.hpp"

namespace restorekit {

inline constexpr int kEmbeddingDim = 768;
inline constexpr int kTimeDim = 128;

/// Channel-major (C, H, W) feature tensor at one pyramid level.
struct FeatureMap {
    int level = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int level, int channels, int height, int width, double fill = 0.0);

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const FeatureMap& o) const noexcept {
        return channels == o.channels && height == o.height && width == o.width;
    }
    bool operator==(const FeatureMap& o) const = default;
};

/// CHW view of an image; 1-channel images are repeated to `channels`.
FeatureMap to_feature_map(const Image& img, int channels = 3);

/// Mean, population std, min, max.
nlohmann::json feature_stats(const FeatureMap& f);

struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;

    std::size_t count() const;
};

struct InitDescriptor {
    std::uint64_t seed = 0;
    std::string scheme = "orthogonal+zero-conv";
};

/// Architecture knobs. Widths are indexed by control level 0..levels.
struct ControlConfig {
    int levels = 4;
    std::vector<int> widths{16, 32, 64, 128, 256};
    int groups = 8;
    /// Terminal MLCN level per secondary rank (1-based rank -> level).
    /// Missing entries default to the rank itself.
    std::map<TaskKind, std::vector<int>> terminal_levels;

    int mlcn_width() const { return widths.front(); }
    int terminal_level(TaskKind task, int rank) const;
    void validate() const;
};

nlohmann::json control_config_to_json(const ControlConfig& cfg);
ControlConfig control_config_from_json(const nlohmann::json& j);

/// Named tensors for every block. Names look like `mlcn.blur.b1.l2.conv1.w`.
class BlockWeights {
public:
    InitDescriptor init;

    const Tensor& get(const std::string& name) const;
    Tensor& get(const std::string& name);
    void set(const std::string& name, Tensor t) { tensors_[name] = std::move(t); }
    bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
    const std::map<std::string, Tensor>& tensors() const noexcept { return tensors_; }
    bool operator==(const BlockWeights& o) const;

private:
    std::map<std::string, Tensor> tensors_;
};

bool operator==(const Tensor& a, const Tensor& b);

/// Orthogonal conv and affine weights, zero biases, unit group-norm gains,
/// exactly zero zero-convolutions.
BlockWeights init_weights(const ControlConfig& cfg, std::uint64_t seed);

/// `<stem>.bin` holds little-endian float64 values back to back;
/// `<stem>.json` lists name, shape, offset and count per tensor.
void save_weights(const BlockWeights& w, const std::filesystem::path& stem);
BlockWeights load_weights(const std::filesystem::path& stem);

/// Unit-norm 768-vector seeded by an FNV-1a hash of `key`.
std::vector<double> pseudo_embedding(const std::string& key);
std::vector<double> task_embedding(TaskKind task);
std::vector<double> image_embedding(const Image& img);
std::vector<double> timestep_encoding(int t, int dim = kTimeDim);

// -- tensor primitives -------------------------------------------------------

/// Zero-padded "same" convolution; weight shape (Cout, Cin, k, k).
FeatureMap conv2d(const FeatureMap& x, const Tensor& weight, const Tensor* bias = nullptr);
/// Weight shape (C, 1, k, k).
FeatureMap depthwise_conv2d(const FeatureMap& x, const Tensor& weight, const Tensor* bias = nullptr);
FeatureMap group_norm(const FeatureMap& x, int groups, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
FeatureMap silu(FeatureMap x);
/// Channel-split gate: first half times second half.
FeatureMap simple_gate(const FeatureMap& x);
/// x * (W avg(x) + b), W of shape (C, C).
FeatureMap channel_attention(const FeatureMap& x, const Tensor& weight, const Tensor& bias);
/// 2x2 average pooling; odd sides are replicate-padded. Level increments.
FeatureMap downsample2(const FeatureMap& x);
FeatureMap add(const FeatureMap& a, const FeatureMap& b);

// -- blocks ------------------------------------------------------------------

/// Multi-level condition network for one task. Returns the primary
/// branch's level-L tensor; `trace` (if given) receives levels 1..L.
FeatureMap mlcn_forward(const TaskCues& cues, TaskKind task, const BlockWeights& w, const ControlConfig& cfg,
                        std::vector<FeatureMap>* trace = nullptr);

/// Task stabilization over the controls of all tasks at level j.
FeatureMap tsu(const std::vector<FeatureMap>& controls, int j, const BlockWeights& w, const ControlConfig& cfg);

FeatureMap task_block(const FeatureMap& c, TaskKind task, int j, const BlockWeights& w, const ControlConfig& cfg);

/// Shared encoder: conv + embedding and timestep offsets, SiLU, downsample.
FeatureMap control_encoder(const FeatureMap& c, const std::vector<double>& image_emb, int timestep, int j,
                           const BlockWeights& w, const ControlConfig& cfg);

/// Modulated, demodulated 3x3 convolution with an explicit style vector.
FeatureMap mod_conv_with_style(const FeatureMap& x, const std::vector<double>& style, const Tensor& weight,
                               double eps = 1e-8);
/// Style = affine(task embedding) with the level-j ModConv weights.
FeatureMap mod_conv(const FeatureMap& x, const std::vector<double>& task_emb, int j, const BlockWeights& w);
std::vector<double> modulation_style(const std::vector<double>& task_emb, int j, const BlockWeights& w);

/// Per-task controls and conditioning.
struct ControlStack {
    std::vector<TaskKind> tasks;
    std::map<TaskKind, std::vector<FeatureMap>> controls;  ///< C_h^0 .. C_h^j
    std::map<TaskKind, std::vector<FeatureMap>> stepped;   ///< c_h^j after the residual terms
    std::map<TaskKind, std::vector<double>> task_embeddings;
    std::optional<std::vector<double>> image_embedding;
    int timestep = 0;
    std::map<TaskKind, bool> switches;

    int top_level() const;
};

/// Starts a stack from level-0 controls (one per task, equal shapes).
ControlStack make_stack(const std::map<TaskKind, FeatureMap>& level0, const std::optional<std::vector<double>>& image_emb,
                        int timestep);

/// c = C + TSU + TaskBlock at level j, then C^{j+1} = encoder(c). Tasks run
/// concurrently when `parallel`.
void control_step(ControlStack& stack, int j, const BlockWeights& w, const ControlConfig& cfg, bool parallel = false);

struct MoeResult {
    FeatureMap value;
    bool no_active_tasks = false;
};

/// Gate map: spatial mean per channel times channel mean per pixel.
FeatureMap moe_gate(const FeatureMap& modulated);
MoeResult moe_adapter(const ControlStack& stack, int j, const BlockWeights& w);

struct ControlRun {
    ControlStack stack;
    std::vector<MoeResult> moe;  ///< one per level
};

/// MLCN per task, L control steps, the adapter at every level.
ControlRun run_control(const CueSet& cues, const std::vector<TaskKind>& tasks, const Image& source, int timestep,
                       const BlockWeights& w, const ControlConfig& cfg, bool parallel = false);

/// Per-level, per-task statistics of C, c and the adapter output.
nlohmann::json control_run_stats(const ControlRun& run);

}  // namespace restorekit
