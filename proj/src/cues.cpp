#include "restorekit/cues.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <sstream>

#include "restorekit/errors.hpp"
#include "restorekit/image_io.hpp"

namespace restorekit {

std::string_view task_name(TaskKind task) noexcept {
    switch (task) {
        case TaskKind::Haze: return "haze";
        case TaskKind::Blur: return "blur";
        case TaskKind::Dark: return "dark";
        case TaskKind::Noise: return "noise";
    }
    return "haze";
}

TaskKind parse_task(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    for (TaskKind t : kAllTasks) {
        if (lower == task_name(t)) return t;
    }
    throw ConfigError("unknown task '" + std::string(name) + "' (expected haze, blur, dark or noise)");
}

std::vector<TaskKind> parse_task_list(std::string_view csv) {
    std::vector<TaskKind> out;
    if (csv == "all") return {kAllTasks.begin(), kAllTasks.end()};
    std::stringstream ss{std::string(csv)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const TaskKind t = parse_task(item);
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    return out;
}

void CueSet::set(TaskKind task, TaskCues cues) {
    const std::size_t limit = task == TaskKind::Blur ? 2 : 1;
    if (cues.secondaries.size() > limit) {
        throw DomainError(std::string(task_name(task)) + " accepts at most " + std::to_string(limit) +
                          " secondary cue(s)");
    }
    if (cues.primary.empty()) throw DomainError("cue set entry needs a primary estimate");
    if (height_ == 0 && width_ == 0) {
        height_ = cues.primary.height();
        width_ = cues.primary.width();
    }
    auto check = [&](const Image& im) {
        if (im.height() != height_ || im.width() != width_) throw DomainError("cue extent differs from the source");
    };
    check(cues.primary);
    for (const auto& s : cues.secondaries) check(s);
    entries_[task] = std::move(cues);
}

const TaskCues& CueSet::at(TaskKind task) const {
    const auto it = entries_.find(task);
    if (it == entries_.end()) throw ConfigError("cue set has no entry for task " + std::string(task_name(task)));
    return it->second;
}

std::size_t CueSet::secondary_count() const {
    std::size_t n = 0;
    for (const auto& [task, cues] : entries_) n += cues.secondaries.size();
    return n;
}

namespace {

TaskCues extract_one(const Image& img, TaskKind task, const CueParams& p, const std::optional<Kernel2D>& psf) {
    switch (task) {
        case TaskKind::Haze: {
            HazeCues h = extract_haze(img, p);
            return {std::move(h.estimate), {std::move(h.raw.values)}};
        }
        case TaskKind::Blur: {
            Image deblurred = wiener_deconvolve(img, *psf, p.wiener_k).clamped();
            ShockResult shock = shock_filter(img, p.shock_dt, p.shock_iterations, p.edge_threshold);
            return {std::move(deblurred), {std::move(shock.edge_map), shock.shock_image.clamped()}};
        }
        case TaskKind::Dark:
            return {clahe(img, p.clahe_tile, p.clahe_clip), {color_map(img, p.color_eps)}};
        case TaskKind::Noise:
            return {perona_malik(img, p.pm_conduction, p.pm_dt, p.pm_iterations).clamped(),
                    {pm_edge_map(img, p.pm_k_small, p.pm_k_large, p.pm_dt, p.pm_iterations)}};
    }
    throw ConfigError("unknown task");
}

}  // namespace

CueSet extract_cues(const Image& input, const std::vector<TaskKind>& tasks, const CueParams& params,
                    const std::optional<Kernel2D>& psf) {
    if (tasks.empty()) throw ConfigError("extract_cues: no tasks requested");
    if (std::find(tasks.begin(), tasks.end(), TaskKind::Blur) != tasks.end() && !psf) {
        throw ConfigError("extract_cues: the blur task needs a PSF");
    }
    const Image img = broadcast_channels(input, 3);
    CueSet set(img.height(), img.width());
    if (params.parallel && tasks.size() > 1) {
        std::vector<std::future<TaskCues>> jobs;
        for (TaskKind t : tasks) {
            jobs.push_back(std::async(std::launch::async, [&img, t, &params, &psf] { return extract_one(img, t, params, psf); }));
        }
        for (std::size_t i = 0; i < tasks.size(); ++i) set.set(tasks[i], jobs[i].get());
    } else {
        for (TaskKind t : tasks) set.set(t, extract_one(img, t, params, psf));
    }
    return set;
}

nlohmann::json cue_params_to_json(const CueParams& p) {
    return {
        {"haze", {{"omega", p.omega}, {"patch_radius", p.patch_radius}, {"t_floor", p.t_floor},
                  {"top_fraction", p.top_fraction}, {"guide_radius", p.guide_radius}, {"guide_eps", p.guide_eps}}},
        {"blur", {{"wiener_k", p.wiener_k}, {"shock_dt", p.shock_dt}, {"shock_iterations", p.shock_iterations},
                  {"edge_threshold", p.edge_threshold}}},
        {"dark", {{"clahe_tile", p.clahe_tile}, {"clahe_clip", p.clahe_clip}, {"color_eps", p.color_eps}}},
        {"noise", {{"conduction", p.pm_conduction}, {"dt", p.pm_dt}, {"iterations", p.pm_iterations},
                   {"k_small", p.pm_k_small}, {"k_large", p.pm_k_large}}},
    };
}

CueParams cue_params_from_json(const nlohmann::json& j) {
    CueParams p;
    try {
        if (j.contains("haze")) {
            const auto& h = j["haze"];
            p.omega = h.value("omega", p.omega);
            p.patch_radius = h.value("patch_radius", p.patch_radius);
            p.t_floor = h.value("t_floor", p.t_floor);
            p.top_fraction = h.value("top_fraction", p.top_fraction);
            p.guide_radius = h.value("guide_radius", p.guide_radius);
            p.guide_eps = h.value("guide_eps", p.guide_eps);
        }
        if (j.contains("blur")) {
            const auto& b = j["blur"];
            p.wiener_k = b.value("wiener_k", p.wiener_k);
            p.shock_dt = b.value("shock_dt", p.shock_dt);
            p.shock_iterations = b.value("shock_iterations", p.shock_iterations);
            p.edge_threshold = b.value("edge_threshold", p.edge_threshold);
        }
        if (j.contains("dark")) {
            const auto& d = j["dark"];
            p.clahe_tile = d.value("clahe_tile", p.clahe_tile);
            p.clahe_clip = d.value("clahe_clip", p.clahe_clip);
            p.color_eps = d.value("color_eps", p.color_eps);
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            p.pm_conduction = n.value("conduction", p.pm_conduction);
            p.pm_dt = n.value("dt", p.pm_dt);
            p.pm_iterations = n.value("iterations", p.pm_iterations);
            p.pm_k_small = n.value("k_small", p.pm_k_small);
            p.pm_k_large = n.value("k_large", p.pm_k_large);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid cue parameters: ") + e.what());
    }
    return p;
}

void save_cue_set(const CueSet& cues, const std::filesystem::path& dir, const CueParams& params,
                  const nlohmann::json& extra) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [task, tc] : cues.entries()) {
        const std::string name(task_name(task));
        const auto emit = [&](const Image& img, int rank) {
            const std::string file = name + "_" + std::to_string(rank) + ".png";
            save_image(img, dir / file, 16);
            entries.push_back({{"task", name},
                               {"rank", rank},
                               {"role", rank == 0 ? "primary" : "secondary"},
                               {"file", file},
                               {"channels", img.channels()}});
        };
        emit(tc.primary, 0);
        for (std::size_t i = 0; i < tc.secondaries.size(); ++i) emit(tc.secondaries[i], static_cast<int>(i + 1));
    }
    nlohmann::json manifest = extra;
    manifest["height"] = cues.height();
    manifest["width"] = cues.width();
    manifest["parameters"] = cue_params_to_json(params);
    manifest["entries"] = entries;
    write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

CueSet load_cue_set(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no manifest.json in " + dir.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("cue manifest: ") + e.what());
    }
    std::map<TaskKind, TaskCues> staged;
    try {
        for (const auto& e : manifest.at("entries")) {
            const TaskKind task = parse_task(e.at("task").get<std::string>());
            const int rank = e.at("rank").get<int>();
            Image img = load_image(dir / e.at("file").get<std::string>());
            auto& tc = staged[task];
            if (rank == 0) {
                tc.primary = std::move(img);
            } else {
                if (static_cast<int>(tc.secondaries.size()) < rank) tc.secondaries.resize(rank);
                tc.secondaries[rank - 1] = std::move(img);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("cue manifest: ") + e.what());
    }
    CueSet set(manifest.value("height", 0), manifest.value("width", 0));
    for (auto& [task, tc] : staged) set.set(task, std::move(tc));
    return set;
}

}  // namespace restorekit
