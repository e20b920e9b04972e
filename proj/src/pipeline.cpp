#include "restorekit/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "restorekit/curriculum.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"
#include "restorekit/hash.hpp"
#include "restorekit/image_io.hpp"

namespace restorekit {

namespace {

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<fs::path> input_images(const fs::path& dir) {
    if (dir.empty()) throw UsageError("--input is required");
    if (!fs::is_directory(dir)) throw IoError("input directory " + dir.string() + " does not exist");
    auto files = list_images(dir);
    if (files.empty()) throw UsageError("no images in " + dir.string());
    std::map<std::string, fs::path> stems;
    for (const auto& f : files) {
        if (!stems.emplace(f.stem().string(), f).second) {
            throw UsageError("two inputs share the name '" + f.stem().string() + "'");
        }
    }
    return files;
}

void prepare_output(const fs::path& dir) {
    if (dir.empty()) throw UsageError("--output is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

/// File in `dir` whose stem equals `stem`, if any.
std::optional<fs::path> find_by_stem(const fs::path& dir, const std::string& stem) {
    for (const auto& f : list_images(dir)) {
        if (f.stem().string() == stem) return f;
    }
    return std::nullopt;
}

std::vector<TaskKind> tasks_or_all(const std::vector<TaskKind>& t) {
    return t.empty() ? std::vector<TaskKind>(kAllTasks.begin(), kAllTasks.end()) : t;
}

bool wants(const std::vector<TaskKind>& tasks, TaskKind t) {
    return std::find(tasks.begin(), tasks.end(), t) != tasks.end();
}

/// PSF from the config, else the `<stem>.psf.json` written by degrade.
std::optional<Kernel2D> psf_for(const PipelineConfig& cfg, const fs::path& file) {
    if (cfg.psf) return cfg.psf;
    const fs::path side = file.parent_path() / (file.stem().string() + ".psf.json");
    if (fs::exists(side)) return kernel_from_json(read_json(side));
    return std::nullopt;
}

nlohmann::json task_names(const std::vector<TaskKind>& tasks) {
    nlohmann::json arr = nlohmann::json::array();
    for (TaskKind t : tasks) arr.push_back(std::string(task_name(t)));
    return arr;
}

nlohmann::json base_manifest(const std::string& command, const PipelineConfig& cfg) {
    return {{"tool", "restorekit"},
            {"command", command},
            {"config_hash", config_hash(cfg)},
            {"seed", cfg.seed},
            {"config", pipeline_config_to_json(cfg)}};
}

void write_manifest(const fs::path& dir, const nlohmann::json& m) {
    write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<TaskKind> parse_tasks_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_task_list(j.get<std::string>());
    std::vector<TaskKind> out;
    for (const auto& e : j) {
        const TaskKind t = parse_task(e.get<std::string>());
        if (!wants(out, t)) out.push_back(t);
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg) {
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& [name, dir] : cfg.methods) methods.push_back({name, dir.string()});
    nlohmann::json sigma = nullptr;
    if (cfg.sigma_random) {
        sigma = "random";
    } else if (cfg.sigma) {
        sigma = *cfg.sigma;
    }
    return {
        {"input", cfg.input.string()},
        {"reference", cfg.reference ? nlohmann::json(cfg.reference->string()) : nlohmann::json(nullptr)},
        {"recipe", cfg.recipe ? recipe_to_json(*cfg.recipe) : nlohmann::json(nullptr)},
        {"random_blur", cfg.random_blur},
        {"tasks", task_names(cfg.tasks)},
        {"cue_params", cue_params_to_json(cfg.cue_params)},
        {"seed", cfg.seed},
        {"sigma", sigma},
        {"psf", cfg.psf ? kernel_to_json(*cfg.psf) : nlohmann::json(nullptr)},
        {"control", control_config_to_json(cfg.control)},
        {"weights", cfg.weights ? nlohmann::json(cfg.weights->string()) : nlohmann::json(nullptr)},
        {"size", cfg.control_size},
        {"timestep", cfg.timestep},
        {"methods", methods},
    };
}

void apply_pipeline_config(PipelineConfig& cfg, const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    static const std::array<const char*, 17> known{"input",   "output", "reference", "recipe",  "random_blur", "tasks",
                                                   "cue_params", "seed", "workers",   "sigma",   "psf",         "control",
                                                   "weights", "size",   "timestep",  "methods", "comment"};
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    auto path = [&](const nlohmann::json& v) {
        const fs::path p(v.get<std::string>());
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    try {
        if (j.contains("input")) cfg.input = path(j["input"]);
        if (j.contains("output")) cfg.output = path(j["output"]);
        if (j.contains("reference")) cfg.reference = path(j["reference"]);
        if (j.contains("recipe")) {
            const auto& r = j["recipe"];
            if (r.is_string()) {
                cfg.recipe = load_recipe(path(r).string());
                cfg.recipe_source = path(r).string();
            } else {
                cfg.recipe = recipe_from_json(r, base_dir);
                cfg.recipe_source = "inline";
            }
        }
        if (j.contains("random_blur")) cfg.random_blur = j["random_blur"].get<bool>();
        if (j.contains("tasks")) cfg.tasks = parse_tasks_json(j["tasks"]);
        if (j.contains("cue_params")) cfg.cue_params = cue_params_from_json(j["cue_params"]);
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
        if (j.contains("sigma")) {
            const auto& s = j["sigma"];
            if (s.is_string() && s.get<std::string>() == "random") {
                cfg.sigma_random = true;
                cfg.sigma.reset();
            } else {
                cfg.sigma = s.get<double>();
                cfg.sigma_random = false;
            }
        }
        if (j.contains("psf")) {
            const auto& p = j["psf"];
            if (p.is_string()) {
                cfg.psf = load_psf(path(p));
                cfg.psf_source = path(p).string();
            } else {
                cfg.psf = kernel_from_json(p);
                cfg.psf_source = "inline";
            }
        }
        if (j.contains("control")) cfg.control = control_config_from_json(j["control"]);
        if (j.contains("weights")) cfg.weights = path(j["weights"]);
        if (j.contains("size")) cfg.control_size = j["size"].get<int>();
        if (j.contains("timestep")) cfg.timestep = j["timestep"].get<int>();
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& [name, dir] : j["methods"].items()) cfg.methods.emplace_back(name, path(dir));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }
}

std::string config_hash(const PipelineConfig& cfg) { return hex64(fnv1a(pipeline_config_to_json(cfg).dump())); }

Kernel2D load_psf(const fs::path& path) {
    if (path.extension() == ".json") return kernel_from_json(read_json(path));
    const Image img = load_image(path);
    if (img.channels() != 1) throw ConfigError("PSF image must be single-channel");
    if (img.height() % 2 == 0 || img.width() % 2 == 0) throw ConfigError("PSF image must have odd dimensions");
    std::vector<double> taps(img.data().begin(), img.data().end());
    return Kernel2D(img.height(), img.width(), std::move(taps)).normalized();
}

std::uint64_t item_seed(std::uint64_t seed, const std::string& name) {
    return fnv1a(name, fnv1a(std::to_string(seed)));
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(n, 1));
    std::vector<std::exception_ptr> errors(n);
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ---------------------------------------------------------------------------
// degrade

nlohmann::json run_degrade(const PipelineConfig& cfg) {
    const auto files = input_images(cfg.input);
    if (!cfg.recipe && !cfg.sigma && !cfg.sigma_random && !cfg.random_blur) {
        throw ConfigError("degrade: give --recipe, --sigma or random_blur");
    }
    prepare_output(cfg.output);
    std::vector<nlohmann::json> items(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        const std::string name = files[i].filename().string();
        const std::string stem = files[i].stem().string();
        const std::uint64_t s = item_seed(cfg.seed, name);
        std::mt19937_64 rng(s);
        DegradationRecipe r = cfg.recipe.value_or(DegradationRecipe{});
        if (cfg.random_blur) r.blur = random_blur(rng);
        std::optional<double> sigma = cfg.sigma;
        if (cfg.sigma_random) sigma = random_noise_sigma(rng);
        if (sigma) {
            r.noise = NoiseStage{*sigma, r.noise ? r.noise->poisson : false, s};
        } else if (r.noise) {
            r.noise->seed = s;
        }
        const Image out = degrade(load_image(files[i]), r);
        save_image(out, cfg.output / (stem + ".png"), 16);
        nlohmann::json item = {{"input", name}, {"output", stem + ".png"}, {"seed", s}, {"recipe", recipe_to_json(r)}};
        if (r.blur) {
            const std::string psf = stem + ".psf.json";
            write_file_atomic(cfg.output / psf, kernel_to_json(r.blur->kernel()).dump() + "\n");
            item["psf"] = psf;
        }
        if (r.noise) item["sigma"] = r.noise->sigma;
        items[i] = std::move(item);
    });
    nlohmann::json m = base_manifest("degrade", cfg);
    m["items"] = items;
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// cues

nlohmann::json run_cues(const PipelineConfig& cfg) {
    const auto files = input_images(cfg.input);
    const auto tasks = tasks_or_all(cfg.tasks);
    prepare_output(cfg.output);
    std::vector<nlohmann::json> items(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        const std::string stem = files[i].stem().string();
        const auto psf = psf_for(cfg, files[i]);
        if (wants(tasks, TaskKind::Blur) && !psf) {
            throw ConfigError("blur cues for " + files[i].filename().string() + " need a PSF (--psf)");
        }
        const CueSet cues = extract_cues(load_image(files[i]), tasks, cfg.cue_params, psf);
        save_cue_set(cues, cfg.output / stem, cfg.cue_params,
                     {{"source", files[i].filename().string()}, {"seed", cfg.seed}, {"config_hash", config_hash(cfg)}});
        items[i] = {{"input", files[i].filename().string()}, {"directory", stem}, {"tasks", task_names(tasks)}};
    });
    nlohmann::json m = base_manifest("cues", cfg);
    m["items"] = items;
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// classical restoration

std::vector<TaskKind> restore_order(const std::vector<TaskKind>& requested) {
    std::vector<TaskKind> order;
    for (TaskKind t : {TaskKind::Noise, TaskKind::Haze, TaskKind::Blur, TaskKind::Dark}) {
        if (wants(requested, t)) order.push_back(t);
    }
    return order;
}

Image restore_image(const Image& img, const std::vector<TaskKind>& order, const CueParams& p,
                    const std::optional<Kernel2D>& psf) {
    Image cur = img;
    for (TaskKind t : order) {
        switch (t) {
            case TaskKind::Noise: cur = perona_malik(cur, p.pm_conduction, p.pm_dt, p.pm_iterations).clamped(); break;
            case TaskKind::Haze: cur = extract_haze(broadcast_channels(cur, 3), p).estimate; break;
            case TaskKind::Blur:
                if (!psf) throw ConfigError("blur restoration needs a PSF");
                cur = wiener_deconvolve(cur, *psf, p.wiener_k).clamped();
                break;
            case TaskKind::Dark: cur = clahe(cur, p.clahe_tile, p.clahe_clip); break;
        }
    }
    if (img.channels() == 1 && cur.channels() == 3) cur = to_gray(cur);
    return cur;
}

nlohmann::json run_restore_classical(const PipelineConfig& cfg) {
    const auto files = input_images(cfg.input);
    const auto order = restore_order(cfg.tasks);
    if (cfg.reference && !fs::is_directory(*cfg.reference)) {
        throw IoError("reference directory " + cfg.reference->string() + " does not exist");
    }
    prepare_output(cfg.output);
    std::vector<nlohmann::json> items(files.size());
    std::vector<std::optional<QualityRecord>> restored_q(files.size()), degraded_q(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        const std::string name = files[i].filename().string();
        const std::string stem = files[i].stem().string();
        const auto psf = wants(order, TaskKind::Blur) ? psf_for(cfg, files[i]) : std::nullopt;
        if (wants(order, TaskKind::Blur) && !psf) {
            throw ConfigError("blur restoration of " + name + " needs a PSF (--psf or " + stem + ".psf.json)");
        }
        const Image in = load_image(files[i]);
        const Image out = restore_image(in, order, cfg.cue_params, psf);
        save_image(out, cfg.output / (stem + ".png"), 16);
        nlohmann::json item = {{"input", name}, {"output", stem + ".png"}};
        if (cfg.reference) {
            const auto ref = find_by_stem(*cfg.reference, stem);
            if (!ref) throw UsageError("no reference image for " + name);
            const Image gt = load_image(*ref);
            restored_q[i] = evaluate_pair(stem, out, gt);
            degraded_q[i] = evaluate_pair(stem, in, gt);
            item["psnr"] = restored_q[i]->psnr;
            item["psnr_input"] = degraded_q[i]->psnr;
        }
        items[i] = std::move(item);
    });
    nlohmann::json m = base_manifest("restore", cfg);
    m["order"] = task_names(order);
    m["items"] = items;
    if (cfg.reference) {
        std::vector<QualityRecord> rq, dq;
        for (std::size_t i = 0; i < files.size(); ++i) {
            rq.push_back(*restored_q[i]);
            dq.push_back(*degraded_q[i]);
        }
        write_file_atomic(cfg.output / "quality.json",
                          nlohmann::json{{"restored", quality_to_json(rq)}, {"input", quality_to_json(dq)}}.dump(2) + "\n");
        write_file_atomic(cfg.output / "quality.csv", quality_to_csv(rq));
        std::size_t improved = 0;
        for (std::size_t i = 0; i < rq.size(); ++i) improved += rq[i].psnr > dq[i].psnr;
        m["improved"] = improved;
    }
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// evaluation

nlohmann::json run_evaluate(const PipelineConfig& cfg) {
    const auto files = input_images(cfg.input);
    if (!cfg.reference) throw UsageError("evaluate needs --reference");
    if (!fs::is_directory(*cfg.reference)) throw IoError("reference directory " + cfg.reference->string() + " does not exist");
    prepare_output(cfg.output);
    std::vector<QualityRecord> records(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        const std::string stem = files[i].stem().string();
        const auto ref = find_by_stem(*cfg.reference, stem);
        if (!ref) throw UsageError("no reference image for " + files[i].filename().string());
        records[i] = evaluate_pair(stem, load_image(files[i]), load_image(*ref));
    });
    write_file_atomic(cfg.output / "quality.json", quality_to_json(records).dump(2) + "\n");
    write_file_atomic(cfg.output / "quality.csv", quality_to_csv(records));
    nlohmann::json m = base_manifest("evaluate", cfg);
    m["summary"] = quality_summary(records);
    m["files"] = {"quality.json", "quality.csv"};
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// curriculum

nlohmann::json run_schedule(const PipelineConfig& cfg) {
    if (cfg.input.empty()) throw UsageError("--input must name a task graph JSON file");
    if (!fs::is_regular_file(cfg.input)) throw IoError("task graph " + cfg.input.string() + " does not exist");
    const auto nodes = task_graph_from_json(read_json(cfg.input));
    const Schedule s = build_schedule(nodes);
    if (!validate_schedule(nodes, s)) throw ValidationError("schedule failed self-validation");
    prepare_output(cfg.output);
    write_file_atomic(cfg.output / "schedule.json", schedule_to_json(s).dump(2) + "\n");
    write_file_atomic(cfg.output / "schedule.txt", schedule_to_table(s));
    nlohmann::json m = base_manifest("schedule", cfg);
    m["schedule"] = schedule_to_json(s)["schedule"];
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// control forward

nlohmann::json run_control_forward(const PipelineConfig& cfg) {
    const auto files = input_images(cfg.input);
    const auto tasks = tasks_or_all(cfg.tasks);
    if (cfg.control_size < 1) throw ConfigError("--size must be positive");
    prepare_output(cfg.output);
    const BlockWeights w = cfg.weights ? load_weights(*cfg.weights) : init_weights(cfg.control, cfg.seed);
    save_weights(w, cfg.output / "weights");
    std::vector<nlohmann::json> items(files.size());
    parallel_for(files.size(), cfg.workers, [&](std::size_t i) {
        const std::string stem = files[i].stem().string();
        const auto psf = psf_for(cfg, files[i]);
        if (wants(tasks, TaskKind::Blur) && !psf) {
            throw ConfigError("control-forward with the blur task needs a PSF (--psf)");
        }
        const Image src = resize_bilinear(broadcast_channels(load_image(files[i]), 3), cfg.control_size, cfg.control_size);
        const CueSet cues = extract_cues(src, tasks, cfg.cue_params, psf);
        const ControlRun run = run_control(cues, tasks, src, cfg.timestep, w, cfg.control);
        nlohmann::json stats = control_run_stats(run);
        stats["source"] = files[i].filename().string();
        write_file_atomic(cfg.output / (stem + ".json"), stats.dump(2) + "\n");
        items[i] = {{"input", files[i].filename().string()}, {"stats", stem + ".json"}};
    });
    nlohmann::json m = base_manifest("control-forward", cfg);
    m["weights"] = {{"archive", "weights.bin"}, {"manifest", "weights.json"}, {"init_seed", w.init.seed},
                    {"scheme", w.init.scheme}};
    m["tasks"] = task_names(tasks);
    m["items"] = items;
    write_manifest(cfg.output, m);
    return m;
}

// ---------------------------------------------------------------------------
// grids

namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;

const std::array<unsigned char, 7>* glyph(char ch) {
    static const std::map<char, std::array<unsigned char, 7>> font{
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}}, {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}}, {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {'/', {0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00}}, {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
        {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}}, {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
        {'?', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x00, 0x04}},
    };
    if (ch == ' ') return nullptr;
    const char up = (ch >= 'a' && ch <= 'z') ? static_cast<char>(ch - 'a' + 'A') : ch;
    const auto it = font.find(up);
    return it == font.end() ? &font.at('?') : &it->second;
}

}  // namespace

void draw_text(Image& canvas, const std::string& text, int x, int y, int scale, double value) {
    int pen = x;
    for (char ch : text) {
        if (const auto* g = glyph(ch)) {
            for (int gy = 0; gy < kGlyphH; ++gy) {
                for (int gx = 0; gx < kGlyphW; ++gx) {
                    if (!((*g)[gy] & (1 << (kGlyphW - 1 - gx)))) continue;
                    for (int sy = 0; sy < scale; ++sy) {
                        for (int sx = 0; sx < scale; ++sx) {
                            const int py = y + gy * scale + sy, px = pen + gx * scale + sx;
                            if (py < 0 || py >= canvas.height() || px < 0 || px >= canvas.width()) continue;
                            for (int c = 0; c < canvas.channels(); ++c) canvas.at(py, px, c) = value;
                        }
                    }
                }
            }
        }
        pen += (kGlyphW + 1) * scale;
    }
}

Image letterbox(const Image& img, int height, int width, double fill) {
    if (img.height() > height || img.width() > width) throw DomainError("letterbox: image larger than the tile");
    const Image src = broadcast_channels(img, 3);
    Image out(height, width, 3, fill);
    const int oy = (height - img.height()) / 2;
    const int ox = (width - img.width()) / 2;
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) out.at(oy + y, ox + x, c) = src.at(y, x, c);
        }
    }
    return out;
}

nlohmann::json run_grid(const PipelineConfig& cfg) {
    const auto scenes = input_images(cfg.input);
    std::vector<std::pair<std::string, fs::path>> columns{{"input", cfg.input}};
    for (const auto& m : cfg.methods) columns.push_back(m);
    if (cfg.reference) columns.emplace_back("GT", *cfg.reference);
    for (const auto& [name, dir] : columns) {
        if (!fs::is_directory(dir)) throw IoError("grid column '" + name + "' directory " + dir.string() + " does not exist");
    }
    prepare_output(cfg.output);

    std::vector<std::vector<Image>> tiles(scenes.size());
    int th = 0, tw = 0;
    for (std::size_t r = 0; r < scenes.size(); ++r) {
        const std::string stem = scenes[r].stem().string();
        for (const auto& [name, dir] : columns) {
            const auto f = find_by_stem(dir, stem);
            if (!f) throw DomainError("grid: column '" + name + "' has no image for scene '" + stem + "'");
            tiles[r].push_back(load_image(*f));
            th = std::max(th, tiles[r].back().height());
            tw = std::max(tw, tiles[r].back().width());
        }
    }
    for (const auto& [name, dir] : columns) {
        if (list_images(dir).size() != scenes.size()) {
            throw DomainError("grid: column '" + name + "' does not hold the same scene set as the input");
        }
    }

    constexpr int kGap = 4;
    constexpr int kStrip = 12;
    const int cols = static_cast<int>(columns.size());
    const int rows = static_cast<int>(scenes.size());
    const int width = kGap + cols * (tw + kGap);
    const int height = kStrip + rows * (th + kGap) + kStrip;
    Image canvas(height, width, 3, 0.15);
    for (int c = 0; c < cols; ++c) {
        const int x0 = kGap + c * (tw + kGap);
        draw_text(canvas, columns[c].first, x0, 2, 1, 1.0);
        for (int r = 0; r < rows; ++r) {
            const Image tile = letterbox(tiles[r][c], th, tw);
            const int y0 = kStrip + r * (th + kGap);
            for (int y = 0; y < th; ++y) {
                for (int x = 0; x < tw; ++x) {
                    for (int ch = 0; ch < 3; ++ch) canvas.at(y0 + y, x0 + x, ch) = tile.at(y, x, ch);
                }
            }
        }
    }
    const std::string caption = cfg.reference ? "GT: reference" : "GT column omitted: no reference";
    draw_text(canvas, caption, kGap, height - kStrip + 3, 1, 1.0);
    save_image(canvas, cfg.output / "grid.png");

    nlohmann::json names = nlohmann::json::array();
    for (const auto& c : columns) names.push_back(c.first);
    nlohmann::json scene_names = nlohmann::json::array();
    for (const auto& s : scenes) scene_names.push_back(s.stem().string());
    nlohmann::json m = base_manifest("grid", cfg);
    m["grid"] = {{"file", "grid.png"}, {"rows", rows},           {"columns", names},
                 {"tile", {th, tw}},  {"caption", caption}, {"scenes", scene_names}};
    write_manifest(cfg.output, m);
    return m;
}

}  // namespace restorekit
