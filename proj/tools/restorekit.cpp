#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "restorekit/errors.hpp"
#include "restorekit/pipeline.hpp"

using namespace restorekit;

namespace {

enum Exit { kOk = 0, kUsage = 2, kIo = 3, kConfig = 4 };

struct Flags {
    std::string input, output, config, tasks, sigma, psf, recipe, reference, weights;
    std::uint64_t seed = 0;
    int workers = 1;
    int size = 64;
    int timestep = 0;
    bool random_blur = false;
    std::vector<std::string> methods;
};

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--input,-i", f.input, "input directory (schedule: task graph JSON)");
    sub->add_option("--output,-o", f.output, "output directory");
    sub->add_option("--config,-c", f.config, "JSON config file; flags override its keys");
    sub->add_option("--seed", f.seed, "run seed");
    sub->add_option("--workers,-j", f.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tasks", f.tasks, "comma list of haze,blur,dark,noise");
    sub->add_option("--psf", f.psf, "PSF as JSON kernel or 1-channel image");
    sub->add_option("--reference", f.reference, "ground-truth directory");
}

PipelineConfig build_config(CLI::App* sub, const Flags& f) {
    PipelineConfig cfg;
    auto given = [&](const char* name) {
        const auto* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (given("--config")) {
        std::ifstream in(f.config);
        if (!in) throw IoError("cannot open config " + f.config);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(f.config + ": " + e.what());
        }
        apply_pipeline_config(cfg, j, fs::path(f.config).parent_path());
    }
    if (given("--input")) cfg.input = f.input;
    if (given("--output")) cfg.output = f.output;
    if (given("--seed")) cfg.seed = f.seed;
    if (given("--workers")) cfg.workers = f.workers;
    if (given("--tasks")) cfg.tasks = parse_task_list(f.tasks);
    if (given("--reference")) cfg.reference = f.reference;
    if (given("--psf")) {
        if (!fs::exists(f.psf)) throw IoError("PSF file " + f.psf + " does not exist");
        cfg.psf = load_psf(f.psf);
        cfg.psf_source = f.psf;
    }
    if (given("--recipe")) {
        if (!fs::exists(f.recipe)) throw IoError("recipe file " + f.recipe + " does not exist");
        cfg.recipe = load_recipe(f.recipe);
        cfg.recipe_source = f.recipe;
    }
    if (given("--sigma")) {
        if (f.sigma == "random") {
            cfg.sigma_random = true;
            cfg.sigma.reset();
        } else {
            try {
                std::size_t used = 0;
                cfg.sigma = std::stod(f.sigma, &used);
                if (used != f.sigma.size()) throw std::invalid_argument(f.sigma);
            } catch (const std::logic_error&) {
                throw UsageError("--sigma takes a number or 'random'");
            }
            cfg.sigma_random = false;
        }
    }
    if (given("--random-blur")) cfg.random_blur = f.random_blur;
    if (given("--size")) cfg.control_size = f.size;
    if (given("--timestep")) cfg.timestep = f.timestep;
    if (given("--weights")) cfg.weights = f.weights;
    if (given("--method")) {
        cfg.methods.clear();
        for (const auto& m : f.methods) {
            const auto eq = m.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--method takes name=dir, got '" + m + "'");
            cfg.methods.emplace_back(m.substr(0, eq), m.substr(eq + 1));
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"restorekit: degradation synthesis, restoration cues and evaluation"};
    app.require_subcommand(1);
    Flags f;

    std::map<std::string, std::function<nlohmann::json(const PipelineConfig&)>> runners{
        {"degrade", run_degrade},   {"cues", run_cues},         {"restore", run_restore_classical},
        {"control-forward", run_control_forward}, {"schedule", run_schedule}, {"evaluate", run_evaluate},
        {"grid", run_grid},
    };

    auto* degrade = app.add_subcommand("degrade", "synthesize degraded images");
    auto* cues = app.add_subcommand("cues", "extract restoration cues");
    auto* restore = app.add_subcommand("restore", "classical restoration from primary cues");
    auto* control = app.add_subcommand("control-forward", "toy control stack forward pass statistics");
    auto* schedule = app.add_subcommand("schedule", "curriculum schedule for a task graph");
    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM against references");
    auto* grid = app.add_subcommand("grid", "side-by-side comparison grid");
    for (auto* sub : {degrade, cues, restore, control, schedule, evaluate, grid}) add_common(sub, f);

    degrade->add_option("--sigma", f.sigma, "Gaussian noise sigma, or 'random' for [0.02, 0.30]");
    degrade->add_option("--recipe", f.recipe, "recipe file (key=value text or JSON)");
    degrade->add_flag("--random-blur", f.random_blur, "random Gaussian or motion blur per image");
    control->add_option("--size", f.size, "square working resolution")->check(CLI::PositiveNumber);
    control->add_option("--timestep", f.timestep, "diffusion timestep");
    control->add_option("--weights", f.weights, "weight archive stem (<stem>.bin + <stem>.json)");
    grid->add_option("--method", f.methods, "column as name=dir, repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const PipelineConfig cfg = build_config(sub, f);
            const nlohmann::json m = runners.at(sub->get_name())(cfg);
            std::cout << sub->get_name() << ": wrote " << (cfg.output / "manifest.json").string() << " (config "
                      << m.value("config_hash", "") << ")\n";
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const FormatError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    }
    return kOk;
}
