#include "restorekit/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "restorekit/errors.hpp"
#include "restorekit/filter.hpp"
#include "restorekit/image_io.hpp"

namespace restorekit {

namespace {

void check_transmission_value(double t) {
    if (!(t > 0.0 && t <= 1.0)) throw DomainError("haze transmission must lie in (0, 1], got " + std::to_string(t));
}

void check_airlight(const std::array<double, 3>& a) {
    for (double v : a) {
        if (!(v > 0.0 && v <= 1.0)) throw DomainError("atmospheric light must lie in (0, 1] per channel");
    }
}

void check_sigma(double sigma) {
    if (!(sigma >= 0.0 && sigma <= kMaxNoiseSigma)) {
        throw DomainError("noise sigma must lie in [0, 0.3], got " + std::to_string(sigma));
    }
}

double airlight_for(const std::array<double, 3>& a, int channels, int c) {
    // Gray images use the mean airlight.
    return channels == 3 ? a[c] : (a[0] + a[1] + a[2]) / 3.0;
}

const char* kind_name(BlurStage::Kind k) {
    switch (k) {
        case BlurStage::Kind::Gaussian: return "gaussian";
        case BlurStage::Kind::Motion: return "motion";
        case BlurStage::Kind::Box: return "box";
        case BlurStage::Kind::Custom: return "custom";
    }
    return "gaussian";
}

BlurStage::Kind kind_from_name(const std::string& s) {
    if (s == "gaussian") return BlurStage::Kind::Gaussian;
    if (s == "motion") return BlurStage::Kind::Motion;
    if (s == "box") return BlurStage::Kind::Box;
    if (s == "custom") return BlurStage::Kind::Custom;
    throw ConfigError("unknown blur kind '" + s + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(trim(item)));
        } catch (const std::exception&) {
            throw ConfigError("expected a number, got '" + item + "'");
        }
    }
    return out;
}

double parse_number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("recipe key '" + key + "' expects a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError("recipe key '" + key + "' expects a boolean, got '" + v + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Kernel2D BlurStage::kernel() const {
    switch (kind) {
        case Kind::Gaussian: return Kernel2D::gaussian(sigma);
        case Kind::Motion: return Kernel2D::motion(length, angle_deg);
        case Kind::Box: return Kernel2D::box(length);
        case Kind::Custom:
            if (!custom) throw ConfigError("custom blur stage has no kernel");
            return *custom;
    }
    throw ConfigError("invalid blur kind");
}

BlurStage BlurStage::from_kernel(Kernel2D k) {
    BlurStage b;
    b.kind = Kind::Custom;
    b.custom = std::move(k);
    return b;
}

void DegradationRecipe::validate() const {
    if (empty()) throw DomainError("degradation recipe has no stages");
    if (darken) {
        if (!(darken->gain > 0.0 && darken->gain <= 1.0)) throw DomainError("darken gain must lie in (0, 1]");
        if (!(darken->gamma >= 1.0)) throw DomainError("darken gamma must be >= 1");
    }
    if (blur) {
        const Kernel2D k = blur->kernel();
        if (!k.non_negative()) throw DomainError("blur PSF taps must be non-negative");
    }
    if (haze) {
        check_airlight(haze->airlight);
        if (const double* t = std::get_if<double>(&haze->transmission)) {
            check_transmission_value(*t);
        } else {
            for (double v : std::get<Image>(haze->transmission).data()) check_transmission_value(v);
        }
    }
    if (noise) check_sigma(noise->sigma);
}

Image apply_darken(const Image& img, double gain, double gamma) {
    if (!(gain > 0.0 && gain <= 1.0)) throw DomainError("darken gain must lie in (0, 1]");
    if (!(gamma >= 1.0)) throw DomainError("darken gamma must be >= 1");
    Image out = img;
    for (double& v : out.data()) {
        // Negative intensities have no real power; treat them as black.
        const double base = std::max(v, 0.0);
        v = std::clamp(gain * (gamma == 1.0 ? base : std::pow(base, gamma)), 0.0, 1.0);
    }
    return out;
}

Image apply_haze(const Image& img, const std::array<double, 3>& airlight, double t) {
    check_airlight(airlight);
    check_transmission_value(t);
    Image out = img;
    const int ch = img.channels();
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double a = airlight_for(airlight, ch, static_cast<int>(i % ch));
        d[i] = d[i] * t + a * (1.0 - t);
    }
    return out;
}

Image apply_haze(const Image& img, const std::array<double, 3>& airlight, const Image& t) {
    check_airlight(airlight);
    if (!t.same_extent(img) || t.channels() != 1) {
        throw DomainError("transmission map must be 1-channel with the image's extent");
    }
    for (double v : t.data()) check_transmission_value(v);
    Image out = img;
    const int ch = img.channels();
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double tv = t.at(y, x);
            for (int c = 0; c < ch; ++c) {
                out.at(y, x, c) = img.at(y, x, c) * tv + airlight_for(airlight, ch, c) * (1.0 - tv);
            }
        }
    }
    return out;
}

Image apply_noise(const Image& img, double sigma, bool poisson, std::uint64_t seed) {
    check_sigma(sigma);
    if (sigma == 0.0 && !poisson) return img;
    std::mt19937_64 rng(seed);
    Image out = img;
    if (poisson) {
        for (double& v : out.data()) {
            const double lambda = std::max(v, 0.0) * kPhotonsPerUnit;
            if (lambda > 0.0) {
                std::poisson_distribution<long> shot(lambda);
                v = static_cast<double>(shot(rng)) / kPhotonsPerUnit;
            } else {
                v = 0.0;
            }
        }
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, sigma);
        for (double& v : out.data()) v += gauss(rng);
    }
    for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

Image degrade(const Image& img, const DegradationRecipe& recipe) {
    recipe.validate();
    Image cur = img;
    if (recipe.darken) cur = apply_darken(cur, recipe.darken->gain, recipe.darken->gamma);
    if (recipe.blur) cur = convolve2d(cur, recipe.blur->kernel(), Boundary::Reflect);
    if (recipe.haze) {
        const auto& h = *recipe.haze;
        if (const double* t = std::get_if<double>(&h.transmission)) {
            cur = apply_haze(cur, h.airlight, *t);
        } else {
            cur = apply_haze(cur, h.airlight, std::get<Image>(h.transmission));
        }
    }
    if (recipe.noise) {
        cur = cur.clamped();
        cur = apply_noise(cur, recipe.noise->sigma, recipe.noise->poisson, recipe.noise->seed);
    }
    return cur;
}

BlurStage random_blur(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BlurStage b;
    if (u(rng) < 0.5) {
        b.kind = BlurStage::Kind::Gaussian;
        b.sigma = 1.0 + 3.0 * u(rng);
    } else {
        b.kind = BlurStage::Kind::Motion;
        b.length = 5 + static_cast<int>(std::floor(u(rng) * 17.0));
        b.length = std::min(b.length, 21);
        b.angle_deg = 180.0 * u(rng);
    }
    return b;
}

double random_noise_sigma(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.02, 0.30);
    return u(rng);
}

nlohmann::json kernel_to_json(const Kernel2D& k) {
    return {{"height", k.height()}, {"width", k.width()},
            {"taps", std::vector<double>(k.taps().begin(), k.taps().end())}};
}

Kernel2D kernel_from_json(const nlohmann::json& j) {
    try {
        return Kernel2D(j.at("height").get<int>(), j.at("width").get<int>(), j.at("taps").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid kernel JSON: ") + e.what());
    }
}

nlohmann::json recipe_to_json(const DegradationRecipe& r) {
    nlohmann::json j = nlohmann::json::object();
    if (r.darken) j["darken"] = {{"gain", r.darken->gain}, {"gamma", r.darken->gamma}};
    if (r.blur) {
        nlohmann::json b = {{"kind", kind_name(r.blur->kind)}};
        switch (r.blur->kind) {
            case BlurStage::Kind::Gaussian: b["sigma"] = r.blur->sigma; break;
            case BlurStage::Kind::Motion:
                b["length"] = r.blur->length;
                b["angle_deg"] = r.blur->angle_deg;
                break;
            case BlurStage::Kind::Box: b["length"] = r.blur->length; break;
            case BlurStage::Kind::Custom: b["kernel"] = kernel_to_json(r.blur->kernel()); break;
        }
        j["blur"] = b;
    }
    if (r.haze) {
        nlohmann::json h = {{"airlight", r.haze->airlight}};
        if (const double* t = std::get_if<double>(&r.haze->transmission)) {
            h["t"] = *t;
        } else {
            h["t_map"] = r.haze->transmission_path;
        }
        j["haze"] = h;
    }
    if (r.noise) j["noise"] = {{"sigma", r.noise->sigma}, {"poisson", r.noise->poisson}, {"seed", r.noise->seed}};
    return j;
}

DegradationRecipe recipe_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    DegradationRecipe r;
    try {
        if (j.contains("darken")) {
            const auto& d = j["darken"];
            r.darken = DarkenStage{d.value("gain", 1.0), d.value("gamma", 1.0)};
        }
        if (j.contains("blur")) {
            const auto& b = j["blur"];
            BlurStage s;
            s.kind = kind_from_name(b.value("kind", std::string("gaussian")));
            s.sigma = b.value("sigma", s.sigma);
            s.length = b.value("length", s.length);
            s.angle_deg = b.value("angle_deg", s.angle_deg);
            if (s.kind == BlurStage::Kind::Custom) s.custom = kernel_from_json(b.at("kernel"));
            r.blur = s;
        }
        if (j.contains("haze")) {
            const auto& h = j["haze"];
            HazeStage s;
            if (h.contains("airlight")) {
                const auto& a = h["airlight"];
                if (a.is_number()) {
                    s.airlight.fill(a.get<double>());
                } else {
                    s.airlight = a.get<std::array<double, 3>>();
                }
            }
            if (h.contains("t_map")) {
                s.transmission_path = h["t_map"].get<std::string>();
                s.transmission = to_gray(load_image(resolve(base_dir, s.transmission_path)));
            } else {
                s.transmission = h.value("t", 1.0);
            }
            r.haze = s;
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            r.noise = NoiseStage{n.value("sigma", 0.0), n.value("poisson", false), n.value("seed", std::uint64_t{0})};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid recipe JSON: ") + e.what());
    }
    return r;
}

std::string recipe_to_text(const DegradationRecipe& r) {
    std::ostringstream out;
    if (r.darken) {
        out << "darken.gain=" << format_double(r.darken->gain) << '\n';
        out << "darken.gamma=" << format_double(r.darken->gamma) << '\n';
    }
    if (r.blur) {
        out << "blur.kind=" << kind_name(r.blur->kind) << '\n';
        switch (r.blur->kind) {
            case BlurStage::Kind::Gaussian: out << "blur.sigma=" << format_double(r.blur->sigma) << '\n'; break;
            case BlurStage::Kind::Motion:
                out << "blur.length=" << r.blur->length << '\n';
                out << "blur.angle_deg=" << format_double(r.blur->angle_deg) << '\n';
                break;
            case BlurStage::Kind::Box: out << "blur.length=" << r.blur->length << '\n'; break;
            case BlurStage::Kind::Custom: {
                const Kernel2D k = r.blur->kernel();
                out << "blur.size=" << k.height() << 'x' << k.width() << '\n' << "blur.taps=";
                for (std::size_t i = 0; i < k.taps().size(); ++i) out << (i ? "," : "") << format_double(k.taps()[i]);
                out << '\n';
                break;
            }
        }
    }
    if (r.haze) {
        const auto& a = r.haze->airlight;
        out << "haze.airlight=" << format_double(a[0]) << ',' << format_double(a[1]) << ',' << format_double(a[2]) << '\n';
        if (const double* t = std::get_if<double>(&r.haze->transmission)) {
            out << "haze.t=" << format_double(*t) << '\n';
        } else {
            out << "haze.t_map=" << r.haze->transmission_path << '\n';
        }
    }
    if (r.noise) {
        out << "noise.sigma=" << format_double(r.noise->sigma) << '\n';
        out << "noise.poisson=" << (r.noise->poisson ? "true" : "false") << '\n';
        out << "noise.seed=" << r.noise->seed << '\n';
    }
    return out.str();
}

DegradationRecipe recipe_from_text(const std::string& text, const std::filesystem::path& base_dir) {
    DegradationRecipe r;
    std::vector<double> custom_taps;
    int custom_h = 0, custom_w = 0;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("recipe line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "darken.gain") {
            if (!r.darken) r.darken.emplace();
            r.darken->gain = parse_number(key, val);
        } else if (key == "darken.gamma") {
            if (!r.darken) r.darken.emplace();
            r.darken->gamma = parse_number(key, val);
        } else if (key.rfind("blur.", 0) == 0) {
            if (!r.blur) r.blur.emplace();
            if (key == "blur.kind") {
                r.blur->kind = kind_from_name(val);
            } else if (key == "blur.sigma") {
                r.blur->sigma = parse_number(key, val);
            } else if (key == "blur.length") {
                r.blur->length = static_cast<int>(parse_number(key, val));
            } else if (key == "blur.angle_deg") {
                r.blur->angle_deg = parse_number(key, val);
            } else if (key == "blur.size") {
                const auto x = val.find('x');
                if (x == std::string::npos) throw ConfigError("blur.size expects HxW");
                custom_h = static_cast<int>(parse_number(key, val.substr(0, x)));
                custom_w = static_cast<int>(parse_number(key, val.substr(x + 1)));
            } else if (key == "blur.taps") {
                custom_taps = parse_list(val);
            } else {
                throw ConfigError("unknown recipe key '" + key + "'");
            }
        } else if (key == "haze.airlight") {
            if (!r.haze) r.haze.emplace();
            const auto v = parse_list(val);
            if (v.size() == 1) {
                r.haze->airlight.fill(v[0]);
            } else if (v.size() == 3) {
                r.haze->airlight = {v[0], v[1], v[2]};
            } else {
                throw ConfigError("haze.airlight expects 1 or 3 values");
            }
        } else if (key == "haze.t") {
            if (!r.haze) r.haze.emplace();
            r.haze->transmission = parse_number(key, val);
        } else if (key == "haze.t_map") {
            if (!r.haze) r.haze.emplace();
            r.haze->transmission_path = val;
            r.haze->transmission = to_gray(load_image(resolve(base_dir, val)));
        } else if (key == "noise.sigma") {
            if (!r.noise) r.noise.emplace();
            r.noise->sigma = parse_number(key, val);
        } else if (key == "noise.poisson") {
            if (!r.noise) r.noise.emplace();
            r.noise->poisson = parse_bool(key, val);
        } else if (key == "noise.seed") {
            if (!r.noise) r.noise.emplace();
            try {
                r.noise->seed = std::stoull(val);
            } catch (const std::exception&) {
                throw ConfigError("noise.seed expects an unsigned integer");
            }
        } else {
            throw ConfigError("unknown recipe key '" + key + "'");
        }
    }
    if (r.blur && r.blur->kind == BlurStage::Kind::Custom) {
        r.blur->custom = Kernel2D(custom_h, custom_w, custom_taps);
    }
    return r;
}

DegradationRecipe load_recipe(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open recipe " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    if (std::filesystem::path(path).extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(ss.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("recipe JSON parse error: ") + e.what());
        }
        return recipe_from_json(j, base);
    }
    return recipe_from_text(ss.str(), base);
}

}  // namespace restorekit
