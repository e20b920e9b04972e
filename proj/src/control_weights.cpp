#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "restorekit/control.hpp"
#include "restorekit/errors.hpp"
#include "restorekit/hash.hpp"
#include "restorekit/image_io.hpp"

namespace restorekit {

namespace {

std::size_t secondary_slots(TaskKind task) { return task == TaskKind::Blur ? 2 : 1; }

std::string tname(TaskKind t) { return std::string(task_name(t)); }

Tensor zeros(std::vector<int> shape) {
    Tensor t{std::move(shape), {}};
    t.values.assign(t.count(), 0.0);
    return t;
}

Tensor filled(std::vector<int> shape, double v) {
    Tensor t = zeros(std::move(shape));
    std::fill(t.values.begin(), t.values.end(), v);
    return t;
}

/// rows x cols matrix with orthonormal rows (rows <= cols) or columns.
std::vector<double> orthogonal(int rows, int cols, std::mt19937_64& rng) {
    const int n = std::max(rows, cols);
    const int m = std::min(rows, cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<double>> basis;
    basis.reserve(m);
    while (static_cast<int>(basis.size()) < m) {
        std::vector<double> v(n);
        for (double& e : v) e = normal(rng);
        for (const auto& b : basis) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += v[i] * b[i];
            for (int i = 0; i < n; ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double e : v) norm += e * e;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;
        for (double& e : v) e /= norm;
        basis.push_back(std::move(v));
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            out[static_cast<std::size_t>(r) * cols + c] = rows <= cols ? basis[r][c] : basis[c][r];
        }
    }
    return out;
}

Tensor orthogonal_tensor(std::vector<int> shape, std::mt19937_64& rng) {
    Tensor t{std::move(shape), {}};
    const int rows = t.shape[0];
    const int cols = static_cast<int>(t.count() / rows);
    t.values = orthogonal(rows, cols, rng);
    return t;
}

}  // namespace

int ControlConfig::terminal_level(TaskKind task, int rank) const {
    const auto it = terminal_levels.find(task);
    if (it != terminal_levels.end() && rank >= 1 && rank <= static_cast<int>(it->second.size())) {
        return it->second[rank - 1];
    }
    return rank;
}

void ControlConfig::validate() const {
    if (levels < 1) throw ConfigError("control config: levels must be >= 1");
    if (static_cast<int>(widths.size()) != levels + 1) {
        throw ConfigError("control config: need " + std::to_string(levels + 1) + " widths");
    }
    for (int wd : widths) {
        if (wd < 2 || wd % 2 != 0) throw ConfigError("control config: widths must be even and >= 2");
    }
    if (groups < 1) throw ConfigError("control config: groups must be >= 1");
    for (const auto& [task, lv] : terminal_levels) {
        if (lv.size() > secondary_slots(task)) {
            throw ConfigError("control config: too many secondary levels for " + tname(task));
        }
        for (int l : lv) {
            if (l < 1 || l > levels) {
                throw ConfigError("control config: secondary terminal level " + std::to_string(l) + " for " +
                                  tname(task) + " is outside 1.." + std::to_string(levels));
            }
        }
    }
}

nlohmann::json control_config_to_json(const ControlConfig& cfg) {
    nlohmann::json term = nlohmann::json::object();
    for (const auto& [task, lv] : cfg.terminal_levels) term[tname(task)] = lv;
    return {{"levels", cfg.levels}, {"widths", cfg.widths}, {"groups", cfg.groups}, {"terminal_levels", term}};
}

ControlConfig control_config_from_json(const nlohmann::json& j) {
    ControlConfig cfg;
    try {
        cfg.levels = j.value("levels", cfg.levels);
        if (j.contains("widths")) {
            cfg.widths = j["widths"].get<std::vector<int>>();
        } else if (cfg.levels != 4) {
            cfg.widths.clear();
            for (int l = 0; l <= cfg.levels; ++l) cfg.widths.push_back(16 << l);
        }
        cfg.groups = j.value("groups", cfg.groups);
        if (j.contains("terminal_levels")) {
            for (const auto& [name, lv] : j["terminal_levels"].items()) {
                cfg.terminal_levels[parse_task(name)] = lv.get<std::vector<int>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid control config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

const Tensor& BlockWeights::get(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("block weights have no tensor '" + name + "'");
    return it->second;
}

Tensor& BlockWeights::get(const std::string& name) {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ConfigError("block weights have no tensor '" + name + "'");
    return it->second;
}

bool operator==(const Tensor& a, const Tensor& b) { return a.shape == b.shape && a.values == b.values; }

bool BlockWeights::operator==(const BlockWeights& o) const {
    return init.seed == o.init.seed && init.scheme == o.init.scheme && tensors_ == o.tensors_;
}

BlockWeights init_weights(const ControlConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    BlockWeights w;
    w.init.seed = seed;
    std::mt19937_64 rng(seed);
    const int L = cfg.levels;
    const int mw = cfg.mlcn_width();

    for (TaskKind task : kAllTasks) {
        const std::string t = "mlcn." + tname(task);
        for (int j = 1; j <= L; ++j) {
            const int cin = j == 1 ? 3 : mw;
            const std::string p = t + ".b0.l" + std::to_string(j);
            w.set(p + ".conv.w", orthogonal_tensor({2 * mw, cin, 3, 3}, rng));
            w.set(p + ".conv.b", zeros({2 * mw}));
            w.set(p + ".ca.w", orthogonal_tensor({mw, mw}, rng));
            w.set(p + ".ca.b", filled({mw}, 1.0));
        }
        for (int rank = 1; rank <= static_cast<int>(secondary_slots(task)); ++rank) {
            for (int j = 1; j <= cfg.terminal_level(task, rank); ++j) {
                const int cin = j == 1 ? 3 : mw;
                const std::string p = t + ".b" + std::to_string(rank) + ".l" + std::to_string(j);
                w.set(p + ".conv.w", orthogonal_tensor({mw, cin, 3, 3}, rng));
                w.set(p + ".conv.b", zeros({mw}));
                w.set(p + ".res1.w", orthogonal_tensor({mw, mw, 3, 3}, rng));
                w.set(p + ".res1.b", zeros({mw}));
                w.set(p + ".res2.w", orthogonal_tensor({mw, mw, 3, 3}, rng));
                w.set(p + ".res2.b", zeros({mw}));
            }
        }
    }

    for (int j = 0; j < L; ++j) {
        const int c = cfg.widths[j];
        const int half = c / 2;
        const int next = cfg.widths[j + 1];
        const std::string l = ".l" + std::to_string(j);
        w.set("tsu" + l + ".gn.g", filled({c}, 1.0));
        w.set("tsu" + l + ".gn.b", zeros({c}));
        w.set("tsu" + l + ".down.w", orthogonal_tensor({half, c, 3, 3}, rng));
        w.set("tsu" + l + ".down.b", zeros({half}));
        w.set("tsu" + l + ".ca.w", orthogonal_tensor({half, half}, rng));
        w.set("tsu" + l + ".ca.b", filled({half}, 1.0));
        w.set("tsu" + l + ".up.w", zeros({c, half, 1, 1}));
        w.set("tsu" + l + ".up.b", zeros({c}));

        for (TaskKind task : kAllTasks) {
            const std::string p = "task." + tname(task) + l;
            w.set(p + ".gn.g", filled({c}, 1.0));
            w.set(p + ".gn.b", zeros({c}));
            w.set(p + ".dw.w", orthogonal_tensor({c, 1, 3, 3}, rng));
            w.set(p + ".dw.b", zeros({c}));
            w.set(p + ".pw.w", zeros({c, c, 1, 1}));
            w.set(p + ".pw.b", zeros({c}));
        }

        w.set("enc" + l + ".conv.w", orthogonal_tensor({next, c, 3, 3}, rng));
        w.set("enc" + l + ".conv.b", zeros({next}));
        w.set("enc" + l + ".emb.w", orthogonal_tensor({next, kEmbeddingDim}, rng));
        w.set("enc" + l + ".emb.b", zeros({next}));
        w.set("enc" + l + ".time.w", orthogonal_tensor({next, kTimeDim}, rng));
        w.set("enc" + l + ".time.b", zeros({next}));
    }

    for (int j = 0; j <= L; ++j) {
        const int c = cfg.widths[j];
        const std::string l = ".l" + std::to_string(j);
        w.set("mod" + l + ".affine.w", orthogonal_tensor({c, kEmbeddingDim}, rng));
        w.set("mod" + l + ".affine.b", filled({c}, 1.0));
        w.set("mod" + l + ".w", orthogonal_tensor({c, c, 3, 3}, rng));
    }
    return w;
}

void save_weights(const BlockWeights& w, const std::filesystem::path& stem) {
    std::vector<unsigned char> bytes;
    nlohmann::json entries = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& [name, t] : w.tensors()) {
        entries.push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
        for (double v : t.values) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
            for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
        }
        offset += t.values.size();
    }
    const nlohmann::json manifest = {{"format", "float64-le"},
                                     {"init", {{"seed", w.init.seed}, {"scheme", w.init.scheme}}},
                                     {"tensors", entries}};
    auto with_ext = [&](const char* ext) { return std::filesystem::path(stem.string() + ext); };
    write_file_atomic(with_ext(".bin"), bytes);
    write_file_atomic(with_ext(".json"), manifest.dump(2) + "\n");
}

BlockWeights load_weights(const std::filesystem::path& stem) {
    const std::filesystem::path bin(stem.string() + ".bin");
    const std::filesystem::path js(stem.string() + ".json");
    std::ifstream mf(js);
    if (!mf) throw IoError("cannot open " + js.string());
    std::ifstream bf(bin, std::ios::binary);
    if (!bf) throw IoError("cannot open " + bin.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bf)), std::istreambuf_iterator<char>());
    BlockWeights w;
    try {
        nlohmann::json manifest;
        mf >> manifest;
        w.init.seed = manifest.at("init").at("seed").get<std::uint64_t>();
        w.init.scheme = manifest.at("init").at("scheme").get<std::string>();
        for (const auto& e : manifest.at("tensors")) {
            Tensor t;
            t.shape = e.at("shape").get<std::vector<int>>();
            const std::size_t offset = e.at("offset").get<std::size_t>();
            const std::size_t count = e.at("count").get<std::size_t>();
            if (count != t.count() || (offset + count) * 8 > bytes.size()) {
                throw FormatError("weight archive entry '" + e.at("name").get<std::string>() + "' is inconsistent");
            }
            t.values.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                std::uint64_t bits = 0;
                for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[(offset + i) * 8 + b]) << (8 * b);
                t.values[i] = std::bit_cast<double>(bits);
            }
            w.set(e.at("name").get<std::string>(), std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weight manifest: ") + e.what());
    }
    return w;
}

std::vector<double> pseudo_embedding(const std::string& key) {
    std::mt19937_64 rng(fnv1a(key));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(kEmbeddingDim);
    double norm = 0.0;
    for (double& e : v) {
        e = normal(rng);
        norm += e * e;
    }
    norm = std::sqrt(norm);
    for (double& e : v) e /= norm;
    return v;
}

std::vector<double> task_embedding(TaskKind task) { return pseudo_embedding("task:" + tname(task)); }

std::vector<double> image_embedding(const Image& img) {
    std::uint64_t h = fnv1a(std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
                            std::to_string(img.channels()));
    for (double v : img.data()) {
        const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
        const char b[2] = {static_cast<char>(q & 0xff), static_cast<char>(q >> 8)};
        h = fnv1a(std::string_view(b, 2), h);
    }
    return pseudo_embedding("image:" + hex64(h));
}

std::vector<double> timestep_encoding(int t, int dim) {
    if (t < 0) throw DomainError("timestep must be >= 0");
    const int half = dim / 2;
    std::vector<double> out(dim, 0.0);
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        out[i] = std::sin(t * freq);
        out[i + half] = std::cos(t * freq);
    }
    return out;
}

}  // namespace restorekit
