#include <future>
#include <numeric>

#include "restorekit/control.hpp"
#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

std::string tname(TaskKind t) { return std::string(task_name(t)); }

int gn_groups(const ControlConfig& cfg, int channels) { return std::gcd(cfg.groups, channels); }

FeatureMap primary_block(const FeatureMap& x, const BlockWeights& w, const std::string& p) {
    FeatureMap y = conv2d(x, w.get(p + ".conv.w"), &w.get(p + ".conv.b"));
    y = simple_gate(y);
    y = channel_attention(y, w.get(p + ".ca.w"), w.get(p + ".ca.b"));
    return downsample2(y);
}

FeatureMap secondary_block(const FeatureMap& x, const BlockWeights& w, const std::string& p) {
    const FeatureMap y = conv2d(x, w.get(p + ".conv.w"), &w.get(p + ".conv.b"));
    FeatureMap r = silu(conv2d(y, w.get(p + ".res1.w"), &w.get(p + ".res1.b")));
    r = conv2d(r, w.get(p + ".res2.w"), &w.get(p + ".res2.b"));
    return downsample2(add(y, r));
}

FeatureMap with_level(FeatureMap f, int level) {
    f.level = level;
    return f;
}

std::vector<double> affine(const Tensor& weight, const Tensor& bias, const std::vector<double>& v) {
    const int rows = weight.shape[0];
    const int cols = weight.shape[1];
    if (static_cast<int>(v.size()) != cols) throw ConfigError("embedding has the wrong dimension");
    std::vector<double> out(bias.values);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) out[r] += weight.values[static_cast<std::size_t>(r) * cols + c] * v[c];
    }
    return out;
}

}  // namespace

FeatureMap mlcn_forward(const TaskCues& cues, TaskKind task, const BlockWeights& w, const ControlConfig& cfg,
                        std::vector<FeatureMap>* trace) {
    cfg.validate();
    const int L = cfg.levels;
    const std::string base = "mlcn." + tname(task);
    const int ns = static_cast<int>(cues.secondaries.size());
    std::vector<int> terminal(ns);
    for (int r = 1; r <= ns; ++r) {
        terminal[r - 1] = cfg.terminal_level(task, r);
        if (terminal[r - 1] < 1 || terminal[r - 1] > L) {
            throw ConfigError("secondary " + std::to_string(r) + " of " + tname(task) + " ends at level " +
                              std::to_string(terminal[r - 1]) + ", beyond " + std::to_string(L));
        }
    }
    for (const Image& s : cues.secondaries) {
        if (!s.same_extent(cues.primary)) throw DomainError("mlcn_forward: cue extents differ");
    }

    FeatureMap x = to_feature_map(cues.primary);
    std::vector<FeatureMap> xs;
    for (const Image& s : cues.secondaries) xs.push_back(to_feature_map(s));
    if (trace) trace->clear();

    for (int j = 1; j <= L; ++j) {
        const std::string lv = ".l" + std::to_string(j);
        FeatureMap next = primary_block(x, w, base + ".b0" + lv);
        std::optional<FeatureMap> merged;
        for (int r = 1; r <= ns; ++r) {
            if (terminal[r - 1] < j) continue;
            xs[r - 1] = secondary_block(xs[r - 1], w, base + ".b" + std::to_string(r) + lv);
            if (terminal[r - 1] == j) merged = merged ? add(*merged, xs[r - 1]) : xs[r - 1];
        }
        if (merged) next = add(next, *merged);
        x = std::move(next);
        if (trace) trace->push_back(x);
    }
    return with_level(std::move(x), 0);
}

FeatureMap tsu(const std::vector<FeatureMap>& controls, int j, const BlockWeights& w, const ControlConfig& cfg) {
    if (controls.empty()) throw DomainError("tsu: no task controls");
    for (const auto& c : controls) {
        if (!c.same_shape(controls.front())) throw DomainError("tsu: task controls differ in shape");
    }
    FeatureMap avg = controls.front();
    for (std::size_t k = 1; k < controls.size(); ++k) {
        for (std::size_t i = 0; i < avg.data.size(); ++i) avg.data[i] += controls[k].data[i];
    }
    if (controls.size() > 1) {
        const double n = static_cast<double>(controls.size());
        for (double& v : avg.data) v /= n;
    }
    const std::string p = "tsu.l" + std::to_string(j);
    FeatureMap y = group_norm(avg, gn_groups(cfg, avg.channels), w.get(p + ".gn.g"), w.get(p + ".gn.b"));
    y = conv2d(y, w.get(p + ".down.w"), &w.get(p + ".down.b"));
    y = channel_attention(y, w.get(p + ".ca.w"), w.get(p + ".ca.b"));
    return conv2d(y, w.get(p + ".up.w"), &w.get(p + ".up.b"));
}

FeatureMap task_block(const FeatureMap& c, TaskKind task, int j, const BlockWeights& w, const ControlConfig& cfg) {
    const std::string p = "task." + tname(task) + ".l" + std::to_string(j);
    FeatureMap y = group_norm(c, gn_groups(cfg, c.channels), w.get(p + ".gn.g"), w.get(p + ".gn.b"));
    y = silu(std::move(y));
    y = depthwise_conv2d(y, w.get(p + ".dw.w"), &w.get(p + ".dw.b"));
    return conv2d(y, w.get(p + ".pw.w"), &w.get(p + ".pw.b"));
}

FeatureMap control_encoder(const FeatureMap& c, const std::vector<double>& image_emb, int timestep, int j,
                           const BlockWeights& w, const ControlConfig&) {
    const std::string p = "enc.l" + std::to_string(j);
    FeatureMap y = conv2d(c, w.get(p + ".conv.w"), &w.get(p + ".conv.b"));
    const auto e = affine(w.get(p + ".emb.w"), w.get(p + ".emb.b"), image_emb);
    const auto t = affine(w.get(p + ".time.w"), w.get(p + ".time.b"), timestep_encoding(timestep));
    for (int ch = 0; ch < y.channels; ++ch) {
        const double off = e[ch] + t[ch];
        for (std::size_t i = 0; i < y.plane(); ++i) y.data[ch * y.plane() + i] += off;
    }
    return downsample2(silu(std::move(y)));
}

FeatureMap mod_conv_with_style(const FeatureMap& x, const std::vector<double>& style, const Tensor& weight, double eps) {
    if (weight.shape.size() != 4) throw DomainError("mod_conv: weight must be (Cout, Cin, k, k)");
    const int cout = weight.shape[0];
    const int cin = weight.shape[1];
    if (static_cast<int>(style.size()) != cin) throw DomainError("mod_conv: style length must equal input channels");
    const std::size_t taps = static_cast<std::size_t>(weight.shape[2]) * weight.shape[3];
    Tensor mod = weight;
    for (int o = 0; o < cout; ++o) {
        double ss = 0.0;
        for (int i = 0; i < cin; ++i) {
            for (std::size_t k = 0; k < taps; ++k) {
                double& v = mod.values[(static_cast<std::size_t>(o) * cin + i) * taps + k];
                v *= style[i];
                ss += v * v;
            }
        }
        const double demod = 1.0 / std::sqrt(ss + eps);
        for (std::size_t k = 0; k < cin * taps; ++k) mod.values[o * cin * taps + k] *= demod;
    }
    return conv2d(x, mod);
}

std::vector<double> modulation_style(const std::vector<double>& task_emb, int j, const BlockWeights& w) {
    const std::string p = "mod.l" + std::to_string(j);
    return affine(w.get(p + ".affine.w"), w.get(p + ".affine.b"), task_emb);
}

FeatureMap mod_conv(const FeatureMap& x, const std::vector<double>& task_emb, int j, const BlockWeights& w) {
    return mod_conv_with_style(x, modulation_style(task_emb, j, w), w.get("mod.l" + std::to_string(j) + ".w"));
}

int ControlStack::top_level() const {
    if (tasks.empty()) return -1;
    return static_cast<int>(controls.at(tasks.front()).size()) - 1;
}

ControlStack make_stack(const std::map<TaskKind, FeatureMap>& level0, const std::optional<std::vector<double>>& image_emb,
                        int timestep) {
    if (level0.empty()) throw ConfigError("control stack needs at least one task");
    if (timestep < 0) throw DomainError("timestep must be >= 0");
    ControlStack s;
    for (const auto& [task, f] : level0) {
        if (!f.same_shape(level0.begin()->second)) throw DomainError("level-0 controls differ in shape");
        s.tasks.push_back(task);
        s.controls[task] = {with_level(f, 0)};
        s.task_embeddings[task] = task_embedding(task);
        s.switches[task] = true;
    }
    s.image_embedding = image_emb;
    s.timestep = timestep;
    return s;
}

void control_step(ControlStack& stack, int j, const BlockWeights& w, const ControlConfig& cfg, bool parallel) {
    if (j < 0 || j >= cfg.levels) throw ConfigError("control_step: level " + std::to_string(j) + " out of range");
    if (!stack.image_embedding) throw ConfigError("control_step: image embedding missing");
    if (static_cast<int>(stack.image_embedding->size()) != kEmbeddingDim) {
        throw ConfigError("control_step: image embedding must have 768 entries");
    }
    std::vector<FeatureMap> level;
    for (TaskKind t : stack.tasks) {
        const auto it = stack.controls.find(t);
        if (it == stack.controls.end() || static_cast<int>(it->second.size()) != j + 1) {
            throw ConfigError("control_step: level " + std::to_string(j) + " missing for " + tname(t));
        }
        level.push_back(it->second[j]);
    }
    const FeatureMap stab = tsu(level, j, w, cfg);

    auto one = [&](std::size_t k) {
        const FeatureMap tb = task_block(level[k], stack.tasks[k], j, w, cfg);
        FeatureMap c = level[k];
        for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += stab.data[i] + tb.data[i];
        FeatureMap next = with_level(control_encoder(c, *stack.image_embedding, stack.timestep, j, w, cfg), j + 1);
        return std::pair{std::move(c), std::move(next)};
    };
    std::vector<std::pair<FeatureMap, FeatureMap>> results(stack.tasks.size());
    if (parallel && stack.tasks.size() > 1) {
        std::vector<std::future<std::pair<FeatureMap, FeatureMap>>> jobs;
        for (std::size_t k = 0; k < stack.tasks.size(); ++k) jobs.push_back(std::async(std::launch::async, one, k));
        for (std::size_t k = 0; k < jobs.size(); ++k) results[k] = jobs[k].get();
    } else {
        for (std::size_t k = 0; k < stack.tasks.size(); ++k) results[k] = one(k);
    }
    for (std::size_t k = 0; k < stack.tasks.size(); ++k) {
        auto& stepped = stack.stepped[stack.tasks[k]];
        stepped.resize(j + 1);
        stepped[j] = std::move(results[k].first);
        stack.controls[stack.tasks[k]].push_back(std::move(results[k].second));
    }
}

FeatureMap moe_gate(const FeatureMap& m) {
    std::vector<double> spatial(m.channels, 0.0);
    std::vector<double> across(m.plane(), 0.0);
    for (int c = 0; c < m.channels; ++c) {
        for (std::size_t i = 0; i < m.plane(); ++i) {
            const double v = m.data[c * m.plane() + i];
            spatial[c] += v;
            across[i] += v;
        }
    }
    FeatureMap g(m.level, m.channels, m.height, m.width);
    for (int c = 0; c < m.channels; ++c) {
        const double s = spatial[c] / static_cast<double>(m.plane());
        for (std::size_t i = 0; i < m.plane(); ++i) g.data[c * m.plane() + i] = s * across[i] / m.channels;
    }
    return g;
}

MoeResult moe_adapter(const ControlStack& stack, int j, const BlockWeights& w) {
    if (stack.tasks.empty()) throw ConfigError("moe_adapter: empty control stack");
    const FeatureMap& shape = stack.controls.at(stack.tasks.front()).at(j);
    MoeResult res{FeatureMap(j, shape.channels, shape.height, shape.width), true};
    for (TaskKind t : stack.tasks) {
        const auto sw = stack.switches.find(t);
        if (sw == stack.switches.end() || !sw->second) continue;
        const auto emb = stack.task_embeddings.find(t);
        if (emb == stack.task_embeddings.end()) throw ConfigError("moe_adapter: no embedding for " + tname(t));
        const FeatureMap& c = stack.controls.at(t).at(j);
        const FeatureMap gate = moe_gate(mod_conv(c, emb->second, j, w));
        for (std::size_t i = 0; i < c.data.size(); ++i) res.value.data[i] += gate.data[i] * c.data[i];
        res.no_active_tasks = false;
    }
    return res;
}

ControlRun run_control(const CueSet& cues, const std::vector<TaskKind>& tasks, const Image& source, int timestep,
                       const BlockWeights& w, const ControlConfig& cfg, bool parallel) {
    if (tasks.empty()) throw ConfigError("run_control: no tasks");
    std::map<TaskKind, FeatureMap> level0;
    if (parallel && tasks.size() > 1) {
        std::vector<std::future<FeatureMap>> jobs;
        for (TaskKind t : tasks) {
            jobs.push_back(std::async(std::launch::async, [&, t] { return mlcn_forward(cues.at(t), t, w, cfg); }));
        }
        for (std::size_t k = 0; k < tasks.size(); ++k) level0[tasks[k]] = jobs[k].get();
    } else {
        for (TaskKind t : tasks) level0[t] = mlcn_forward(cues.at(t), t, w, cfg);
    }
    ControlRun run{make_stack(level0, image_embedding(source), timestep), {}};
    for (int j = 0; j < cfg.levels; ++j) control_step(run.stack, j, w, cfg, parallel);
    for (int j = 0; j <= cfg.levels; ++j) run.moe.push_back(moe_adapter(run.stack, j, w));
    return run;
}

nlohmann::json control_run_stats(const ControlRun& run) {
    nlohmann::json levels = nlohmann::json::array();
    for (int j = 0; j <= run.stack.top_level(); ++j) {
        nlohmann::json tasks = nlohmann::json::object();
        for (TaskKind t : run.stack.tasks) {
            nlohmann::json entry = {{"C", feature_stats(run.stack.controls.at(t)[j])}};
            const auto it = run.stack.stepped.find(t);
            if (it != run.stack.stepped.end() && j < static_cast<int>(it->second.size())) {
                entry["c"] = feature_stats(it->second[j]);
            }
            tasks[tname(t)] = entry;
        }
        nlohmann::json lv = {{"level", j}, {"tasks", tasks}};
        if (j < static_cast<int>(run.moe.size())) {
            lv["moe"] = feature_stats(run.moe[j].value);
            lv["moe_no_active_tasks"] = run.moe[j].no_active_tasks;
        }
        levels.push_back(lv);
    }
    return {{"timestep", run.stack.timestep}, {"levels", levels}};
}

}  // namespace restorekit
