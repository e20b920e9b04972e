#include "restorekit/curriculum.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>
#include <iomanip>

#include "restorekit/errors.hpp"

namespace restorekit {

namespace {

std::map<std::string, std::size_t> index_nodes(const std::vector<TaskNode>& nodes) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id.empty()) throw GraphError("task with an empty id");
        if (!index.emplace(nodes[i].id, i).second) throw GraphError("duplicate task id '" + nodes[i].id + "'");
    }
    for (const auto& n : nodes) {
        for (const auto& p : n.parents) {
            if (p == n.id) throw GraphError("task '" + n.id + "' lists itself as a parent");
            if (!index.count(p)) throw GraphError("task '" + n.id + "' has unknown parent '" + p + "'");
        }
    }
    return index;
}

}  // namespace

std::vector<int> task_levels(const std::vector<TaskNode>& nodes) {
    const auto index = index_nodes(nodes);
    enum class Mark { New, Active, Done };
    std::vector<Mark> mark(nodes.size(), Mark::New);
    std::vector<int> level(nodes.size(), 0);
    std::function<void(std::size_t)> visit = [&](std::size_t i) {
        mark[i] = Mark::Active;
        for (const auto& p : nodes[i].parents) {
            const std::size_t k = index.at(p);
            if (mark[k] == Mark::Active) throw GraphError("cycle in task graph through '" + nodes[k].id + "'");
            if (mark[k] == Mark::New) visit(k);
            level[i] = std::max(level[i], level[k] + 1);
        }
        mark[i] = Mark::Done;
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (mark[i] == Mark::New) visit(i);
    }
    return level;
}

Schedule build_schedule(const std::vector<TaskNode>& nodes) {
    const auto level = task_levels(nodes);
    Schedule s;
    s.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) s.push_back({level[i], nodes[i].id, nodes[i].size});
    std::sort(s.begin(), s.end(), [](const ScheduleEntry& a, const ScheduleEntry& b) {
        if (a.level != b.level) return a.level < b.level;
        if (a.size != b.size) return a.size > b.size;
        return a.id < b.id;
    });
    return s;
}

bool validate_schedule(const std::vector<TaskNode>& nodes, const Schedule& schedule) {
    const auto index = index_nodes(nodes);
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& e = schedule[i];
        if (!index.count(e.id)) throw ValidationError("schedule lists unknown task '" + e.id + "'");
        if (!position.emplace(e.id, i).second) throw ValidationError("schedule lists '" + e.id + "' twice");
    }
    if (position.size() != nodes.size()) {
        for (const auto& n : nodes) {
            if (!position.count(n.id)) throw ValidationError("schedule misses task '" + n.id + "'");
        }
    }
    const auto level = task_levels(nodes);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& e = schedule[i];
        const std::size_t k = index.at(e.id);
        if (e.level != level[k] || e.size != nodes[k].size) return false;
        for (const auto& p : nodes[k].parents) {
            if (position.at(p) > i) return false;
        }
        if (i > 0) {
            const auto& prev = schedule[i - 1];
            if (prev.level > e.level) return false;
            if (prev.level == e.level && prev.size < e.size) return false;
        }
    }
    return true;
}

std::vector<TaskNode> task_graph_from_json(const nlohmann::json& j) {
    const nlohmann::json& arr = j.is_object() && j.contains("tasks") ? j.at("tasks") : j;
    if (!arr.is_array()) throw ConfigError("task graph must be an array of {id, parents, size}");
    std::vector<TaskNode> nodes;
    try {
        for (const auto& e : arr) {
            TaskNode n;
            n.id = e.at("id").get<std::string>();
            n.parents = e.value("parents", std::vector<std::string>{});
            const auto size = e.at("size");
            if (!size.is_number_integer() || size.get<long long>() < 0) {
                throw ConfigError("task '" + n.id + "' needs a non-negative integer size");
            }
            n.size = size.get<std::uint64_t>();
            nodes.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid task graph: ") + e.what());
    }
    return nodes;
}

nlohmann::json task_graph_to_json(const std::vector<TaskNode>& nodes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& n : nodes) arr.push_back({{"id", n.id}, {"parents", n.parents}, {"size", n.size}});
    return arr;
}

nlohmann::json schedule_to_json(const Schedule& s) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        arr.push_back({{"position", i}, {"level", s[i].level}, {"id", s[i].id}, {"size", s[i].size}});
    }
    return {{"schedule", arr}};
}

std::string schedule_to_table(const Schedule& s) {
    std::size_t wid = 4;
    for (const auto& e : s) wid = std::max(wid, e.id.size());
    std::ostringstream os;
    os << std::left << std::setw(5) << "pos" << std::setw(7) << "level" << std::setw(static_cast<int>(wid) + 2)
       << "task" << "size\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << std::setw(5) << i << std::setw(7) << s[i].level << std::setw(static_cast<int>(wid) + 2) << s[i].id
           << s[i].size << "\n";
    }
    return os.str();
}

}  // namespace restorekit
