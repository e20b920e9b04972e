#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace restorekit {

struct TaskNode {
    std::string id;
    std::vector<std::string> parents;  ///< empty for single degradations
    std::uint64_t size = 0;            ///< dataset size
};

struct ScheduleEntry {
    int level = 0;
    std::string id;
    std::uint64_t size = 0;

    bool operator==(const ScheduleEntry&) const = default;
};

using Schedule = std::vector<ScheduleEntry>;

/// Longest-path depth per node, in input order. Throws GraphError on
/// unknown or duplicate ids, self-parenting and cycles.
std::vector<int> task_levels(const std::vector<TaskNode>& nodes);

/// Levels ascending; within a level larger datasets first, then id.
Schedule build_schedule(const std::vector<TaskNode>& nodes);

/// Throws ValidationError unless every node appears exactly once. Returns
/// false when a node precedes a parent, a level is wrong or out of order,
/// or sizes increase within a level.
bool validate_schedule(const std::vector<TaskNode>& nodes, const Schedule& schedule);

/// Accepts an array of `{id, parents, size}` or `{"tasks": [...]}`.
std::vector<TaskNode> task_graph_from_json(const nlohmann::json& j);
nlohmann::json task_graph_to_json(const std::vector<TaskNode>& nodes);

nlohmann::json schedule_to_json(const Schedule& s);
std::string schedule_to_table(const Schedule& s);

}  // namespace restorekit
