#pragma once

#include "rmab/arm_model.hpp"
#include "rmab/planner.hpp"
#include "rmab/simulate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rmab {

/// Windows keyed by position in `instance.arms`; rows name arms by arm_id.
using ArmWindows = std::vector<std::vector<ActionWindow>>;

void save_windows(const std::filesystem::path& path, const Instance& instance, const ArmWindows& windows);
ArmWindows load_windows(const std::filesystem::path& path, const Instance& instance);

/// Pull rows use 1-based timesteps. The trailer row reads
/// `objective,<value>,<status>`.
void save_plan(const std::filesystem::path& path, const Instance& instance, const LookaheadPlan& plan);
/// Rebuilds the action matrix for `num_steps` steps.
LookaheadPlan load_plan(const std::filesystem::path& path, const Instance& instance, int num_steps);

/// Reads a trace written by write_trace_csv; the reward is recomputed from
/// the beliefs.
SimulationTrace load_trace_csv(const std::filesystem::path& path);

struct IndexRow {
    int arm_id = 0;
    int state_id = 0;
    double belief = 0.0;
    /// Encoded arms only; -1 for plain belief chains.
    int timer = -1;
    int counter = -1;
    double index = 0.0;
};

void save_index_rows(const std::filesystem::path& path, const std::vector<IndexRow>& rows);
std::vector<IndexRow> load_index_rows(const std::filesystem::path& path);

}  // namespace rmab
