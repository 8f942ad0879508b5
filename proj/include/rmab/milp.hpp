#pragma once

#include "rmab/lp.hpp"

#include <span>
#include <vector>

namespace rmab::milp {

struct Options {
    lp::Options lp;
    double integrality_tol = 1e-6;
    long node_limit = 200'000;
};

struct Result {
    lp::Status status = lp::Status::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    long nodes = 0;
    /// True when the root relaxation was already integral.
    bool root_integral = false;
};

/// Depth-first branch and bound over the columns flagged in `integer`.
/// When `tie_break` is non-empty it is minimised among the optimal integer
/// solutions of the model objective. Hitting the node limit yields
/// Status::iteration_limit with the best incumbent found, if any.
Result solve(const lp::Model& model, const std::vector<bool>& integer,
             std::span<const double> tie_break = {}, const Options& options = {});

bool is_integral(std::span<const double> x, const std::vector<bool>& integer, double tol);

}  // namespace rmab::milp
