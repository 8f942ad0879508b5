#include "rmab/milp.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

namespace rmab::milp {

bool is_integral(std::span<const double> x, const std::vector<bool>& integer, double tol) {
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (integer[j] && std::abs(x[j] - std::round(x[j])) > tol) return false;
    }
    return true;
}

namespace {

struct Node {
    std::vector<double> lower;
    std::vector<double> upper;
};

struct Incumbent {
    double value = 0.0;
    std::vector<double> x;
};

void round_integers(std::vector<double>& x, const std::vector<bool>& integer) {
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (integer[j]) x[j] = std::round(x[j]);
    }
}

int most_fractional(const std::vector<double>& x, const std::vector<bool>& integer, double tol) {
    int best = -1;
    double best_gap = tol;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!integer[j]) continue;
        const double gap = std::abs(x[j] - std::round(x[j]));
        if (gap > best_gap + 1e-12) {
            best_gap = gap;
            best = static_cast<int>(j);
        }
    }
    return best;
}

// Plain DFS branch and bound on the model's own objective. `incumbent`
// seeds the pruning bound; returns false if the node limit was hit.
bool branch_and_bound(const lp::Model& model, const std::vector<bool>& integer, const Options& opt,
                      std::optional<Incumbent>& incumbent, long& nodes) {
    double scale = 1.0;
    for (double c : model.cost) scale = std::max(scale, std::abs(c));
    const double prune_tol = 1e-9 * scale;
    auto better = [&](double a, double b) { return model.maximize ? a > b + prune_tol : a < b - prune_tol; };

    std::vector<Node> stack;
    stack.push_back({model.lower, model.upper});
    while (!stack.empty()) {
        if (nodes >= opt.node_limit) return false;
        Node node = std::move(stack.back());
        stack.pop_back();
        ++nodes;
        const auto sol = lp::solve(model, node.lower, node.upper, opt.lp);
        if (sol.status == lp::Status::infeasible) continue;
        if (sol.status != lp::Status::optimal) {
            throw std::runtime_error(std::string("milp: node relaxation ended with status ") +
                                     lp::to_string(sol.status));
        }
        if (incumbent && !better(sol.objective, incumbent->value)) continue;
        const int j = most_fractional(sol.x, integer, opt.integrality_tol);
        if (j < 0) {
            Incumbent inc{0.0, sol.x};
            round_integers(inc.x, integer);
            inc.value = model.evaluate(inc.x);
            if (!incumbent || better(inc.value, incumbent->value)) incumbent = std::move(inc);
            continue;
        }
        Node down = node;
        Node up = std::move(node);
        down.upper[j] = std::floor(sol.x[j]);
        up.lower[j] = std::ceil(sol.x[j]);
        stack.push_back(std::move(down));
        stack.push_back(std::move(up));
    }
    return true;
}

}  // namespace

Result solve(const lp::Model& model, const std::vector<bool>& integer, std::span<const double> tie_break,
             const Options& options) {
    if (static_cast<int>(integer.size()) != model.num_cols()) {
        throw std::invalid_argument("milp: integer mask has wrong length");
    }
    Result res;
    const auto root = tie_break.empty() ? lp::solve(model, options.lp)
                                        : lp::solve_lexicographic(model, tie_break, options.lp);
    res.nodes = 1;
    if (root.status != lp::Status::optimal) {
        res.status = root.status;
        return res;
    }
    if (is_integral(root.x, integer, options.integrality_tol)) {
        res.status = lp::Status::optimal;
        res.root_integral = true;
        res.x = root.x;
        round_integers(res.x, integer);
        res.objective = model.evaluate(res.x);
        return res;
    }

    std::optional<Incumbent> best;
    long nodes = 0;
    bool complete = branch_and_bound(model, integer, options, best, nodes);
    if (complete && best && !tie_break.empty()) {
        // Second stage: keep the primary objective at its optimum and
        // minimise the tie-break costs.
        lp::Model tied = model;
        double scale = 1.0;
        for (double c : model.cost) scale = std::max(scale, std::abs(c));
        const double slack = 1e-9 * std::max(scale, std::abs(best->value));
        const int row = model.maximize ? tied.add_row(lp::Sense::ge, best->value - slack)
                                       : tied.add_row(lp::Sense::le, best->value + slack);
        for (int j = 0; j < model.num_cols(); ++j) tied.add_coef(row, j, model.cost[j]);
        tied.maximize = false;
        tied.cost.assign(tie_break.begin(), tie_break.end());
        std::optional<Incumbent> seed = Incumbent{tied.evaluate(best->x), best->x};
        complete = branch_and_bound(tied, integer, options, seed, nodes);
        best->x = seed->x;
        best->value = model.evaluate(best->x);
    }
    res.nodes += nodes;
    if (!best) {
        res.status = complete ? lp::Status::infeasible : lp::Status::iteration_limit;
        return res;
    }
    res.status = complete ? lp::Status::optimal : lp::Status::iteration_limit;
    res.x = std::move(best->x);
    res.objective = best->value;
    return res;
}

}  // namespace rmab::milp
