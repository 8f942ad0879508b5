#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace rmab::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { le, ge, eq };
enum class Status { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(Status s);

/// Sparse column-wise linear program with bounded variables.
/// Lower bounds must be finite.
struct Model {
    bool maximize = false;
    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::vector<std::pair<int, double>>> columns;
    std::vector<Sense> sense;
    std::vector<double> rhs;

    int num_cols() const { return static_cast<int>(cost.size()); }
    int num_rows() const { return static_cast<int>(rhs.size()); }

    int add_column(double c, double lo = 0.0, double hi = kInf);
    int add_row(Sense s, double b);
    int add_row(std::span<const std::pair<int, double>> terms, Sense s, double b);
    void add_coef(int row, int col, double value);

    double evaluate(std::span<const double> x) const;
    /// Largest violation of any row or bound at `x`.
    double max_violation(std::span<const double> x) const;
};

struct Options {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    /// Relative threshold above which a reduced cost is treated as nonzero
    /// when restricting to the optimal face.
    double face_tol = 1e-9;
    long max_iterations = 2'000'000;
};

struct Solution {
    Status status = Status::infeasible;
    double objective = 0.0;
    std::vector<double> x;
    /// c_j - y^T A_j in the model's own sense, structural columns only.
    std::vector<double> reduced_cost;
    std::vector<double> dual;
    long iterations = 0;
};

Solution solve(const Model& model, const Options& options = {});

/// Same as solve() but with bounds replaced by `lower` / `upper`.
Solution solve(const Model& model, std::span<const double> lower, std::span<const double> upper,
               const Options& options = {});

/// Optimises the model objective, then minimises `secondary` over the face of
/// optimal solutions (variables with nonzero reduced cost stay at their
/// bound). The reported objective is the primary one.
Solution solve_lexicographic(const Model& model, std::span<const double> secondary,
                             const Options& options = {});

}  // namespace rmab::lp
