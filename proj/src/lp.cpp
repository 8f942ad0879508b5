#include "rmab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmab::lp {

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

int Model::add_column(double c, double lo, double hi) {
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(hi);
    columns.emplace_back();
    return num_cols() - 1;
}

int Model::add_row(Sense s, double b) {
    sense.push_back(s);
    rhs.push_back(b);
    return num_rows() - 1;
}

int Model::add_row(std::span<const std::pair<int, double>> terms, Sense s, double b) {
    const int row = add_row(s, b);
    for (const auto& [col, v] : terms) add_coef(row, col, v);
    return row;
}

void Model::add_coef(int row, int col, double value) {
    if (value != 0.0) columns[static_cast<std::size_t>(col)].emplace_back(row, value);
}

double Model::evaluate(std::span<const double> x) const {
    double z = 0.0;
    for (int j = 0; j < num_cols(); ++j) z += cost[j] * x[j];
    return z;
}

double Model::max_violation(std::span<const double> x) const {
    std::vector<double> activity(rhs.size(), 0.0);
    double worst = 0.0;
    for (int j = 0; j < num_cols(); ++j) {
        worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
        for (const auto& [r, a] : columns[j]) activity[r] += a * x[j];
    }
    for (int i = 0; i < num_rows(); ++i) {
        const double diff = activity[i] - rhs[i];
        switch (sense[i]) {
            case Sense::le: worst = std::max(worst, diff); break;
            case Sense::ge: worst = std::max(worst, -diff); break;
            case Sense::eq: worst = std::max(worst, std::abs(diff)); break;
        }
    }
    return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kTieTol = 1e-12;

// Bounded-variable primal revised simplex with an explicit dense basis
// inverse. Columns are ordered structural, slack, artificial; slack and
// artificial columns are signed unit vectors.
class RevisedSimplex {
public:
    RevisedSimplex(const Model& model, std::span<const double> lower, std::span<const double> upper,
                   const Options& opt)
        : model_(model), opt_(opt), m_(model.num_rows()), n_(model.num_cols()) {
        for (int j = 0; j < n_; ++j) {
            lo_.push_back(lower[j]);
            hi_.push_back(upper[j]);
            if (!std::isfinite(lower[j])) throw std::invalid_argument("lp: lower bounds must be finite");
            if (lower[j] > upper[j] + opt_.feasibility_tol) bounds_infeasible_ = true;
            x_.push_back(lower[j]);
            at_upper_.push_back(false);
        }
        std::vector<double> residual(model.rhs.begin(), model.rhs.end());
        for (int j = 0; j < n_; ++j) {
            if (x_[j] == 0.0) continue;
            for (const auto& [r, a] : model.columns[j]) residual[r] -= a * x_[j];
        }

        std::vector<int> slack_of(static_cast<std::size_t>(m_), -1);
        for (int i = 0; i < m_; ++i) {
            if (model.sense[i] == Sense::eq) continue;
            slack_of[i] = add_unit(i, model.sense[i] == Sense::le ? 1.0 : -1.0, 0.0, kInf, false);
        }
        basis_.assign(static_cast<std::size_t>(m_), -1);
        std::vector<double> basic_coef(static_cast<std::size_t>(m_), 1.0);
        for (int i = 0; i < m_; ++i) {
            const int s = slack_of[i];
            if (s >= 0 && residual[i] * unit_coef_[s - n_] >= 0.0) {
                x_[s] = residual[i] * unit_coef_[s - n_];
                basis_[i] = s;
                basic_coef[i] = unit_coef_[s - n_];
            }
        }
        first_artificial_ = total();
        for (int i = 0; i < m_; ++i) {
            if (basis_[i] >= 0) continue;
            const double coef = residual[i] >= 0.0 ? 1.0 : -1.0;
            const int a = add_unit(i, coef, 0.0, kInf, true);
            x_[a] = std::abs(residual[i]);
            basis_[i] = a;
            basic_coef[i] = coef;
        }
        where_.assign(static_cast<std::size_t>(total()), -1);
        for (int i = 0; i < m_; ++i) where_[basis_[i]] = i;
        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) binv_[idx(i, i)] = 1.0 / basic_coef[i];
        refactor_interval_ = std::max(64, m_);
    }

    bool bounds_infeasible() const { return bounds_infeasible_; }
    int total() const { return static_cast<int>(x_.size()); }
    long iterations() const { return iterations_; }

    Status phase1() {
        if (first_artificial_ == total()) return Status::optimal;
        std::vector<double> cost(static_cast<std::size_t>(total()), 0.0);
        for (int j = first_artificial_; j < total(); ++j) cost[j] = 1.0;
        const Status st = optimize(cost);
        if (st != Status::optimal) return st;
        double infeas = 0.0;
        for (int j = first_artificial_; j < total(); ++j) infeas += x_[j];
        double scale = 1.0;
        for (double b : model_.rhs) scale = std::max(scale, std::abs(b));
        if (infeas > opt_.feasibility_tol * scale * std::max(1, m_)) return Status::infeasible;
        for (int j = first_artificial_; j < total(); ++j) {
            hi_[j] = 0.0;
            if (where_[j] < 0) x_[j] = 0.0;
        }
        return Status::optimal;
    }

    Status optimize(std::span<const double> cost) {
        std::vector<double> y(static_cast<std::size_t>(m_));
        std::vector<double> alpha(static_cast<std::size_t>(m_));
        double cscale = 1.0;
        for (double c : cost) cscale = std::max(cscale, std::abs(c));
        const double dtol = opt_.optimality_tol * cscale;
        int degenerate = 0;
        bool bland = false;
        long since_refactor = 0;

        while (true) {
            if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
            if (since_refactor >= refactor_interval_) {
                refactor();
                since_refactor = 0;
            }
            duals(cost, y);

            int q = -1;
            double best = 0.0;
            for (int j = 0; j < total(); ++j) {
                if (where_[j] >= 0 || hi_[j] - lo_[j] <= 0.0) continue;
                const double d = reduced(j, cost, y);
                const bool improves = at_upper_[j] ? d > dtol : d < -dtol;
                if (!improves) continue;
                if (bland) {
                    q = j;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    q = j;
                }
            }
            if (q < 0) return Status::optimal;

            const double dir = at_upper_[q] ? -1.0 : 1.0;
            std::fill(alpha.begin(), alpha.end(), 0.0);
            for_column(q, [&](int r, double a) {
                for (int i = 0; i < m_; ++i) alpha[i] += binv_[idx(i, r)] * a;
            });

            double row_theta = kInf;
            int leave = -1;
            double leave_piv = 0.0;
            for (int i = 0; i < m_; ++i) {
                const double delta = dir * alpha[i];
                if (std::abs(delta) <= kPivotTol) continue;
                const int b = basis_[i];
                double ratio;
                if (delta > 0.0) {
                    ratio = (x_[b] - lo_[b]) / delta;
                } else {
                    if (hi_[b] == kInf) continue;
                    ratio = (hi_[b] - x_[b]) / (-delta);
                }
                if (ratio < 0.0) ratio = 0.0;
                const bool better =
                    leave < 0 || ratio < row_theta - kTieTol ||
                    (ratio <= row_theta + kTieTol &&
                     (std::abs(delta) > leave_piv + kTieTol ||
                      (std::abs(delta) >= leave_piv - kTieTol && b < basis_[leave])));
                if (better) {
                    row_theta = ratio;
                    leave = i;
                    leave_piv = std::abs(delta);
                }
            }
            const double flip = hi_[q] - lo_[q];
            if (leave < 0 && flip == kInf) return Status::unbounded;
            const bool do_flip = leave < 0 || flip <= row_theta;
            const double theta = do_flip ? flip : row_theta;

            if (theta <= kTieTol) {
                if (++degenerate > 50) bland = true;
            } else {
                degenerate = 0;
                bland = false;
            }

            x_[q] += dir * theta;
            for (int i = 0; i < m_; ++i) {
                if (alpha[i] != 0.0) x_[basis_[i]] -= theta * dir * alpha[i];
            }
            if (do_flip) {
                at_upper_[q] = !at_upper_[q];
                x_[q] = at_upper_[q] ? hi_[q] : lo_[q];
            } else {
                const int l = basis_[leave];
                const bool to_upper = dir * alpha[leave] < 0.0;
                x_[l] = to_upper ? hi_[l] : lo_[l];
                at_upper_[l] = to_upper;
                where_[l] = -1;
                basis_[leave] = q;
                where_[q] = leave;
                at_upper_[q] = false;
                pivot(leave, alpha);
            }
            ++iterations_;
            ++since_refactor;
        }
    }

    /// Fixes every nonbasic column with a nonzero reduced cost at its
    /// current bound, leaving only the optimal face free.
    void restrict_to_face(std::span<const double> cost, double rel_tol) {
        std::vector<double> y(static_cast<std::size_t>(m_));
        duals(cost, y);
        double cscale = 1.0;
        for (double c : cost) cscale = std::max(cscale, std::abs(c));
        for (int j = 0; j < first_artificial_; ++j) {
            if (where_[j] >= 0) continue;
            if (std::abs(reduced(j, cost, y)) > rel_tol * cscale) {
                lo_[j] = x_[j];
                hi_[j] = x_[j];
            }
        }
    }

    void fill(Solution& sol, std::span<const double> cost, bool maximize) const {
        sol.x.assign(x_.begin(), x_.begin() + n_);
        std::vector<double> y(static_cast<std::size_t>(m_));
        duals(cost, y);
        const double sign = maximize ? -1.0 : 1.0;
        sol.dual.resize(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) sol.dual[i] = sign * y[i];
        sol.reduced_cost.resize(static_cast<std::size_t>(n_));
        for (int j = 0; j < n_; ++j) sol.reduced_cost[j] = sign * reduced(j, cost, y);
        sol.iterations = iterations_;
    }

    std::vector<double> internal_cost(const std::vector<double>& c, bool maximize) const {
        std::vector<double> out(static_cast<std::size_t>(total()), 0.0);
        for (int j = 0; j < n_; ++j) out[j] = maximize ? -c[j] : c[j];
        return out;
    }

private:
    std::size_t idx(int i, int k) const { return static_cast<std::size_t>(i) * m_ + k; }

    int add_unit(int row, double coef, double lo, double hi, bool artificial) {
        unit_row_.push_back(row);
        unit_coef_.push_back(coef);
        lo_.push_back(lo);
        hi_.push_back(hi);
        x_.push_back(0.0);
        at_upper_.push_back(false);
        (void)artificial;
        return total() - 1;
    }

    template <class F>
    void for_column(int j, F&& f) const {
        if (j < n_) {
            for (const auto& [r, a] : model_.columns[j]) f(r, a);
        } else {
            f(unit_row_[j - n_], unit_coef_[j - n_]);
        }
    }

    void duals(std::span<const double> cost, std::vector<double>& y) const {
        std::fill(y.begin(), y.end(), 0.0);
        for (int i = 0; i < m_; ++i) {
            const double cb = cost[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = &binv_[idx(i, 0)];
            for (int k = 0; k < m_; ++k) y[k] += cb * row[k];
        }
    }

    double reduced(int j, std::span<const double> cost, const std::vector<double>& y) const {
        double d = cost[j];
        for_column(j, [&](int r, double a) { d -= y[r] * a; });
        return d;
    }

    void pivot(int r, const std::vector<double>& alpha) {
        const double piv = alpha[r];
        double* prow = &binv_[idx(r, 0)];
        for (int k = 0; k < m_; ++k) prow[k] /= piv;
        for (int i = 0; i < m_; ++i) {
            if (i == r || alpha[i] == 0.0) continue;
            const double f = alpha[i];
            double* row = &binv_[idx(i, 0)];
            for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
        }
    }

    void refactor() {
        const std::size_t m = static_cast<std::size_t>(m_);
        std::vector<double> b(m * m, 0.0);
        for (int i = 0; i < m_; ++i) {
            for_column(basis_[i], [&](int r, double a) { b[static_cast<std::size_t>(r) * m + i] += a; });
        }
        std::vector<double> inv(m * m, 0.0);
        for (int i = 0; i < m_; ++i) inv[idx(i, i)] = 1.0;
        for (int c = 0; c < m_; ++c) {
            int p = c;
            for (int r = c + 1; r < m_; ++r) {
                if (std::abs(b[idx(r, c)]) > std::abs(b[idx(p, c)])) p = r;
            }
            if (std::abs(b[idx(p, c)]) < 1e-12) throw std::runtime_error("lp: singular basis");
            if (p != c) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(b[idx(p, k)], b[idx(c, k)]);
                    std::swap(inv[idx(p, k)], inv[idx(c, k)]);
                }
            }
            const double piv = b[idx(c, c)];
            for (int k = 0; k < m_; ++k) {
                b[idx(c, k)] /= piv;
                inv[idx(c, k)] /= piv;
            }
            for (int r = 0; r < m_; ++r) {
                if (r == c) continue;
                const double f = b[idx(r, c)];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    b[idx(r, k)] -= f * b[idx(c, k)];
                    inv[idx(r, k)] -= f * inv[idx(c, k)];
                }
            }
        }
        binv_ = std::move(inv);

        std::vector<double> rhs(model_.rhs.begin(), model_.rhs.end());
        for (int j = 0; j < total(); ++j) {
            if (where_[j] >= 0 || x_[j] == 0.0) continue;
            for_column(j, [&](int r, double a) { rhs[r] -= a * x_[j]; });
        }
        for (int i = 0; i < m_; ++i) {
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += binv_[idx(i, k)] * rhs[k];
            x_[basis_[i]] = v;
        }
    }

    const Model& model_;
    Options opt_;
    int m_;
    int n_;
    std::vector<double> lo_, hi_, x_;
    std::vector<bool> at_upper_;
    std::vector<int> unit_row_;
    std::vector<double> unit_coef_;
    std::vector<int> basis_;
    std::vector<int> where_;
    std::vector<double> binv_;
    int first_artificial_ = 0;
    int refactor_interval_ = 64;
    long iterations_ = 0;
    bool bounds_infeasible_ = false;
};

Solution run(const Model& model, std::span<const double> lower, std::span<const double> upper,
             std::span<const double> secondary, const Options& opt) {
    Solution sol;
    RevisedSimplex simplex(model, lower, upper, opt);
    if (simplex.bounds_infeasible()) {
        sol.status = Status::infeasible;
        return sol;
    }
    Status st = simplex.phase1();
    if (st != Status::optimal) {
        sol.status = st == Status::unbounded ? Status::infeasible : st;
        sol.iterations = simplex.iterations();
        return sol;
    }
    auto cost = simplex.internal_cost(model.cost, model.maximize);
    st = simplex.optimize(cost);
    if (st == Status::optimal && !secondary.empty()) {
        simplex.restrict_to_face(cost, opt.face_tol);
        std::vector<double> sec(static_cast<std::size_t>(simplex.total()), 0.0);
        std::copy(secondary.begin(), secondary.end(), sec.begin());
        st = simplex.optimize(sec);
        if (st == Status::unbounded) throw std::runtime_error("lp: secondary objective unbounded on optimal face");
    }
    sol.status = st;
    simplex.fill(sol, cost, model.maximize);
    sol.objective = model.evaluate(sol.x);
    return sol;
}

}  // namespace

Solution solve(const Model& model, const Options& options) {
    return run(model, model.lower, model.upper, {}, options);
}

Solution solve(const Model& model, std::span<const double> lower, std::span<const double> upper,
               const Options& options) {
    return run(model, lower, upper, {}, options);
}

Solution solve_lexicographic(const Model& model, std::span<const double> secondary, const Options& options) {
    if (static_cast<int>(secondary.size()) != model.num_cols()) {
        throw std::invalid_argument("lp: secondary objective has wrong length");
    }
    return run(model, model.lower, model.upper, secondary, options);
}

}  // namespace rmab::lp
