#pragma once

// Standard-form conic programs and a primal-dual interior-point solver.
//
//     minimize    1/2 x'Px + c'x + c0
//     subject to  A x = b
//                 G x + s = h,   s in K
//
// K is a product of a nonnegative orthant followed by second-order cones
// { (t, u) : ||u|| <= t }. The rows of G are ordered accordingly.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dwc::conic {

struct Term {
    int var = 0;
    double coef = 0.0;
};

// Affine expression sum(coef * x[var]) + constant.
struct Affine {
    std::vector<Term> terms;
    double constant = 0.0;

    Affine() = default;
    Affine(std::initializer_list<Term> t, double c = 0.0) : terms(t), constant(c) {}
    explicit Affine(double c) : constant(c) {}

    Affine& add(int var, double coef) {
        terms.push_back({var, coef});
        return *this;
    }
    Affine& add(const Affine& other, double scale = 1.0);
    double eval(const Eigen::VectorXd& x) const;
};

struct ConeDims {
    int nonneg = 0;
    std::vector<int> soc;

    int rows() const;
    int degree() const { return nonneg + static_cast<int>(soc.size()); }
};

struct Program {
    int num_vars = 0;
    Eigen::SparseMatrix<double> P;  // symmetric, full storage
    Eigen::VectorXd c;
    double c0 = 0.0;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;
    Eigen::VectorXd h;
    ConeDims cones;

    // Constraint family of every row, as an index into `families`.
    std::vector<std::string> families;
    std::vector<int> eq_family;
    std::vector<int> cone_family;  // one entry per row of G

    int num_eq() const { return static_cast<int>(b.size()); }
    int num_cone_rows() const { return static_cast<int>(h.size()); }
    double objective(const Eigen::VectorXd& x) const;
};

// Incremental assembly of a Program. Every constraint carries a family name;
// the name is used in assembly errors and in residual diagnostics.
class ProgramBuilder {
public:
    int add_variable() { return num_vars_++; }
    int add_variables(int count);
    int num_vars() const { return num_vars_; }

    void add_linear_cost(int var, double coef);
    // Adds coef * x[var]^2 to the objective (coef >= 0).
    void add_quadratic_cost(int var, double coef);
    void add_constant_cost(double value) { c0_ += value; }

    // expr == 0
    void add_equality(const Affine& expr, std::string_view family);
    // expr >= 0
    void add_nonneg(const Affine& expr, std::string_view family);
    // lo <= x[var] <= hi; infinite sides are skipped.
    void add_bounds(int var, double lo, double hi, std::string_view family);
    // ||u|| <= t
    void add_soc(const Affine& t, const std::vector<Affine>& u, std::string_view family);

    int num_equalities() const { return static_cast<int>(eq_rows_.size()); }
    int num_nonneg() const { return static_cast<int>(nonneg_rows_.size()); }
    int num_socs() const { return static_cast<int>(socs_.size()); }

    Program build() const;

private:
    struct Row {
        Affine expr;
        int family = 0;
    };
    struct Soc {
        std::vector<Affine> rows;  // rows[0] = t
        int family = 0;
    };

    int family_id(std::string_view name);
    void check_vars(const Affine& expr, std::string_view family) const;

    int num_vars_ = 0;
    double c0_ = 0.0;
    std::vector<std::pair<int, double>> linear_;
    std::vector<std::pair<int, double>> quadratic_;
    std::vector<Row> eq_rows_;
    std::vector<Row> nonneg_rows_;
    std::vector<Soc> socs_;
    std::vector<std::string> families_;
};

enum class Status { Optimal, OptimalInaccurate, MaxIterations, Stalled, NumericalError };

std::string to_string(Status status);

struct SolverOptions {
    int max_iterations = 100;
    double feas_tol = 1e-9;
    double gap_abs_tol = 1e-9;
    double gap_rel_tol = 1e-9;
    // Accepted as OptimalInaccurate when the iteration budget runs out.
    double inaccurate_tol = 1e-6;
    double static_reg = 1e-10;
    int refine_steps = 4;
    int equilibration_passes = 15;
    bool verbose = false;
};

struct Solution {
    Status status = Status::NumericalError;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd z;
    Eigen::VectorXd s;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;  // max over ||Ax-b||inf, ||Gx+s-h||inf
    double dual_residual = 0.0;    // ||Px+c+A'y+G'z||inf
    double gap = 0.0;              // s'z

    bool ok() const { return status == Status::Optimal || status == Status::OptimalInaccurate; }
};

// Narrow backend interface so the interior-point implementation can be
// replaced without touching problem assembly.
class ConicSolver {
public:
    virtual ~ConicSolver() = default;
    virtual Solution solve(const Program& program) const = 0;
};

class InteriorPointSolver final : public ConicSolver {
public:
    explicit InteriorPointSolver(SolverOptions options = {}) : options_(options) {}
    Solution solve(const Program& program) const override;
    const SolverOptions& options() const { return options_; }

private:
    SolverOptions options_;
};

std::unique_ptr<ConicSolver> make_default_solver(const SolverOptions& options = {});

}  // namespace dwc::conic
