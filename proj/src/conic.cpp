#include "dwc/conic.hpp"

#include "dwc/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace dwc::conic {

Affine& Affine::add(const Affine& other, double scale) {
    for (const auto& t : other.terms) terms.push_back({t.var, t.coef * scale});
    constant += other.constant * scale;
    return *this;
}

double Affine::eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * x[t.var];
    return v;
}

int ConeDims::rows() const {
    int r = nonneg;
    for (int d : soc) r += d;
    return r;
}

double Program::objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P * x) + c.dot(x) + c0;
}

std::string to_string(Status status) {
    switch (status) {
        case Status::Optimal: return "optimal";
        case Status::OptimalInaccurate: return "optimal_inaccurate";
        case Status::MaxIterations: return "max_iterations";
        case Status::Stalled: return "stalled";
        case Status::NumericalError: return "numerical_error";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ProgramBuilder
// ---------------------------------------------------------------------------

int ProgramBuilder::add_variables(int count) {
    int first = num_vars_;
    num_vars_ += count;
    return first;
}

void ProgramBuilder::add_linear_cost(int var, double coef) {
    if (var < 0 || var >= num_vars_) throw AssemblyError("objective", "linear cost on unknown variable");
    linear_.emplace_back(var, coef);
}

void ProgramBuilder::add_quadratic_cost(int var, double coef) {
    if (var < 0 || var >= num_vars_) throw AssemblyError("objective", "quadratic cost on unknown variable");
    if (coef < 0.0) throw AssemblyError("objective", "negative quadratic coefficient makes the program nonconvex");
    quadratic_.emplace_back(var, coef);
}

int ProgramBuilder::family_id(std::string_view name) {
    for (std::size_t i = 0; i < families_.size(); ++i) {
        if (families_[i] == name) return static_cast<int>(i);
    }
    families_.emplace_back(name);
    return static_cast<int>(families_.size()) - 1;
}

void ProgramBuilder::check_vars(const Affine& expr, std::string_view family) const {
    for (const auto& t : expr.terms) {
        if (t.var < 0 || t.var >= num_vars_) {
            throw AssemblyError(std::string(family), "references variable " + std::to_string(t.var) +
                                                         " outside [0, " + std::to_string(num_vars_) + ")");
        }
        if (!std::isfinite(t.coef)) throw AssemblyError(std::string(family), "non-finite coefficient");
    }
    if (!std::isfinite(expr.constant)) throw AssemblyError(std::string(family), "non-finite constant");
}

void ProgramBuilder::add_equality(const Affine& expr, std::string_view family) {
    check_vars(expr, family);
    eq_rows_.push_back({expr, family_id(family)});
}

void ProgramBuilder::add_nonneg(const Affine& expr, std::string_view family) {
    check_vars(expr, family);
    nonneg_rows_.push_back({expr, family_id(family)});
}

void ProgramBuilder::add_bounds(int var, double lo, double hi, std::string_view family) {
    if (lo > hi) {
        throw AssemblyError(std::string(family), "empty bound interval [" + std::to_string(lo) + ", " +
                                                     std::to_string(hi) + "]");
    }
    if (std::isfinite(lo)) add_nonneg(Affine({{var, 1.0}}, -lo), family);
    if (std::isfinite(hi)) add_nonneg(Affine({{var, -1.0}}, hi), family);
}

void ProgramBuilder::add_soc(const Affine& t, const std::vector<Affine>& u, std::string_view family) {
    check_vars(t, family);
    for (const auto& e : u) check_vars(e, family);
    Soc cone;
    cone.rows.reserve(u.size() + 1);
    cone.rows.push_back(t);
    cone.rows.insert(cone.rows.end(), u.begin(), u.end());
    cone.family = family_id(family);
    socs_.push_back(std::move(cone));
}

Program ProgramBuilder::build() const {
    Program prog;
    const int n = num_vars_;
    prog.num_vars = n;
    prog.c = Eigen::VectorXd::Zero(n);
    prog.c0 = c0_;
    for (auto [v, coef] : linear_) prog.c[v] += coef;

    std::vector<Eigen::Triplet<double>> trip;
    for (auto [v, coef] : quadratic_) trip.emplace_back(v, v, 2.0 * coef);
    prog.P.resize(n, n);
    prog.P.setFromTriplets(trip.begin(), trip.end());

    trip.clear();
    const int p = static_cast<int>(eq_rows_.size());
    prog.b.resize(p);
    for (int i = 0; i < p; ++i) {
        for (const auto& t : eq_rows_[i].expr.terms) trip.emplace_back(i, t.var, t.coef);
        prog.b[i] = -eq_rows_[i].expr.constant;
        prog.eq_family.push_back(eq_rows_[i].family);
    }
    prog.A.resize(p, n);
    prog.A.setFromTriplets(trip.begin(), trip.end());

    trip.clear();
    int m = static_cast<int>(nonneg_rows_.size());
    for (const auto& cone : socs_) m += static_cast<int>(cone.rows.size());
    prog.h.resize(m);
    int row = 0;
    for (const auto& r : nonneg_rows_) {
        for (const auto& t : r.expr.terms) trip.emplace_back(row, t.var, -t.coef);
        prog.h[row] = r.expr.constant;
        prog.cone_family.push_back(r.family);
        ++row;
    }
    prog.cones.nonneg = static_cast<int>(nonneg_rows_.size());
    for (const auto& cone : socs_) {
        prog.cones.soc.push_back(static_cast<int>(cone.rows.size()));
        for (const auto& r : cone.rows) {
            for (const auto& t : r.terms) trip.emplace_back(row, t.var, -t.coef);
            prog.h[row] = r.constant;
            prog.cone_family.push_back(cone.family);
            ++row;
        }
    }
    prog.G.resize(m, n);
    prog.G.setFromTriplets(trip.begin(), trip.end());
    prog.families = families_;
    return prog;
}

// ---------------------------------------------------------------------------
// Interior-point method
// ---------------------------------------------------------------------------

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Layout {
    int l = 0;
    std::vector<int> dim;
    std::vector<int> off;
    int m = 0;

    explicit Layout(const ConeDims& cones) : l(cones.nonneg), dim(cones.soc) {
        int o = l;
        for (int d : dim) {
            off.push_back(o);
            o += d;
        }
        m = o;
    }
    int degree() const { return l + static_cast<int>(dim.size()); }
};

// Nesterov-Todd scaling W with W s = W^{-1} z = lambda.
// Orthant: W = diag(sqrt(z/s)). Second-order cone k: W = eta_k * H(w_k) with
// H(w) = [w0, w1'; w1, I + w1 w1'/(1 + w0)] and w0^2 - |w1|^2 = 1.
struct Scaling {
    Vec d;
    std::vector<double> eta;
    std::vector<Vec> w;
};

double jnorm_sq(const Vec& v, int off, int dim) {
    const double t = v.segment(off + 1, dim - 1).norm();
    return (v[off] - t) * (v[off] + t);
}

// Strict interior with a relative margin, so the next scaling is well defined.
bool interior(const Layout& L, const Vec& v) {
    for (int i = 0; i < L.l; ++i) {
        if (!(v[i] > 0.0)) return false;
    }
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const double t = v.segment(o + 1, L.dim[k] - 1).norm();
        if (!(v[o] - t > 1e-13 * v[o])) return false;
    }
    return true;
}

bool compute_scaling(const Layout& L, const Vec& s, const Vec& z, Scaling& W, Vec& lambda) {
    W.d.resize(L.l);
    lambda.resize(L.m);
    for (int i = 0; i < L.l; ++i) {
        if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
        W.d[i] = std::sqrt(z[i] / s[i]);
        lambda[i] = std::sqrt(s[i] * z[i]);
    }
    W.eta.resize(L.dim.size());
    W.w.resize(L.dim.size());
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        const double sj = jnorm_sq(s, o, dim);
        const double zj = jnorm_sq(z, o, dim);
        if (!(sj > 0.0) || !(zj > 0.0) || s[o] <= 0.0 || z[o] <= 0.0) return false;
        const double sn = std::sqrt(sj);
        const double zn = std::sqrt(zj);
        Vec sb = s.segment(o, dim) / sn;
        Vec zb = z.segment(o, dim) / zn;
        const double gamma = std::sqrt(std::max(0.5 * (1.0 + sb.dot(zb)), 1e-300));
        Vec w(dim);
        w[0] = (zb[0] + sb[0]) / (2.0 * gamma);
        w.tail(dim - 1) = (zb.tail(dim - 1) - sb.tail(dim - 1)) / (2.0 * gamma);
        // Re-normalize so that w0^2 - |w1|^2 = 1 holds to rounding.
        w[0] = std::sqrt(1.0 + w.tail(dim - 1).squaredNorm());
        W.w[k] = w;
        W.eta[k] = std::sqrt(zn / sn);
    }
    // lambda = W s
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        const Vec& w = W.w[k];
        const double eta = W.eta[k];
        auto u = s.segment(o, dim);
        const double w1u1 = w.tail(dim - 1).dot(u.tail(dim - 1));
        lambda[o] = eta * (w[0] * u[0] + w1u1);
        lambda.segment(o + 1, dim - 1) =
            eta * (u.tail(dim - 1) + w.tail(dim - 1) * (u[0] + w1u1 / (1.0 + w[0])));
    }
    return true;
}

// out = W in (inverse=false) or W^{-1} in (inverse=true)
void apply_scaling(const Layout& L, const Scaling& W, const Vec& in, Vec& out, bool inverse) {
    out.resize(L.m);
    for (int i = 0; i < L.l; ++i) out[i] = inverse ? in[i] / W.d[i] : in[i] * W.d[i];
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        const Vec& w = W.w[k];
        const double f = inverse ? 1.0 / W.eta[k] : W.eta[k];
        const double sgn = inverse ? -1.0 : 1.0;
        auto u = in.segment(o, dim);
        const double w1u1 = w.tail(dim - 1).dot(u.tail(dim - 1));
        out[o] = f * (w[0] * u[0] + sgn * w1u1);
        out.segment(o + 1, dim - 1) =
            f * (u.tail(dim - 1) + w.tail(dim - 1) * (sgn * u[0] + w1u1 / (1.0 + w[0])));
    }
}

// Dense W^{-2} block of cone k.
Eigen::MatrixXd inverse_scaling_squared(const Scaling& W, std::size_t k) {
    const Vec& w = W.w[k];
    const int dim = static_cast<int>(w.size());
    Eigen::MatrixXd Hi(dim, dim);
    Hi(0, 0) = w[0];
    Hi.block(0, 1, 1, dim - 1) = -w.tail(dim - 1).transpose();
    Hi.block(1, 0, dim - 1, 1) = -w.tail(dim - 1);
    Hi.block(1, 1, dim - 1, dim - 1) = Eigen::MatrixXd::Identity(dim - 1, dim - 1) +
                                       w.tail(dim - 1) * w.tail(dim - 1).transpose() / (1.0 + w[0]);
    Eigen::MatrixXd out = Hi * Hi;
    out /= (W.eta[k] * W.eta[k]);
    return out;
}

// Jordan product u o v.
Vec circ(const Layout& L, const Vec& u, const Vec& v) {
    Vec out(L.m);
    for (int i = 0; i < L.l; ++i) out[i] = u[i] * v[i];
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        out[o] = u.segment(o, dim).dot(v.segment(o, dim));
        out.segment(o + 1, dim - 1) = u[o] * v.segment(o + 1, dim - 1) + v[o] * u.segment(o + 1, dim - 1);
    }
    return out;
}

// Solves lambda o x = xi for x.
Vec inv_circ(const Layout& L, const Vec& lambda, const Vec& xi) {
    Vec out(L.m);
    for (int i = 0; i < L.l; ++i) out[i] = xi[i] / lambda[i];
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        const double l0 = lambda[o];
        auto l1 = lambda.segment(o + 1, dim - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double x0 = (l0 * xi[o] - l1.dot(xi.segment(o + 1, dim - 1))) / det;
        out[o] = x0;
        out.segment(o + 1, dim - 1) = (xi.segment(o + 1, dim - 1) - x0 * l1) / l0;
    }
    return out;
}

// Largest alpha with x + alpha dx in K.
double max_step(const Layout& L, const Vec& x, const Vec& dx) {
    double alpha = kInf;
    for (int i = 0; i < L.l; ++i) {
        if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
    }
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        const double x0 = x[o];
        const double d0 = dx[o];
        auto x1 = x.segment(o + 1, dim - 1);
        auto d1 = dx.segment(o + 1, dim - 1);
        const double c = x0 * x0 - x1.squaredNorm();
        const double b = x0 * d0 - x1.dot(d1);
        const double a = d0 * d0 - d1.squaredNorm();
        double root = kInf;
        if (c <= 0.0) {
            root = 0.0;
        } else if (std::abs(a) < 1e-14 * (std::abs(b) + c)) {
            if (b < 0.0) root = -c / (2.0 * b);
        } else {
            const double disc = b * b - a * c;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -(b + (b >= 0.0 ? sq : -sq));
                const double r1 = q / a;
                const double r2 = (q != 0.0) ? c / q : kInf;
                for (double r : {r1, r2}) {
                    if (r > 0.0 && r < root) root = r;
                }
            }
        }
        alpha = std::min(alpha, root);
    }
    return alpha;
}

// Shift v into the interior of K along the identity direction if needed.
void shift_into_cone(const Layout& L, Vec& v) {
    double worst = -kInf;
    for (int i = 0; i < L.l; ++i) worst = std::max(worst, -v[i]);
    for (std::size_t k = 0; k < L.dim.size(); ++k) {
        const int o = L.off[k];
        const int dim = L.dim[k];
        worst = std::max(worst, v.segment(o + 1, dim - 1).norm() - v[o]);
    }
    if (worst < -1e-8) return;
    const double shift = 1.0 + std::max(worst, 0.0);
    for (int i = 0; i < L.l; ++i) v[i] += shift;
    for (std::size_t k = 0; k < L.dim.size(); ++k) v[L.off[k]] += shift;
}

Vec identity_element(const Layout& L) {
    Vec e = Vec::Zero(L.m);
    e.head(L.l).setOnes();
    for (int o : L.off) e[o] = 1.0;
    return e;
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Ruiz-style equilibration. Row factors of a second-order cone block are
// shared so the cone is mapped onto itself.
struct Equilibration {
    Vec col;  // x = col .* x_scaled
    Vec row_a;
    Vec row_g;
    double cost = 1.0;
};

Equilibration equilibrate(const Layout& L, SpMat& P, SpMat& A, SpMat& G, int passes) {
    const int n = static_cast<int>(P.cols());
    Equilibration eq;
    eq.col = Vec::Ones(n);
    eq.row_a = Vec::Ones(A.rows());
    eq.row_g = Vec::Ones(G.rows());
    auto clampf = [](double v) { return std::clamp(v, 1e-4, 1e4); };
    for (int pass = 0; pass < passes; ++pass) {
        Vec colmax = Vec::Zero(n);
        Vec ra = Vec::Zero(A.rows());
        Vec rg = Vec::Zero(G.rows());
        for (const SpMat* M : {&P, &A, &G}) {
            for (int j = 0; j < M->outerSize(); ++j) {
                for (SpMat::InnerIterator it(*M, j); it; ++it) {
                    colmax[j] = std::max(colmax[j], std::abs(it.value()));
                }
            }
        }
        for (int j = 0; j < A.outerSize(); ++j) {
            for (SpMat::InnerIterator it(A, j); it; ++it) ra[it.row()] = std::max(ra[it.row()], std::abs(it.value()));
        }
        for (int j = 0; j < G.outerSize(); ++j) {
            for (SpMat::InnerIterator it(G, j); it; ++it) rg[it.row()] = std::max(rg[it.row()], std::abs(it.value()));
        }
        for (std::size_t k = 0; k < L.dim.size(); ++k) {
            const double mx = rg.segment(L.off[k], L.dim[k]).maxCoeff();
            rg.segment(L.off[k], L.dim[k]).setConstant(mx);
        }
        Vec dc(n), da(A.rows()), dg(G.rows());
        for (int j = 0; j < n; ++j) dc[j] = colmax[j] > 0.0 ? clampf(1.0 / std::sqrt(colmax[j])) : 1.0;
        for (int i = 0; i < A.rows(); ++i) da[i] = ra[i] > 0.0 ? clampf(1.0 / std::sqrt(ra[i])) : 1.0;
        for (int i = 0; i < G.rows(); ++i) dg[i] = rg[i] > 0.0 ? clampf(1.0 / std::sqrt(rg[i])) : 1.0;
        P = dc.asDiagonal() * P * dc.asDiagonal();
        A = da.asDiagonal() * A * dc.asDiagonal();
        G = dg.asDiagonal() * G * dc.asDiagonal();
        eq.col = eq.col.cwiseProduct(dc);
        eq.row_a = eq.row_a.cwiseProduct(da);
        eq.row_g = eq.row_g.cwiseProduct(dg);
    }
    return eq;
}

class KktSystem {
public:
    KktSystem(const Layout& L, const SpMat& P, const SpMat& A, const SpMat& G, double reg)
        : L_(L), n_(static_cast<int>(P.cols())), p_(static_cast<int>(A.rows())), m_(L.m), reg_(reg) {
        const int N = n_ + p_ + m_;
        std::vector<Eigen::Triplet<double>> trip;
        for (int j = 0; j < P.outerSize(); ++j) {
            for (SpMat::InnerIterator it(P, j); it; ++it) {
                if (it.row() <= j) trip.emplace_back(it.row(), j, it.value());
            }
        }
        for (int j = 0; j < n_; ++j) trip.emplace_back(j, j, reg_);
        for (int j = 0; j < A.outerSize(); ++j) {
            for (SpMat::InnerIterator it(A, j); it; ++it) trip.emplace_back(j, n_ + it.row(), it.value());
        }
        for (int j = 0; j < G.outerSize(); ++j) {
            for (SpMat::InnerIterator it(G, j); it; ++it) trip.emplace_back(j, n_ + p_ + it.row(), it.value());
        }
        for (int i = 0; i < p_; ++i) trip.emplace_back(n_ + i, n_ + i, -reg_);
        const int base = n_ + p_;
        for (int i = 0; i < L.l; ++i) trip.emplace_back(base + i, base + i, -1.0);
        for (std::size_t k = 0; k < L.dim.size(); ++k) {
            for (int a = 0; a < L.dim[k]; ++a) {
                for (int b = a; b < L.dim[k]; ++b) {
                    trip.emplace_back(base + L.off[k] + a, base + L.off[k] + b, a == b ? -1.0 : 0.0);
                }
            }
        }
        K_.resize(N, N);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();
        for (int i = 0; i < L.l; ++i) slots_.push_back(&K_.coeffRef(base + i, base + i));
        for (std::size_t k = 0; k < L.dim.size(); ++k) {
            for (int a = 0; a < L.dim[k]; ++a) {
                for (int b = a; b < L.dim[k]; ++b) {
                    slots_.push_back(&K_.coeffRef(base + L.off[k] + a, base + L.off[k] + b));
                }
            }
        }
        for (int i = 0; i < n_ + p_; ++i) {
            double* d = &K_.coeffRef(i, i);
            diag_slots_.push_back(d);
            diag_base_.push_back(*d - (i < n_ ? reg_ : -reg_));
        }
        base_reg_ = reg_;
        set_reg(reg_);
        ldlt_.analyzePattern(K_);
    }

    // Loads -W^{-2} - reg into the (3,3) block and factors, raising the
    // regularization when a pivot vanishes.
    bool factor(const Scaling& W) {
        for (double r = base_reg_; r <= 1e-6 * (1.0 + 1e-9); r *= 100.0) {
            set_reg(r);
            if (load_and_factor(W)) return true;
        }
        return false;
    }

    bool load_and_factor(const Scaling& W) {
        std::size_t slot = 0;
        for (int i = 0; i < L_.l; ++i) *slots_[slot++] = -1.0 / (W.d[i] * W.d[i]) - reg_;
        for (std::size_t k = 0; k < L_.dim.size(); ++k) {
            Eigen::MatrixXd H = inverse_scaling_squared(W, k);
            for (int a = 0; a < L_.dim[k]; ++a) {
                for (int b = a; b < L_.dim[k]; ++b) *slots_[slot++] = -H(a, b) - (a == b ? reg_ : 0.0);
            }
        }
        return refactor();
    }

    // Identity scaling, used for the initial point.
    bool factor_identity() {
        std::size_t slot = 0;
        for (int i = 0; i < L_.l; ++i) *slots_[slot++] = -1.0 - reg_;
        for (std::size_t k = 0; k < L_.dim.size(); ++k) {
            for (int a = 0; a < L_.dim[k]; ++a) {
                for (int b = a; b < L_.dim[k]; ++b) *slots_[slot++] = a == b ? -1.0 - reg_ : 0.0;
            }
        }
        return refactor();
    }

    Vec solve(const Vec& rhs, int refine_steps) const {
        Vec x = ldlt_.solve(rhs);
        for (int it = 0; it < refine_steps; ++it) {
            Vec r = rhs - (K_.selfadjointView<Eigen::Upper>() * x - regvec_.cwiseProduct(x));
            if (inf_norm(r) <= 1e-14 * (1.0 + inf_norm(rhs))) break;
            x += ldlt_.solve(r);
        }
        return x;
    }

private:
    void set_reg(double r) {
        reg_ = r;
        for (std::size_t i = 0; i < diag_slots_.size(); ++i) {
            *diag_slots_[i] = diag_base_[i] + (static_cast<int>(i) < n_ ? r : -r);
        }
        regvec_ = Vec::Zero(n_ + p_ + m_);
        regvec_.head(n_).setConstant(r);
        regvec_.segment(n_, p_).setConstant(-r);
        regvec_.tail(m_).setConstant(-r);
    }

    bool refactor() {
        ldlt_.factorize(K_);
        return ldlt_.info() == Eigen::Success;
    }

    const Layout& L_;
    int n_, p_, m_;
    double reg_;
    double base_reg_ = 0.0;
    SpMat K_;
    std::vector<double*> slots_;
    std::vector<double*> diag_slots_;
    std::vector<double> diag_base_;
    Vec regvec_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

Solution InteriorPointSolver::solve(const Program& prog) const {
    const SolverOptions& opt = options_;
    const int n = prog.num_vars;
    const int p = prog.num_eq();
    const Layout L(prog.cones);
    const int m = L.m;
    if (prog.G.rows() != m || prog.h.size() != m) throw AssemblyError("cones", "cone dimensions do not match G");
    if (prog.A.cols() != n || prog.G.cols() != n || prog.c.size() != n) {
        throw AssemblyError("program", "inconsistent variable count");
    }

    SpMat P = prog.P;
    SpMat A = prog.A;
    SpMat G = prog.G;
    Equilibration eq = equilibrate(L, P, A, G, opt.equilibration_passes);
    Vec c = eq.col.cwiseProduct(prog.c);
    Vec b = eq.row_a.cwiseProduct(prog.b);
    Vec h = eq.row_g.cwiseProduct(prog.h);
    double pmax = 0.0;
    for (int j = 0; j < P.outerSize(); ++j) {
        for (SpMat::InnerIterator it(P, j); it; ++it) pmax = std::max(pmax, std::abs(it.value()));
    }
    const double cnorm = std::max(inf_norm(c), pmax);
    eq.cost = cnorm > 0.0 ? std::clamp(1.0 / cnorm, 1e-8, 1e8) : 1.0;
    c *= eq.cost;
    P *= eq.cost;

    const double bnorm = 1.0 + inf_norm(b);
    const double hnorm = 1.0 + inf_norm(h);
    const double cn = 1.0 + inf_norm(c);

    KktSystem kkt(L, P, A, G, opt.static_reg);
    Solution sol;

    // Initial point.
    Vec x, y, z, s;
    {
        if (!kkt.factor_identity()) {
            sol.status = Status::NumericalError;
            return sol;
        }
        Vec rhs(n + p + m);
        rhs << Vec::Zero(n), b, h;
        Vec primal = kkt.solve(rhs, opt.refine_steps);
        x = primal.head(n);
        s = -primal.tail(m);
        rhs << -c, Vec::Zero(p), Vec::Zero(m);
        Vec dual = kkt.solve(rhs, opt.refine_steps);
        y = dual.segment(n, p);
        z = dual.tail(m);
        shift_into_cone(L, s);
        shift_into_cone(L, z);
    }

    const Vec e = identity_element(L);
    const int degree = std::max(L.degree(), 1);
    Scaling W;
    Vec lambda;

    struct Snapshot {
        Vec x, y, z, s;
        double score = kInf;
        int iteration = 0;
    } best;

    int stall_count = 0;
    bool converged = false;
    int iter = 0;
    for (; iter <= opt.max_iterations; ++iter) {
        Vec Px = P.selfadjointView<Eigen::Lower>() * x;
        Vec rx = Px + c + A.transpose() * y + G.transpose() * z;
        Vec ry = A * x - b;
        Vec rz = G * x + s - h;
        const double gap = m > 0 ? s.dot(z) : 0.0;
        const double mu = gap / degree;
        const double pobj = 0.5 * x.dot(Px) + c.dot(x);
        const double pres = std::max(inf_norm(ry) / bnorm, inf_norm(rz) / hnorm);
        const double dres = inf_norm(rx) / cn;
        // Gaps are tested in the caller's objective units.
        const double relgap = gap / std::max(std::abs(pobj), 1e-300);
        const double absgap = gap / eq.cost;

        if (opt.verbose) {
            std::cerr << "ipm " << iter << " pobj=" << pobj << " pres=" << pres << " dres=" << dres
                      << " gap=" << gap << "\n";
        }
        const double score = std::max({pres, dres, std::min(absgap, relgap)});
        if (score < best.score) best = {x, y, z, s, score, iter};
        if (pres <= opt.feas_tol && dres <= opt.feas_tol && (absgap <= opt.gap_abs_tol || relgap <= opt.gap_rel_tol)) {
            converged = true;
            break;
        }
        if (iter == opt.max_iterations) break;

        if (!compute_scaling(L, s, z, W, lambda)) {
            if (opt.verbose) std::cerr << "ipm: iterate left the cone interior\n";
            break;
        }
        if (!kkt.factor(W)) {
            if (opt.verbose) std::cerr << "ipm: KKT factorization failed\n";
            break;
        }

        auto direction = [&](const Vec& u, Vec& dx, Vec& dy, Vec& dz, Vec& ds_scaled) {
            Vec winv_u;
            apply_scaling(L, W, u, winv_u, true);
            Vec rhs(n + p + m);
            rhs << -rx, -ry, -rz - winv_u;
            Vec d = kkt.solve(rhs, opt.refine_steps);
            dx = d.head(n);
            dy = d.segment(n, p);
            dz = d.tail(m);
            Vec dz_scaled;
            apply_scaling(L, W, dz, dz_scaled, true);
            ds_scaled = u - dz_scaled;
            return dz_scaled;
        };

        // Predictor.
        Vec dx, dy, dz, dsw;
        Vec dzw = direction(-lambda, dx, dy, dz, dsw);
        double alpha_aff = m > 0 ? std::min({1.0, max_step(L, lambda, dsw), max_step(L, lambda, dzw)}) : 1.0;
        double sigma = 0.0;
        if (m > 0) {
            const double ratio = (lambda + alpha_aff * dsw).dot(lambda + alpha_aff * dzw) / lambda.squaredNorm();
            sigma = std::clamp(std::pow(std::max(ratio, 0.0), 3.0), 0.0, 1.0);
        }

        // Corrector.
        Vec xi = sigma * mu * e - circ(L, lambda, lambda) - circ(L, dsw, dzw);
        Vec u = inv_circ(L, lambda, xi);
        dzw = direction(u, dx, dy, dz, dsw);
        double alpha = 1.0;
        if (m > 0) alpha = std::min(1.0, 0.99 * std::min(max_step(L, lambda, dsw), max_step(L, lambda, dzw)));
        if (!std::isfinite(alpha) || alpha <= 0.0) {
            if (opt.verbose) std::cerr << "ipm: no admissible step\n";
            break;
        }

        Vec ds;
        apply_scaling(L, W, dsw, ds, true);
        // Back off when rounding puts the unscaled iterate on the cone boundary.
        for (int bt = 0; bt < 30 && m > 0; ++bt) {
            if (interior(L, s + alpha * ds) && interior(L, z + alpha * dz)) break;
            alpha *= 0.7;
        }
        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;

        stall_count = alpha < 1e-8 ? stall_count + 1 : 0;
        if (stall_count >= 5) break;
    }

    Status status;
    if (converged) {
        status = Status::Optimal;
    } else {
        x = best.x;
        y = best.y;
        z = best.z;
        s = best.s;
        if (best.score <= opt.inaccurate_tol) {
            status = Status::OptimalInaccurate;
        } else if (iter >= opt.max_iterations) {
            status = Status::MaxIterations;
        } else {
            status = stall_count >= 5 ? Status::Stalled : Status::NumericalError;
        }
    }

    sol.status = status;
    sol.iterations = iter;
    sol.x = eq.col.cwiseProduct(x);
    sol.y = eq.row_a.cwiseProduct(y) / eq.cost;
    sol.z = eq.row_g.cwiseProduct(z) / eq.cost;
    sol.s = s.cwiseQuotient(eq.row_g);
    sol.objective = prog.objective(sol.x);
    sol.primal_residual = std::max(inf_norm(prog.A * sol.x - prog.b), inf_norm(prog.G * sol.x + sol.s - prog.h));
    sol.dual_residual = inf_norm(prog.P * sol.x + prog.c + prog.A.transpose() * sol.y + prog.G.transpose() * sol.z);
    sol.gap = m > 0 ? sol.s.dot(sol.z) : 0.0;
    return sol;
}

std::unique_ptr<ConicSolver> make_default_solver(const SolverOptions& options) {
    return std::make_unique<InteriorPointSolver>(options);
}

}  // namespace dwc::conic
