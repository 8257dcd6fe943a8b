#include "oma/beam_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "oma/errors.hpp"

namespace oma {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double v, const char* what) {
    if (!(v > 0.0)) {
        throw InvalidArgument(std::string(what) + " must be strictly positive");
    }
}

}  // namespace

const char* boundary_name(Boundary b) {
    switch (b) {
        case Boundary::Cantilever: return "cantilever";
        case Boundary::ClampedClamped: return "clamped_clamped";
        case Boundary::PinnedPinned: return "pinned_pinned";
        case Boundary::ClampedPinned: return "clamped_pinned";
    }
    return "?";
}

Boundary boundary_from_name(const std::string& name) {
    if (name == "cantilever") return Boundary::Cantilever;
    if (name == "clamped_clamped") return Boundary::ClampedClamped;
    if (name == "pinned_pinned") return Boundary::PinnedPinned;
    if (name == "clamped_pinned") return Boundary::ClampedPinned;
    throw InvalidArgument("unknown boundary condition: " + name);
}

void validate(const BeamSpec& spec) {
    require_positive(spec.length_m, "length_m");
    require_positive(spec.ei, "ei");
    require_positive(spec.mass_per_length, "mass_per_length");
    if (spec.n_elements < 2) {
        throw InvalidArgument("n_elements must be >= 2");
    }
    if (spec.damping_ratio < 0.0 || spec.damping_ratio > 0.2) {
        throw InvalidArgument("damping_ratio must lie in [0, 0.2]");
    }
}

double frequency_constant(const BeamSpec& spec) {
    validate(spec);
    const double l4 = std::pow(spec.length_m, 4);
    return std::sqrt(spec.ei / (spec.mass_per_length * l4));
}

std::vector<int> SystemMatrices::translation_dofs() const {
    std::vector<int> out;
    for (int i = 0; i < n_dofs(); ++i) {
        if (dof_map[i].kind == DofKind::Translation) out.push_back(i);
    }
    return out;
}

std::vector<int> SystemMatrices::translation_nodes() const {
    std::vector<int> out;
    for (const auto& d : dof_map) {
        if (d.kind == DofKind::Translation) out.push_back(d.node);
    }
    return out;
}

std::pair<Eigen::Matrix4d, Eigen::Matrix4d> element_matrices(double ei, double mass_per_length,
                                                             double elem_length) {
    require_positive(ei, "ei");
    require_positive(mass_per_length, "mass_per_length");
    require_positive(elem_length, "elem_length");

    const double h = elem_length;
    const double h2 = h * h;

    Eigen::Matrix4d k;
    k << 12.0, 6.0 * h, -12.0, 6.0 * h,
         6.0 * h, 4.0 * h2, -6.0 * h, 2.0 * h2,
         -12.0, -6.0 * h, 12.0, -6.0 * h,
         6.0 * h, 2.0 * h2, -6.0 * h, 4.0 * h2;
    k *= ei / (h2 * h);

    Eigen::Matrix4d m;
    m << 156.0, 22.0 * h, 54.0, -13.0 * h,
         22.0 * h, 4.0 * h2, 13.0 * h, -3.0 * h2,
         54.0, 13.0 * h, 156.0, -22.0 * h,
         -13.0 * h, -3.0 * h2, -22.0 * h, 4.0 * h2;
    m *= mass_per_length * h / 420.0;

    return {k, m};
}

namespace {

/// Fixed global DOF indices for a boundary condition (node i: translation at
/// 2i, rotation at 2i+1).
std::vector<int> fixed_dofs(Boundary boundary, int n_nodes) {
    const int last = n_nodes - 1;
    switch (boundary) {
        case Boundary::Cantilever:
            return {0, 1};
        case Boundary::ClampedClamped:
            return {0, 1, 2 * last, 2 * last + 1};
        case Boundary::PinnedPinned:
            return {0, 2 * last};
        case Boundary::ClampedPinned:
            return {0, 1, 2 * last};
    }
    return {};
}

SystemMatrices assemble_impl(const BeamSpec& spec, const std::vector<int>& fixed) {
    const int n_nodes = spec.n_nodes();
    const int n_total = 2 * n_nodes;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_total, n_total);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n_total, n_total);

    const double h = spec.length_m / spec.n_elements;
    const auto [ke, me] = element_matrices(spec.ei, spec.mass_per_length, h);
    for (int e = 0; e < spec.n_elements; ++e) {
        const int i = 2 * e;
        K.block<4, 4>(i, i) += ke;
        M.block<4, 4>(i, i) += me;
    }

    std::vector<int> keep;
    keep.reserve(n_total);
    for (int i = 0; i < n_total; ++i) {
        if (std::find(fixed.begin(), fixed.end(), i) == fixed.end()) keep.push_back(i);
    }

    SystemMatrices sys;
    sys.n_nodes = n_nodes;
    const int nf = static_cast<int>(keep.size());
    sys.stiffness.resize(nf, nf);
    sys.mass.resize(nf, nf);
    for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) {
            sys.stiffness(a, b) = K(keep[a], keep[b]);
            sys.mass(a, b) = M(keep[a], keep[b]);
        }
    }
    sys.dof_map.reserve(nf);
    for (int g : keep) {
        sys.dof_map.push_back({g / 2, (g % 2 == 0) ? DofKind::Translation : DofKind::Rotation});
    }
    return sys;
}

}  // namespace

SystemMatrices assemble(const BeamSpec& spec) {
    validate(spec);
    return assemble_impl(spec, fixed_dofs(spec.boundary, spec.n_nodes()));
}

SystemMatrices assemble_unconstrained(const BeamSpec& spec) {
    validate(spec);
    return assemble_impl(spec, {});
}

ModalSolution solve_modal_full(const SystemMatrices& sys, int n_modes) {
    if (n_modes < 1 || n_modes > sys.n_dofs()) {
        throw InvalidArgument("n_modes must lie in [1, n_free_dofs]");
    }
    // Symmetric-definite pencil reduced through the Cholesky factor of M.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        sys.stiffness, sys.mass, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw NumericalFailure("generalized eigensolver failed to converge");
    }

    ModalSolution out;
    out.frequencies_hz.reserve(n_modes);
    out.vectors.resize(sys.n_dofs(), n_modes);
    for (int j = 0; j < n_modes; ++j) {
        const double lambda = std::max(solver.eigenvalues()(j), 0.0);
        const double w = std::sqrt(lambda);
        out.frequencies_hz.push_back(w / (2.0 * kPi));
        out.vectors.col(j) = solver.eigenvectors().col(j);

        // residual check ||K phi - w^2 M phi|| / ||K phi||; rigid-body modes
        // have K phi ~ 0 and are exempt (the ratio is 0/0 there)
        const Eigen::VectorXd kphi = sys.stiffness * out.vectors.col(j);
        const double res = (kphi - lambda * (sys.mass * out.vectors.col(j))).norm();
        const double ref = kphi.norm();
        const double rigid_scale =
            1e-10 * sys.stiffness.norm() * out.vectors.col(j).norm();
        if (ref > rigid_scale && res > 1e-8 * ref) {
            throw NumericalFailure("eigenpair residual too large at mode " + std::to_string(j + 1));
        }
    }
    return out;
}

ModalSet solve_modal(const SystemMatrices& sys, int n_modes) {
    const ModalSolution sol = solve_modal_full(sys, n_modes);

    ModalSet set;
    set.frequencies_hz = sol.frequencies_hz;
    set.normalization = ShapeNormalization::UnitMaxAbs;
    set.shapes = Eigen::MatrixXd::Zero(sys.n_nodes, n_modes);
    for (int j = 0; j < n_modes; ++j) {
        Eigen::VectorXd tr = Eigen::VectorXd::Zero(sys.n_nodes);
        for (int i = 0; i < sys.n_dofs(); ++i) {
            if (sys.dof_map[i].kind == DofKind::Translation) {
                tr(sys.dof_map[i].node) = sol.vectors(i, j);
            }
        }
        set.shapes.col(j) = unit_max_abs(tr);
    }
    return set;
}

namespace {

/// Scans for sign changes of a bounded characteristic function and bisects
/// each bracket to ~1e-13 relative.
std::vector<double> scan_roots(const std::function<double(double)>& f, int n, double x_start) {
    std::vector<double> roots;
    const double dx = 1e-3;
    double x = x_start;
    double fx = f(x);
    const double x_max = 40.0 + 4.0 * n;
    while (static_cast<int>(roots.size()) < n && x < x_max) {
        const double x2 = x + dx;
        const double fx2 = f(x2);
        if (fx == 0.0) {
            roots.push_back(x);
        } else if (fx * fx2 < 0.0) {
            double a = x, b = x2;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = f(mid);
                if (fm == 0.0 || (b - a) < 1e-14 * mid) {
                    a = b = mid;
                    break;
                }
                if (f(a) * fm < 0.0) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        x = x2;
        fx = fx2;
    }
    if (static_cast<int>(roots.size()) < n) {
        throw NumericalFailure("characteristic-equation root scan exhausted its interval");
    }
    return roots;
}

}  // namespace

std::vector<double> characteristic_roots(Boundary boundary, int n) {
    if (n < 1) throw InvalidArgument("n must be >= 1");
    switch (boundary) {
        case Boundary::PinnedPinned: {
            std::vector<double> r(n);
            for (int k = 0; k < n; ++k) r[k] = (k + 1) * kPi;
            return r;
        }
        case Boundary::Cantilever:
            // cos x cosh x = -1  <=>  cos x + sech x = 0
            return scan_roots([](double x) { return std::cos(x) + 1.0 / std::cosh(x); }, n, 0.05);
        case Boundary::ClampedClamped:
            // cos x cosh x = 1, skipping the trivial root at x = 0
            return scan_roots([](double x) { return std::cos(x) - 1.0 / std::cosh(x); }, n, 1.0);
        case Boundary::ClampedPinned:
            // tan x = tanh x, poles removed by the bounded form
            return scan_roots([](double x) { return std::sin(x) - std::cos(x) * std::tanh(x); }, n,
                              1.0);
    }
    throw InvalidArgument("unsupported boundary");
}

std::vector<double> analytical_frequencies(const BeamSpec& spec, int n_modes) {
    const double c = frequency_constant(spec);
    const auto roots = characteristic_roots(spec.boundary, n_modes);
    std::vector<double> f(n_modes);
    for (int k = 0; k < n_modes; ++k) {
        f[k] = roots[k] * roots[k] * c / (2.0 * kPi);
    }
    return f;
}

RayleighCoefficients rayleigh_coefficients(double zeta, double f_low_hz, double f_high_hz) {
    if (zeta < 0.0 || zeta >= 0.2) {
        throw InvalidArgument("zeta must lie in [0, 0.2)");
    }
    if (zeta == 0.0) return {0.0, 0.0};
    if (!(f_low_hz > 0.0) || !(f_high_hz > f_low_hz)) {
        throw InvalidArgument("rayleigh calibration needs 0 < f_low < f_high");
    }
    const double wl = 2.0 * kPi * f_low_hz;
    const double wh = 2.0 * kPi * f_high_hz;
    RayleighCoefficients c;
    c.alpha = 2.0 * zeta * wl * wh / (wl + wh);
    c.beta = 2.0 * zeta / (wl + wh);
    return c;
}

double modal_damping_ratio(const RayleighCoefficients& c, double f_hz) {
    const double w = 2.0 * kPi * f_hz;
    return c.alpha / (2.0 * w) + c.beta * w / 2.0;
}

Eigen::MatrixXd rayleigh_damping(const SystemMatrices& sys, double zeta, double f_low_hz,
                                 double f_high_hz) {
    const auto c = rayleigh_coefficients(zeta, f_low_hz, f_high_hz);
    return c.alpha * sys.mass + c.beta * sys.stiffness;
}

Eigen::VectorXd unit_max_abs(const Eigen::VectorXd& v) {
    if (v.size() == 0) throw InvalidArgument("empty vector");
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i));
        if (a > best) {
            best = a;
            imax = i;
        }
    }
    if (best == 0.0) throw InvalidArgument("zero vector has no UnitMaxAbs normalization");
    return v / v(imax);
}

}  // namespace oma
