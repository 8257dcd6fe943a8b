#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace oma {

enum class Boundary { Cantilever, ClampedClamped, PinnedPinned, ClampedPinned };

const char* boundary_name(Boundary b);
Boundary boundary_from_name(const std::string& name);

/// One beam experiment: uniform Euler-Bernoulli beam, 2-DOF-per-node
/// (deflection + rotation) Hermite discretization.
struct BeamSpec {
    double length_m = 1.0;
    double ei = 212.139225;  // flexural rigidity EI [N m^2]
    double mass_per_length = 1.0;
    int n_elements = 10;
    Boundary boundary = Boundary::Cantilever;
    double damping_ratio = 0.01;  // target modal damping, [0, 0.2]

    int n_nodes() const { return n_elements + 1; }
};

/// Throws InvalidArgument when a field violates its invariants.
void validate(const BeamSpec& spec);

/// c = sqrt(EI / (m L^4)). The only physical scale that frequencies see:
/// f_n = (beta_n L)^2 c / (2 pi).
double frequency_constant(const BeamSpec& spec);

enum class DofKind { Translation, Rotation };

struct Dof {
    int node;  // 0-based
    DofKind kind;
};

/// Global FEM matrices over the free DOFs after boundary elimination.
struct SystemMatrices {
    Eigen::MatrixXd stiffness;
    Eigen::MatrixXd mass;
    std::vector<Dof> dof_map;  // free DOF index -> (node, kind)
    int n_nodes = 0;

    int n_dofs() const { return static_cast<int>(dof_map.size()); }
    /// Free-DOF indices that are translations, in node order.
    std::vector<int> translation_dofs() const;
    /// Nodes carrying a free translation, in ascending order (0-based).
    std::vector<int> translation_nodes() const;
};

enum class ShapeNormalization { MassNormalized, UnitMaxAbs };

/// Frequencies plus translational mode-shape samples at every node
/// (constrained nodes carry exact zeros).
struct ModalSet {
    std::vector<double> frequencies_hz;
    Eigen::MatrixXd shapes;  // rows = nodes, cols = modes
    ShapeNormalization normalization = ShapeNormalization::UnitMaxAbs;
};

/// Hermite-cubic beam element: 4x4 stiffness and consistent mass blocks
/// for DOFs (w_i, theta_i, w_j, theta_j).
std::pair<Eigen::Matrix4d, Eigen::Matrix4d> element_matrices(double ei,
                                                             double mass_per_length,
                                                             double elem_length);

SystemMatrices assemble(const BeamSpec& spec);

/// Assembly without any boundary elimination (free-free); used for
/// rigid-body-mode checks.
SystemMatrices assemble_unconstrained(const BeamSpec& spec);

/// Mass-normalized eigenvectors over the free DOFs: vectors^T M vectors = I.
struct ModalSolution {
    std::vector<double> frequencies_hz;
    Eigen::MatrixXd vectors;  // n_dofs x n_modes
};

ModalSolution solve_modal_full(const SystemMatrices& sys, int n_modes);

/// Lowest n_modes of K phi = w^2 M phi, reduced to translational nodal values
/// and normalized to UnitMaxAbs (largest-magnitude entry forced to +1).
ModalSet solve_modal(const SystemMatrices& sys, int n_modes);

/// Closed-form Euler-Bernoulli frequencies from the boundary condition's
/// characteristic equation.
std::vector<double> analytical_frequencies(const BeamSpec& spec, int n_modes);

/// Roots beta_n L of the characteristic equation, ascending.
std::vector<double> characteristic_roots(Boundary boundary, int n);

struct RayleighCoefficients {
    double alpha = 0.0;  // mass-proportional term
    double beta = 0.0;   // stiffness-proportional term
};

/// alpha, beta such that zeta(w) = alpha/(2w) + beta w/2 equals zeta at both
/// calibration frequencies.
RayleighCoefficients rayleigh_coefficients(double zeta, double f_low_hz, double f_high_hz);

double modal_damping_ratio(const RayleighCoefficients& c, double f_hz);

/// C = alpha M + beta K.
Eigen::MatrixXd rayleigh_damping(const SystemMatrices& sys, double zeta, double f_low_hz,
                                 double f_high_hz);

/// Scales v so its largest-|.| entry becomes +1 (ties: lowest index).
Eigen::VectorXd unit_max_abs(const Eigen::VectorXd& v);

}  // namespace oma
