#pragma once

#include <Eigen/Dense>
#include <vector>

#include "oma/beam_model.hpp"
#include "oma/identify.hpp"

namespace oma {

/// Frequencies plus one real shape column per mode over a common node set.
/// The neutral carrier both ModalSet and IdentifiedModeSet convert into for
/// comparisons.
struct ShapeSet {
    std::vector<double> frequencies_hz;
    Eigen::MatrixXd shapes;  // rows = nodes, cols = modes
    std::vector<int> nodes;  // 0-based
};

ShapeSet to_shape_set(const ModalSet& m, int n_nodes);
ShapeSet to_shape_set(const IdentifiedModeSet& m);

struct MacMatrix {
    Eigen::MatrixXd values;  // rows = set A modes, cols = set B modes
    std::vector<double> frequencies_a_hz;
    std::vector<double> frequencies_b_hz;
};

/// MAC = (a.b)^2 / ((a.a)(b.b)); symmetric, scale- and sign-invariant.
double mac(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

MacMatrix mac_matrix(const ShapeSet& a, const ShapeSet& b);

/// Flips each shape to correlate positively with its nearest-frequency
/// reference mode and rescales to unit max magnitude (sign preserved).
/// Throws on an ambiguous pairing.
ShapeSet align(const ShapeSet& shapes, const ShapeSet& reference);

struct FrequencyErrorRow {
    int mode = 0;
    double f_a_hz = 0.0;
    double f_b_hz = 0.0;
    double relative_error = 0.0;  // (f_a - f_b) / f_b
};

std::vector<FrequencyErrorRow> frequency_error_table(const std::vector<double>& f_a,
                                                     const std::vector<double>& f_b);

}  // namespace oma
