#include "oma/compare.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oma/errors.hpp"

namespace oma {

ShapeSet to_shape_set(const ModalSet& m, int n_nodes) {
    ShapeSet s;
    s.frequencies_hz = m.frequencies_hz;
    s.shapes = m.shapes;
    s.nodes.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) s.nodes[i] = i;
    return s;
}

ShapeSet to_shape_set(const IdentifiedModeSet& m) {
    ShapeSet s;
    s.nodes = m.channel_nodes;
    s.frequencies_hz.reserve(m.modes.size());
    s.shapes.resize(static_cast<int>(m.channel_nodes.size()),
                    static_cast<int>(m.modes.size()));
    for (std::size_t j = 0; j < m.modes.size(); ++j) {
        s.frequencies_hz.push_back(m.modes[j].frequency_hz);
        s.shapes.col(static_cast<int>(j)) = m.modes[j].shape;
    }
    return s;
}

double mac(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw InvalidArgument("mac needs two equal-length vectors of size >= 2");
    }
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    if (!(aa > 0.0) || !(bb > 0.0)) throw InvalidArgument("mac is undefined for a zero vector");
    const double ab = a.dot(b);
    const double value = ab * ab / (aa * bb);
    if (value > 1.0 + 1e-12) throw NumericalFailure("mac exceeded its Cauchy-Schwarz bound");
    return std::min(value, 1.0);
}

namespace {

void require_same_nodes(const ShapeSet& a, const ShapeSet& b) {
    if (a.nodes == b.nodes) return;
    std::string msg = "node sets differ:";
    for (int n : a.nodes) {
        if (std::find(b.nodes.begin(), b.nodes.end(), n) == b.nodes.end()) {
            msg += " only-in-A:" + std::to_string(n + 1);
        }
    }
    for (int n : b.nodes) {
        if (std::find(a.nodes.begin(), a.nodes.end(), n) == a.nodes.end()) {
            msg += " only-in-B:" + std::to_string(n + 1);
        }
    }
    throw InvalidArgument(msg);
}

}  // namespace

MacMatrix mac_matrix(const ShapeSet& a, const ShapeSet& b) {
    require_same_nodes(a, b);
    MacMatrix m;
    m.frequencies_a_hz = a.frequencies_hz;
    m.frequencies_b_hz = b.frequencies_hz;
    m.values.resize(a.shapes.cols(), b.shapes.cols());
    for (int i = 0; i < a.shapes.cols(); ++i) {
        for (int j = 0; j < b.shapes.cols(); ++j) {
            m.values(i, j) = mac(a.shapes.col(i), b.shapes.col(j));
        }
    }
    return m;
}

ShapeSet align(const ShapeSet& shapes, const ShapeSet& reference) {
    require_same_nodes(shapes, reference);
    if (shapes.frequencies_hz.size() != reference.frequencies_hz.size()) {
        throw InvalidArgument("align needs matching mode counts");
    }
    const int n_modes = static_cast<int>(shapes.frequencies_hz.size());

    // nearest-frequency pairing with conflict detection
    std::vector<int> pair(n_modes, -1);
    std::vector<int> owner(n_modes, -1);
    for (int j = 0; j < n_modes; ++j) {
        int best = 0;
        double best_d = std::abs(shapes.frequencies_hz[j] - reference.frequencies_hz[0]);
        for (int r = 1; r < n_modes; ++r) {
            const double d = std::abs(shapes.frequencies_hz[j] - reference.frequencies_hz[r]);
            if (d < best_d) {
                best_d = d;
                best = r;
            }
        }
        if (owner[best] >= 0) {
            throw InvalidArgument("pairing conflict: modes " + std::to_string(owner[best] + 1) +
                                  " and " + std::to_string(j + 1) +
                                  " both match reference mode " + std::to_string(best + 1));
        }
        owner[best] = j;
        pair[j] = best;
    }

    ShapeSet out = shapes;
    for (int j = 0; j < n_modes; ++j) {
        Eigen::VectorXd v = shapes.shapes.col(j);
        const double inner = v.dot(reference.shapes.col(pair[j]));
        if (inner < 0.0) v = -v;
        const double peak = v.cwiseAbs().maxCoeff();
        if (!(peak > 0.0)) throw InvalidArgument("zero shape cannot be aligned");
        out.shapes.col(j) = v / peak;
    }
    return out;
}

std::vector<FrequencyErrorRow> frequency_error_table(const std::vector<double>& f_a,
                                                     const std::vector<double>& f_b) {
    if (f_a.size() != f_b.size()) {
        throw InvalidArgument("frequency_error_table needs equal mode counts");
    }
    std::vector<FrequencyErrorRow> rows(f_a.size());
    for (std::size_t k = 0; k < f_a.size(); ++k) {
        rows[k].mode = static_cast<int>(k) + 1;
        rows[k].f_a_hz = f_a[k];
        rows[k].f_b_hz = f_b[k];
        rows[k].relative_error = (f_a[k] - f_b[k]) / f_b[k];
    }
    return rows;
}

}  // namespace oma
