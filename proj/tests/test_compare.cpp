#include <doctest.h>

#include <cmath>

#include "oma/beam_model.hpp"
#include "oma/compare.hpp"
#include "oma/errors.hpp"
#include "oma/simulator.hpp"

using namespace oma;

namespace {

ShapeSet simple_set(const std::vector<double>& freqs, const Eigen::MatrixXd& shapes) {
    ShapeSet s;
    s.frequencies_hz = freqs;
    s.shapes = shapes;
    for (int i = 0; i < shapes.rows(); ++i) s.nodes.push_back(i);
    return s;
}

}  // namespace

TEST_SUITE_BEGIN("compare");

TEST_CASE("mac fundamentals") {
    Eigen::VectorXd v(5);
    v << 1.0, -0.4, 0.3, 0.9, -0.2;
    CHECK(mac(v, v) == doctest::Approx(1.0));
    CHECK(mac(v, (-3.2 * v).eval()) == doctest::Approx(1.0));

    Eigen::VectorXd w(5);
    w << 0.1, 0.8, -0.5, 0.2, 0.7;
    CHECK(mac(v, w) == mac(w, v));
    CHECK(std::abs(mac((2.5 * v).eval(), (-0.7 * w).eval()) - mac(v, w)) <= 1e-12);

    CHECK_THROWS_AS(mac(Eigen::VectorXd::Zero(5), v), InvalidArgument);
    CHECK_THROWS_AS(mac(v, Eigen::VectorXd::Ones(4)), InvalidArgument);
}

TEST_CASE("mac stays within its bounds on random pairs") {
    GaussianSampler g(8);
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd a(7), b(7);
        for (int i = 0; i < 7; ++i) {
            a(i) = g.next();
            b(i) = g.next();
        }
        const double m = mac(a, b);
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
}

TEST_CASE("mac of the published cantilever mode-1 rows") {
    Eigen::VectorXd fem(11), fdd(11);
    fem << 0, 0.0164, 0.0633, 0.1357, 0.2289, 0.3385, 0.4601, 0.5899, 0.7246, 0.8619, 1;
    fdd << 0, 0.0149, 0.0599, 0.1328, 0.2288, 0.3414, 0.4644, 0.5936, 0.727, 0.8627, 1;
    CHECK(mac(fem, fdd) >= 0.999);
    CHECK(mac(fem, fdd) == doctest::Approx(0.9999823922).epsilon(1e-8));
}

TEST_CASE("mac matrix of pinned-pinned FEM modes is near identity") {
    BeamSpec spec;
    spec.boundary = Boundary::PinnedPinned;
    const auto modes = solve_modal(assemble(spec), 5);
    const auto s = to_shape_set(modes, spec.n_nodes());
    const auto mm = mac_matrix(s, s);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (i == j) {
                CHECK(mm.values(i, j) == doctest::Approx(1.0));
            } else {
                CHECK(mm.values(i, j) <= 1e-6);
            }
        }
    }
}

TEST_CASE("mac matrix handles single-mode sets and rejects node mismatches") {
    Eigen::MatrixXd one(4, 1);
    one << 0.2, 0.5, 1.0, 0.7;
    const auto s = simple_set({10.0}, one);
    const auto mm = mac_matrix(s, s);
    CHECK(mm.values.rows() == 1);
    CHECK(mm.values(0, 0) == doctest::Approx(1.0));

    auto other = s;
    other.nodes = {0, 1, 2, 4};
    CHECK_THROWS_WITH_AS(mac_matrix(s, other), doctest::Contains("only-in-B:5"),
                         InvalidArgument);
}

TEST_CASE("align flips negated shapes and is idempotent") {
    Eigen::MatrixXd ref_shapes(4, 2);
    ref_shapes << 0.2, -0.6, 0.5, -1.0, 1.0, 0.4, 0.7, 1.0;
    const auto ref = simple_set({10.0, 25.0}, ref_shapes);

    auto test = ref;
    test.shapes.col(0) *= -1.0;
    const auto aligned = align(test, ref);
    CHECK((aligned.shapes.col(0) - ref.shapes.col(0)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((aligned.shapes.col(1) - ref.shapes.col(1)).cwiseAbs().maxCoeff() <= 1e-14);

    const auto twice = align(aligned, ref);
    CHECK((twice.shapes - aligned.shapes).cwiseAbs().maxCoeff() == 0.0);

    const auto unchanged = align(ref, ref);
    CHECK((unchanged.shapes - ref.shapes).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("align reports ambiguous nearest-frequency pairings") {
    Eigen::MatrixXd shapes(3, 2);
    shapes << 1.0, 0.5, 0.4, 1.0, 0.2, -0.3;
    auto ref = simple_set({10.0, 100.0}, shapes);
    auto ident = simple_set({11.0, 12.0}, shapes);  // both nearest to mode 1
    CHECK_THROWS_WITH_AS(align(ident, ref), doctest::Contains("pairing conflict"),
                         InvalidArgument);
}

TEST_CASE("frequency error table reproduces the published deviations") {
    const auto zero = frequency_error_table({5.0, 10.0}, {5.0, 10.0});
    CHECK(zero[0].relative_error == 0.0);
    CHECK(zero[1].relative_error == 0.0);

    // beam 3 mode 5, FEM row vs analytical row
    const auto t7 = frequency_error_table({612.95}, {572.20});
    CHECK(t7[0].relative_error == doctest::Approx(0.0712).epsilon(0.01));
    // beam 1 mode 1, PP row vs FEM row
    const auto t5 = frequency_error_table({8.50}, {8.15});
    CHECK(t5[0].relative_error == doctest::Approx(0.0429).epsilon(0.01));

    CHECK_THROWS_AS(frequency_error_table({1.0}, {1.0, 2.0}), InvalidArgument);
}

TEST_SUITE_END();
