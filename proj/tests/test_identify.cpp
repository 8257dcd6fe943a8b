#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "oma/compare.hpp"
#include "oma/errors.hpp"
#include "oma/identify.hpp"
#include "oma/io.hpp"
#include "oma/simulator.hpp"
#include "oma/spectral.hpp"

using namespace oma;

namespace {

constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;

/// |H(f)|^2 of a displacement SDOF with unit static gain.
double lorentzian(double f, double fn, double zeta) {
    const double r = f / fn;
    const double a = 1.0 - r * r;
    const double b = 2.0 * zeta * r;
    return 1.0 / (a * a + b * b);
}

/// Cross-PSD matrix built from modal outer products with Lorentzian
/// auto-spectra (the rank-one synthesis the method rests on).
CrossSpectralMatrix synthetic_csd(const std::vector<double>& fn, const std::vector<double>& zeta,
                                  const std::vector<Eigen::VectorXd>& shapes, double df,
                                  int n_lines, double floor = 1e-12) {
    const int m = static_cast<int>(shapes.front().size());
    CrossSpectralMatrix g;
    for (int c = 0; c < m; ++c) g.channel_nodes.push_back(c);
    g.frequencies_hz.resize(n_lines);
    g.matrices.assign(n_lines, Eigen::MatrixXcd::Zero(m, m));
    for (int k = 0; k < n_lines; ++k) {
        g.frequencies_hz[k] = k * df;
        Eigen::MatrixXcd line = Eigen::MatrixXcd::Identity(m, m) * floor;
        for (std::size_t j = 0; j < fn.size(); ++j) {
            const double p = lorentzian(g.frequencies_hz[k], fn[j], zeta[j]);
            line += p * (shapes[j] * shapes[j].transpose()).cast<Complex>();
        }
        g.matrices[k] = line;
    }
    return g;
}

}  // namespace

TEST_SUITE_BEGIN("identify");

TEST_CASE("sv spectrum of a scalar line") {
    CrossSpectralMatrix g;
    g.channel_nodes = {0};
    g.frequencies_hz = {0.0, 1.0, 2.0};
    g.matrices = {Eigen::MatrixXcd::Constant(1, 1, 0.5),
                  Eigen::MatrixXcd::Constant(1, 1, 2.5),
                  Eigen::MatrixXcd::Constant(1, 1, 1.0)};
    const auto sv = sv_spectrum(g);
    CHECK(sv.singular_values(1, 0) == doctest::Approx(2.5));
    CHECK(std::abs(sv.first_vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(sv.failed_lines.empty());
}

TEST_CASE("sv spectrum recovers a synthetic rank-one line") {
    Eigen::VectorXcd phi(4);
    phi << Complex(0.3, 0.1), Complex(-0.5, 0.0), Complex(0.7, -0.2), Complex(0.1, 0.05);
    phi.normalize();
    CrossSpectralMatrix g;
    g.channel_nodes = {0, 1, 2, 3};
    g.frequencies_hz = {1.0};
    g.matrices = {3.7 * (phi * phi.adjoint())};

    const auto sv = sv_spectrum(g);
    CHECK(sv.singular_values(0, 0) == doctest::Approx(3.7).epsilon(1e-12));
    for (int j = 1; j < 4; ++j) CHECK(sv.singular_values(0, j) <= 1e-10);
    const Eigen::VectorXcd u1 = sv.first_vectors.row(0).transpose();
    CHECK(std::abs(u1.dot(phi)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(u1.norm() - 1.0) <= 1e-10);
}

TEST_CASE("singular values of a hermitian psd line equal its eigenvalues") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Random(5, 5);
    Eigen::MatrixXcd psd = a * a.adjoint();
    CrossSpectralMatrix g;
    g.channel_nodes = {0, 1, 2, 3, 4};
    g.frequencies_hz = {1.0};
    g.matrices = {psd};
    const auto sv = sv_spectrum(g);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(psd);
    Eigen::VectorXd lam = eig.eigenvalues().reverse();
    for (int j = 0; j < 5; ++j) {
        CHECK(sv.singular_values(0, j) == doctest::Approx(lam(j)).epsilon(1e-9));
    }
}

TEST_CASE("find_peaks basics") {
    std::vector<double> freqs(512);
    for (int k = 0; k < 512; ++k) freqs[k] = k * 0.5;
    PeakConfig cfg;
    cfg.band_lo_hz = 1.0;
    cfg.band_hi_hz = 250.0;
    cfg.min_prominence_rel = 0.05;
    cfg.min_separation_hz = 10.0;
    cfg.refine_location = false;

    SUBCASE("monotone curve has no peaks") {
        Eigen::VectorXd ramp(512);
        for (int k = 0; k < 512; ++k) ramp(k) = k;
        CHECK(find_peaks(freqs, ramp, cfg).empty());
    }

    SUBCASE("two lorentzian bumps are found at their bins") {
        Eigen::VectorXd curve(512);
        for (int k = 0; k < 512; ++k) {
            curve(k) = lorentzian(freqs[k], 50.0, 0.02) + lorentzian(freqs[k], 150.0, 0.02);
        }
        const auto peaks = find_peaks(freqs, curve, cfg);
        REQUIRE(peaks.size() == 2);
        CHECK(peaks[0].bin == 100);
        CHECK(peaks[1].bin == 300);
        CHECK(peaks[0].frequency_hz == doctest::Approx(50.0));
    }

    SUBCASE("plateau resolves to its leftmost bin") {
        Eigen::VectorXd curve = Eigen::VectorXd::Zero(512);
        curve.segment(100, 3).setConstant(5.0);
        const auto peaks = find_peaks(freqs, curve, cfg);
        REQUIRE(peaks.size() == 1);
        CHECK(peaks[0].bin == 100);
    }

    SUBCASE("empty band throws") {
        PeakConfig bad = cfg;
        bad.band_lo_hz = 200.0;
        bad.band_hi_hz = 100.0;
        Eigen::VectorXd curve = Eigen::VectorXd::Ones(512);
        CHECK_THROWS_AS(find_peaks(freqs, curve, bad), InvalidArgument);
    }

    SUBCASE("separation keeps the more prominent of a close pair") {
        Eigen::VectorXd curve = Eigen::VectorXd::Zero(512);
        curve(100) = 5.0;
        curve(110) = 8.0;  // 5 Hz away, under the 10 Hz separation
        const auto peaks = find_peaks(freqs, curve, cfg);
        REQUIRE(peaks.size() == 1);
        CHECK(peaks[0].bin == 110);
    }

    SUBCASE("expected_modes keeps the most prominent subset") {
        Eigen::VectorXd curve = Eigen::VectorXd::Zero(512);
        curve(80) = 2.0;
        curve(160) = 8.0;
        curve(240) = 5.0;
        PeakConfig two = cfg;
        two.expected_modes = 2;
        const auto peaks = find_peaks(freqs, curve, two);
        REQUIRE(peaks.size() == 2);
        CHECK(peaks[0].bin == 160);
        CHECK(peaks[1].bin == 240);
    }
}

TEST_CASE("phase alignment recovers a rotated real vector") {
    Eigen::VectorXd base(5);
    base << 1.0, -0.5, 0.25, 0.8, -0.1;

    double imag = -1.0;
    const auto same = phase_aligned_real(base.cast<Complex>(), &imag);
    CHECK((same - base).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(imag <= 1e-14);

    const Complex rot = std::polar(1.0, 0.77);
    Eigen::VectorXcd rotated = base.cast<Complex>() * rot;
    const auto back = phase_aligned_real(rotated, &imag);
    const double sign = back.dot(base) > 0 ? 1.0 : -1.0;
    CHECK((sign * back - base).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(imag <= 1e-12);
}

TEST_CASE("half-power damping on an analytic sdof curve") {
    const double fn = 10.0;
    const double zeta = 0.02;
    const double df = 0.005;
    const int n = 4001;
    std::vector<double> freqs(n);
    Eigen::VectorXd curve(n);
    int peak = 0;
    for (int k = 0; k < n; ++k) {
        freqs[k] = k * df;
        curve(k) = lorentzian(freqs[k], fn, zeta);
        if (curve(k) > curve(peak)) peak = k;
    }
    const double z = half_power_damping(freqs, curve, peak);
    CHECK(z >= 0.016);
    CHECK(z <= 0.024);
}

TEST_CASE("half-power damping of a symmetric triangle is exact") {
    const double df = 0.1;
    const int n = 201;
    std::vector<double> freqs(n);
    for (int k = 0; k < n; ++k) freqs[k] = k * df;
    Eigen::VectorXd curve = Eigen::VectorXd::Zero(n);
    const int p = 100;
    const double w_hz = 2.0;  // full width at half height: crossings at +-w/2
    for (int k = 0; k < n; ++k) {
        const double d = std::abs(freqs[k] - freqs[p]);
        curve(k) = std::max(0.0, 1.0 - d / w_hz);
    }
    const double z = half_power_damping(freqs, curve, p);
    CHECK(z == doctest::Approx(w_hz / (2.0 * freqs[p])).epsilon(1e-12));
}

TEST_CASE("half-power damping flags unresolved bandwidths") {
    std::vector<double> freqs = {0.0, 1.0, 2.0, 3.0, 4.0};
    Eigen::VectorXd at_edge(5);
    at_edge << 0.9, 1.0, 0.9, 0.8, 0.7;  // left crossing runs off the grid
    CHECK_THROWS_AS(half_power_damping(freqs, at_edge, 1), BandwidthUnresolved);

    Eigen::VectorXd overlapped(5);
    overlapped << 0.2, 0.8, 0.7, 1.5, 0.1;  // rises above the peak to the right
    CHECK_THROWS_AS(half_power_damping(freqs, overlapped, 1), BandwidthUnresolved);
}

TEST_CASE("refined half-power damping survives welch estimator noise") {
    // white-noise-driven SDOF record with known damping
    SystemMatrices sys;
    const double fn = 35.7;
    const double zeta = 0.01;
    sys.stiffness = Eigen::MatrixXd::Constant(1, 1, std::pow(2.0 * kPi * fn, 2));
    sys.mass = Eigen::MatrixXd::Constant(1, 1, 1.0);
    sys.dof_map = {{0, DofKind::Translation}};
    sys.n_nodes = 1;
    Eigen::MatrixXd c(1, 1);
    c << 2.0 * zeta * 2.0 * kPi * fn;

    ExcitationSpec exc;
    exc.seed = 2024;
    const auto force = generate_excitation(exc, sys, 2048.0, 240.0);
    const auto acc = newmark_integrate(sys, c, force);

    SpectralConfig fine;
    fine.segment_length = 32768;
    fine.overlap_fraction = 0.75;
    std::vector<double> freqs;
    const Eigen::VectorXd psd = welch_auto_psd(acc.samples.col(0), 2048.0, fine, &freqs);
    const auto z = refined_half_power_damping(freqs, psd, fn, 3.0);
    REQUIRE(z.has_value());
    CHECK(std::abs(*z - zeta) / zeta <= 0.5);
}

TEST_CASE("fdd on a synthetic two-mode csd recovers both shapes") {
    Eigen::VectorXd phi1(6), phi2(6);
    phi1 << 0.2, 0.5, 0.9, 1.0, 0.7, 0.3;
    phi2 << -0.6, -1.0, -0.4, 0.5, 1.0, 0.6;
    const auto g = synthetic_csd({50.0, 150.0}, {0.01, 0.008}, {phi1, phi2}, 0.5, 600);

    PeakConfig cfg;
    cfg.band_lo_hz = 5.0;
    cfg.band_hi_hz = 250.0;
    cfg.min_prominence_rel = 0.01;
    cfg.min_separation_hz = 10.0;
    const auto set = fdd_identify(g, cfg);
    REQUIRE(set.modes.size() == 2);
    CHECK(set.modes[0].frequency_hz == doctest::Approx(50.0));
    CHECK(set.modes[1].frequency_hz == doctest::Approx(150.0));
    CHECK(mac(set.modes[0].shape, phi1) >= 0.999);
    CHECK(mac(set.modes[1].shape, phi2) >= 0.999);
    CHECK(set.modes[0].flags.empty());
    CHECK(set.modes[1].imag_fraction <= 1e-9);

    // record-scale invariance: y -> alpha y scales every line by alpha^2
    auto scaled = g;
    for (auto& line : scaled.matrices) line *= 3.7 * 3.7;
    const auto set2 = fdd_identify(scaled, cfg);
    REQUIRE(set2.modes.size() == 2);
    for (int k = 0; k < 2; ++k) {
        CHECK(set2.modes[k].frequency_hz == set.modes[k].frequency_hz);
        CHECK((set2.modes[k].shape - set.modes[k].shape).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("pp identification is invariant under a record-wide rescale") {
    Eigen::VectorXd phi1(6), phi2(6);
    phi1 << 0.2, 0.5, 0.9, 1.0, 0.7, 0.3;
    phi2 << -0.6, -1.0, -0.4, 0.5, 1.0, 0.6;
    auto g = synthetic_csd({50.0, 150.0}, {0.01, 0.008}, {phi1, phi2}, 0.5, 600);
    const auto a = anpsd(g);

    PeakConfig cfg;
    cfg.band_lo_hz = 5.0;
    cfg.band_hi_hz = 250.0;
    cfg.min_prominence_rel = 0.01;
    cfg.min_separation_hz = 10.0;
    const int ref = 3;
    const auto base = pp_identify(g, a, ref, cfg);
    REQUIRE(base.modes.size() == 2);
    CHECK(mac(base.modes[0].shape, phi1) >= 0.999);

    // whole record scaled by alpha: G scales by alpha^2, ratios cancel
    auto scaled = g;
    for (auto& line : scaled.matrices) line *= 5.0 * 5.0;
    const auto same = pp_identify(scaled, anpsd(scaled), ref, cfg);
    REQUIRE(same.modes.size() == 2);
    for (int k = 0; k < 2; ++k) {
        CHECK(same.modes[k].frequency_hz == base.modes[k].frequency_hz);
        CHECK((same.modes[k].shape - base.modes[k].shape).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("pp falls back when the reference sits on a node line") {
    Eigen::VectorXd phi(4);
    phi << 1.0, 0.0, -0.8, 0.5;  // channel 1 is a node of the only mode
    const auto g = synthetic_csd({50.0}, {0.01}, {phi}, 0.5, 300, 1e-12);
    PeakConfig cfg;
    cfg.band_lo_hz = 5.0;
    cfg.band_hi_hz = 140.0;
    cfg.min_prominence_rel = 0.01;

    const auto set = pp_identify(g, anpsd(g), 1, cfg);
    REQUIRE(set.modes.size() == 1);
    bool flagged = false;
    for (const auto& f : set.modes[0].flags) {
        if (f == "reference-degenerate") flagged = true;
    }
    CHECK(flagged);
    CHECK(mac(set.modes[0].shape, phi) >= 0.999);
}

TEST_CASE("identification output is byte-for-byte deterministic") {
    Eigen::VectorXd phi1(6), phi2(6);
    phi1 << 0.2, 0.5, 0.9, 1.0, 0.7, 0.3;
    phi2 << -0.6, -1.0, -0.4, 0.5, 1.0, 0.6;
    const auto g = synthetic_csd({50.0, 150.0}, {0.01, 0.008}, {phi1, phi2}, 0.5, 600);
    PeakConfig cfg;
    cfg.band_lo_hz = 5.0;
    cfg.band_hi_hz = 250.0;
    cfg.min_prominence_rel = 0.01;
    const auto a = identified_to_json(fdd_identify(g, cfg));
    const auto b = identified_to_json(fdd_identify(g, cfg));
    CHECK(a == b);
}

TEST_CASE("frf identification flags low coherence and rejects silence") {
    FrfSet frf;
    const int n = 400;
    frf.channel_nodes = {0, 1, 2};
    frf.frequencies_hz.resize(n);
    frf.frf.resize(n, 3);
    frf.coherence.resize(n, 3);
    frf.line_valid.assign(n, 1);
    Eigen::VectorXd phi(3);
    phi << 0.4, 1.0, 0.7;
    for (int k = 0; k < n; ++k) {
        frf.frequencies_hz[k] = k * 0.5;
        const double h = std::sqrt(lorentzian(frf.frequencies_hz[k], 60.0, 0.02));
        frf.frf.row(k) = (phi * h).transpose().cast<Complex>();
        frf.coherence.row(k).setConstant(0.5);
    }
    PeakConfig cfg;
    cfg.band_lo_hz = 5.0;
    cfg.band_hi_hz = 150.0;
    cfg.min_prominence_rel = 0.01;
    const auto set = frf_identify(frf, cfg);
    REQUIRE(set.modes.size() == 1);
    CHECK(set.modes[0].frequency_hz == doctest::Approx(60.0));
    bool flagged = false;
    for (const auto& f : set.modes[0].flags) {
        if (f == "low-coherence") flagged = true;
    }
    CHECK(flagged);

    frf.frf.setZero();
    CHECK_THROWS_AS(frf_identify(frf, cfg), InvalidArgument);
}

TEST_SUITE_END();
