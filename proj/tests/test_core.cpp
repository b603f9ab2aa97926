#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <set>
#include <unsupported/Eigen/MatrixFunctions>

#include "latmon/geometry.hpp"
#include "latmon/integrator.hpp"
#include "latmon/mode_space.hpp"
#include "latmon/partitions.hpp"
#include "latmon/rng.hpp"
#include "latmon/trajectory.hpp"

using namespace latmon;

static constexpr double PI = 3.14159265358979323846;

TEST_CASE("stream splitter: no collisions across 10^4 trajectories") {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (int i = 0; i < 10000; ++i) {
        Rng r(12345, i);
        seen.insert({r.next_u64(), r.next_u64()});
    }
    CHECK(seen.size() == 10000);
    // same (master, index) reproduces the stream
    Rng a(9, 3), b(9, 3);
    for (int i = 0; i < 5; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform and normal draws are sane") {
    Rng r(1, 0);
    double acc = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        acc += u;
    }
    CHECK(acc / 20000 == doctest::Approx(0.5).epsilon(0.02));
    double m = 0.0, v = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double x = r.normal();
        m += x;
        v += x * x;
    }
    CHECK(m / 20000 == doctest::Approx(0.0).epsilon(0.05));
    CHECK(v / 20000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("diffraction coefficients: traveling waves") {
    LatticeSpec lat{4, Boundary::periodic};
    auto jjj = compute_jjj(lat, {ProbeKind::traveling, PI, 0.0});
    std::vector<double> expect = {1.0, -1.0, 1.0, -1.0};
    for (int j = 0; j < 4; ++j) {
        CHECK(jjj[j].real() == doctest::Approx(expect[j]));
        CHECK(jjj[j].imag() == doctest::Approx(0.0).epsilon(1e-12));
    }
    LatticeSpec lat3{3, Boundary::periodic};
    auto j3 = compute_jjj(lat3, {ProbeKind::traveling, 2.0 * PI / 3.0, 0.0});
    CHECK(std::abs(j3[0] - cd(1, 0)) < 1e-12);
    CHECK(std::abs(j3[1] - std::exp(cd(0, 2.0 * PI / 3.0))) < 1e-12);
    CHECK(std::abs(j3[2] - std::exp(cd(0, 4.0 * PI / 3.0))) < 1e-12);
}

TEST_CASE("diffraction coefficients: standing waves give the stated patterns") {
    LatticeSpec lat{5, Boundary::open};
    auto jjj = compute_jjj(lat, {ProbeKind::standing, PI / 4.0, PI / 2.0});
    std::vector<double> expect = {0.0, 0.5, 1.0, 0.5, 0.0};
    for (int j = 0; j < 5; ++j) CHECK(std::abs(jjj[j] - cd(expect[j], 0)) < 1e-12);

    LatticeSpec lat4{4, Boundary::periodic};
    auto j2 = compute_jjj(lat4, {ProbeKind::standing, PI / 2.0, 0.0});
    std::vector<double> expect2 = {1.0, 0.0, 1.0, 0.0};
    for (int j = 0; j < 4; ++j) CHECK(std::abs(j2[j] - cd(expect2[j], 0)) < 1e-12);
}

TEST_CASE("partition: even/odd and odd-only two-mode geometries") {
    LatticeSpec lat{4, Boundary::periodic};
    auto g = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    CHECK(g.R == 2);
    CHECK(std::abs(g.beta[0] - cd(1, 0)) < 1e-12);
    CHECK(std::abs(g.beta[1] - cd(-1, 0)) < 1e-12);
    CHECK(g.mode_of_site == std::vector<int>({0, 1, 0, 1}));
    CHECK(g.coupling[0][1] == 2); // each site has two opposite-parity neighbors
    CHECK(g.coupling[0][0] == 0);
    CHECK(g.collective_g() == doctest::Approx(2.0));

    auto g2 = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    CHECK(g2.R == 2);
    CHECK(std::abs(g2.beta[0] - cd(1, 0)) < 1e-12);
    CHECK(std::abs(g2.beta[1]) < 1e-12);
}

TEST_CASE("partition: three-mode RGB and RGBG structures") {
    LatticeSpec lat9{9, Boundary::periodic};
    auto rgb = partition_modes(compute_jjj(lat9, {ProbeKind::traveling, 2.0 * PI / 3.0, 0.0}), lat9);
    CHECK(rgb.R == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(rgb.coupling[i][j] > 0); // tunneling between all mode pairs
    CHECK(rgb.collective_g() == doctest::Approx(1.0));
    // alternating equal-size pattern: symmetric coupling, row sums = coordination
    for (int i = 0; i < 3; ++i) {
        int row = 0;
        for (int j = 0; j < 3; ++j) {
            row += rgb.coupling[i][j];
            CHECK(rgb.coupling[i][j] == rgb.coupling[j][i]);
        }
        CHECK(row == 2);
    }

    LatticeSpec lat8{8, Boundary::periodic};
    auto rgbg = partition_modes(compute_jjj(lat8, {ProbeKind::standing, PI / 4.0, PI / 2.0}), lat8);
    CHECK(rgbg.R == 3);
    // modes in first-seen order: R (J=0), G (J=1/2), B (J=1); pattern RGBGRGBG
    CHECK(rgbg.mode_of_site == std::vector<int>({0, 1, 2, 1, 0, 1, 2, 1}));
    CHECK(rgbg.coupling[0][2] == 0); // no R-B tunneling
    CHECK(rgbg.coupling[2][0] == 0);
    CHECK(rgbg.coupling[0][1] == 2);
    CHECK(rgbg.collective_g() == doctest::Approx(std::sqrt(2.0)));
    for (int i = 0; i < 3; ++i) {
        int row = 0;
        for (int j = 0; j < 3; ++j) row += rgbg.coupling[i][j];
        CHECK(row == 2);
    }
}

TEST_CASE("partition: degenerate grouping flags a local measurement") {
    LatticeSpec lat{4, Boundary::periodic};
    auto g = partition_modes({cd(0.1, 0), cd(0.2, 0), cd(0.3, 0), cd(0.4, 0)}, lat);
    CHECK(g.R == 4);
    CHECK(g.local_warning);
}

TEST_CASE("partition: re-running on beta values reproduces the partition") {
    LatticeSpec lat8{8, Boundary::periodic};
    auto g = partition_modes(compute_jjj(lat8, {ProbeKind::standing, PI / 4.0, PI / 2.0}), lat8);
    std::vector<cd> again;
    for (int m : g.mode_of_site) again.push_back(g.beta[m]);
    auto g2 = partition_modes(again, lat8);
    CHECK(g2.R == g.R);
    CHECK(g2.mode_of_site == g.mode_of_site);
}

TEST_CASE("partition: traveling delta = 2 pi s / R gives equal mode sizes") {
    for (int R : {2, 3}) {
        int M = 6 * R;
        LatticeSpec lat{M, Boundary::periodic};
        auto g = partition_modes(compute_jjj(lat, {ProbeKind::traveling, 2.0 * PI / R, 0.0}), lat);
        REQUIRE(g.R == R);
        for (int m = 0; m < R; ++m) CHECK(g.mode_size[m] == M / R);
    }
}

TEST_CASE("partition basis: colex order and dimensions") {
    PartitionBasis b2(2, 4);
    CHECK(b2.dim() == 5);
    for (int l = 0; l <= 4; ++l) {
        CHECK(b2.occupation(l)[0] == l);
        CHECK(b2.occupation(l)[1] == 4 - l);
    }
    PartitionBasis b3(3, 10);
    CHECK(b3.dim() == 66); // (N+1)(N+2)/2
    CHECK(b3.occupation(0) == std::vector<int>({0, 0, 10}));
    CHECK(b3.occupation(1) == std::vector<int>({1, 0, 9}));
    // hop moves exactly one atom
    auto k2 = b3.hop_index(1, 2, 0);
    REQUIRE(k2 >= 0);
    CHECK(b3.occupation(k2) == std::vector<int>({2, 0, 8}));
}

TEST_CASE("effective operator: single particle and odd-probe diagonal") {
    LatticeSpec lat{4, Boundary::periodic};
    auto gmin = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    double J = 0.7, gamma = 0.3;
    auto op = build_effective_operator(gmin, J, 0.0, gamma, 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd(op.heff);
    CHECK(H(0, 1).real() == doctest::Approx(-J));
    CHECK(H(1, 0).real() == doctest::Approx(-J));
    CHECK(H(0, 0).imag() == doctest::Approx(-gamma / 2.0)); // |beta . N|^2 = 1 both
    CHECK(H(1, 1).imag() == doctest::Approx(-gamma / 2.0));

    auto godd = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    auto op2 = build_effective_operator(godd, J, 0.0, gamma, 2);
    for (int l = 0; l <= 2; ++l)
        CHECK(op2.cdagc[l] == doctest::Approx(gamma * l * l)); // (0, 1, 4) * gamma
}

TEST_CASE("effective operator: hopping amplitudes and RGBG selection rule") {
    LatticeSpec lat{4, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    int N = 3;
    auto op = build_effective_operator(geom, 1.0, 0.0, 0.0, N);
    Eigen::MatrixXcd H = Eigen::MatrixXcd(op.heff);
    for (int l = 0; l < N; ++l) {
        double lm = -std::sqrt(double(l + 1) * double(N - l)); // <l+1|H|l> = -J sqrt((l+1) m)
        CHECK(H(l + 1, l).real() == doctest::Approx(lm));
        CHECK(H(l, l + 1).real() == doctest::Approx(lm));
    }

    LatticeSpec lat8{8, Boundary::periodic};
    auto rgbg = partition_modes(compute_jjj(lat8, {ProbeKind::standing, PI / 4.0, PI / 2.0}), lat8);
    auto op3 = build_effective_operator(rgbg, 1.0, 0.0, 0.1, 1);
    Eigen::MatrixXcd H3 = Eigen::MatrixXcd(op3.heff);
    PartitionBasis basis(3, 1);
    auto iR = basis.index({1, 0, 0}), iG = basis.index({0, 1, 0}), iB = basis.index({0, 0, 1});
    CHECK(std::abs(H3(iR, iB)) == 0.0); // R-B forbidden
    CHECK(std::abs(H3(iB, iR)) == 0.0);
    CHECK(std::abs(H3(iR, iG)) == doctest::Approx(1.0));
    CHECK(std::abs(H3(iG, iB)) == doctest::Approx(1.0));
}

TEST_CASE("initial superfluid: binomial amplitudes and normalization") {
    LatticeSpec lat{4, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    auto st = initial_superfluid(geom, 2);
    CHECK(st.amps[0].real() == doctest::Approx(0.5));
    CHECK(st.amps[1].real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(st.amps[2].real() == doctest::Approx(0.5));
    auto st1 = initial_superfluid(geom, 1);
    CHECK(st1.amps[0].real() == doctest::Approx(1.0 / std::sqrt(2.0)));
    for (int N : {1, 2, 7, 30}) {
        auto s = initial_superfluid(geom, N);
        CHECK(s.norm2() == doctest::Approx(1.0).epsilon(1e-12));
    }
    // unequal mode sizes: multinomial weights with p_m = M_m / M
    LatticeSpec lat8{8, Boundary::periodic};
    auto rgbg = partition_modes(compute_jjj(lat8, {ProbeKind::standing, PI / 4.0, PI / 2.0}), lat8);
    auto s3 = initial_superfluid(rgbg, 3);
    CHECK(s3.norm2() == doctest::Approx(1.0).epsilon(1e-12));
    PartitionBasis basis(3, 3);
    // all three atoms in the half-lattice G mode: (1/2)^3; in the quarter R mode: (1/4)^3
    CHECK(std::norm(s3.amps[basis.index({0, 3, 0})]) == doctest::Approx(0.125));
    CHECK(std::norm(s3.amps[basis.index({3, 0, 0})]) == doctest::Approx(1.0 / 64.0));
}

TEST_CASE("apply_jump: diffraction minimum flips the balanced component out") {
    LatticeSpec lat{4, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    auto op = build_effective_operator(geom, 1.0, 0.0, 1.0, 2);
    auto st = initial_superfluid(geom, 2);
    apply_jump(st, op);
    // factors (-2, 0, +2) on (0,2),(1,1),(2,0), renormalized
    CHECK(std::abs(st.amps[0]) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(st.amps[1]) == doctest::Approx(0.0));
    CHECK(std::abs(st.amps[2]) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(st.amps[0].real() * st.amps[2].real() < 0.0); // opposite signs

    // kernel: odd-probe jump on a state concentrated at N_odd = 0
    auto godd = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    auto op2 = build_effective_operator(godd, 1.0, 0.0, 1.0, 2);
    ModeState kern;
    kern.basis = op2.basis;
    kern.amps = Eigen::VectorXcd::Zero(3);
    kern.amps[0] = 1.0;
    CHECK_THROWS(apply_jump(kern, op2));
}

TEST_CASE("apply_jump: odd-probe jumps never decrease the mean occupation") {
    LatticeSpec lat{4, Boundary::periodic};
    auto godd = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    auto op = build_effective_operator(godd, 1.0, 0.0, 1.0, 6);
    Rng rng(3, 0);
    for (int trial = 0; trial < 50; ++trial) {
        ModeState st;
        st.basis = op.basis;
        st.amps.resize(7);
        for (int i = 0; i < 7; ++i) st.amps[i] = cd(rng.normal(), rng.normal());
        st.amps[0] = 0.1; // keep out of the kernel neighborhood
        st.normalize();
        double before = st.mode_means()[0];
        apply_jump(st, op);
        CHECK(st.mode_means()[0] >= before - 1e-12);
    }
}

TEST_CASE("integrator: quartic dense output is exact for smooth flow") {
    // y' = [cos t, -sin t]; compare dense output against the closed solution
    auto rhs = [](double t, const Eigen::VectorXd&, Eigen::VectorXd& dy) {
        dy.resize(2);
        dy << std::cos(t), -std::sin(t);
    };
    Dopri5<Eigen::VectorXd, decltype(rhs)> stepper(rhs, 1e-10, 1e-12);
    Eigen::VectorXd y0(2);
    y0 << 0.0, 1.0;
    stepper.start(0.0, y0);
    while (stepper.t() < 5.0) {
        stepper.step(5.0);
        for (double th : {0.25, 0.5, 0.75}) {
            Eigen::VectorXd yi;
            stepper.eval_dense(th, yi);
            double t = stepper.dense_t0() + th * stepper.last_h();
            CHECK(yi[0] == doctest::Approx(std::sin(t)).epsilon(1e-8));
            CHECK(yi[1] == doctest::Approx(std::cos(t)).epsilon(1e-8));
        }
    }
}

TEST_CASE("integrator: matches the dense matrix exponential for H_eff") {
    // N=2, diffraction minimum, J > 0: psi(t) = exp(-i H t) psi(0)
    LatticeSpec lat{4, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    auto op = build_effective_operator(geom, 1.3, 0.0, 0.8, 2);
    Eigen::MatrixXcd H = Eigen::MatrixXcd(op.heff);
    auto st = initial_superfluid(geom, 2);
    Eigen::VectorXcd psi0 = st.amps;

    auto rhs = [&op](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) { op.rhs(y, dy); };
    Dopri5<Eigen::VectorXcd, decltype(rhs)> stepper(rhs, 1e-11, 1e-13);
    stepper.start(0.0, psi0);
    double T = 2.5;
    while (stepper.t() < T) stepper.step(T);
    Eigen::MatrixXcd U = (cd(0, -1) * T * H).exp();
    Eigen::VectorXcd ref = U * psi0;
    CHECK((stepper.y() - ref).norm() < 1e-8);
}

TEST_CASE("norm hitting: diagonal decay has a closed-form hitting time") {
    // J=0, single partition (l, N-l), odd probe: norm^2(t) = exp(-gamma l^2 t)
    LatticeSpec lat{4, Boundary::periodic};
    auto godd = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    double gamma = 0.6;
    auto op = build_effective_operator(godd, 0.0, 0.0, gamma, 3);
    ModeState st;
    st.basis = op.basis;
    st.amps = Eigen::VectorXcd::Zero(4);
    int l = 2;
    st.amps[l] = 1.0;
    double target = 0.37;
    auto out = evolve_between_jumps(st, op, target, 100.0);
    REQUIRE(out.hit);
    CHECK(out.elapsed == doctest::Approx(-std::log(target) / (gamma * l * l)).epsilon(1e-9));
    CHECK(st.norm2() == doctest::Approx(target).epsilon(1e-10));
}

TEST_CASE("norm hitting: gamma = 0 conserves the norm, no jump in horizon") {
    LatticeSpec lat{4, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::traveling, PI, 0.0}), lat);
    auto op = build_effective_operator(geom, 1.0, 0.0, 0.0, 2);
    auto st = initial_superfluid(geom, 2);
    auto out = evolve_between_jumps(st, op, 0.5, 20.0);
    CHECK(!out.hit);
    CHECK(st.norm2() == doctest::Approx(1.0).epsilon(1e-9));
}
