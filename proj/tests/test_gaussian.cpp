#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "latmon/gaussian.hpp"
#include "latmon/mode_space.hpp"
#include "latmon/trajectory.hpp"

using namespace latmon;

static constexpr double PI = 3.14159265358979323846;

static GaussianParams params(double Gamma, double h, double J = 1.0, double Lambda = 0.0) {
    GaussianParams P;
    P.J = J;
    P.Gamma = Gamma;
    P.h = h;
    P.Lambda = Lambda;
    P.validate();
    return P;
}

// integrate the (b2, phi, z0, c) flow to time t at tight tolerance
static GaussianState integrate_flow(const GaussianState& s0, const GaussianParams& P, double t,
                                    double rtol = 1e-10, double atol = 1e-12) {
    using Vec = Eigen::VectorXd;
    auto rhs = [&P](double, const Vec& y, Vec& dy) {
        GaussianState s{y[0], y[1], y[2], y[3], 0.0};
        auto d = derivatives(s, P);
        dy.resize(4);
        dy << d.db2, d.dphi, d.dz0, d.dc;
    };
    Dopri5<Vec, decltype(rhs)> stepper(rhs, rtol, atol);
    Vec y(4);
    y << s0.b2, s0.phi, s0.z0, s0.c;
    stepper.start(0.0, y);
    while (stepper.t() < t) stepper.step(t);
    const Vec& v = stepper.y();
    return {v[0], v[1], v[2], v[3], 0.0};
}

TEST_CASE("derivatives: weak-limit stationary state and the J = 0 squeezing law") {
    auto P = params(0.0, 0.01);
    GaussianState s{4.0 * P.h / P.omega(), 0.0, 0.0, 0.0, 0.0};
    auto d = derivatives(s, P);
    CHECK(std::abs(d.db2) < 1e-12);
    CHECK(std::abs(d.dz0) < 1e-12);
    CHECK(std::abs(d.dphi) < 1e-12);
    CHECK(std::abs(d.dc) < 1e-12);

    auto P2 = params(0.5, 0.02, 0.0); // J = 0
    GaussianState s2{0.03, 0.4, 0.1, -0.2, 0.0};
    auto d2 = derivatives(s2, P2);
    CHECK(d2.db2 == doctest::Approx(-(P2.Gamma / (2 * P2.h)) * 0.03 * 0.03));
}

TEST_CASE("derivatives match finite differences of the integrated flow") {
    auto P = params(0.3, 0.02);
    GaussianState s{0.05, 0.2, -0.1, 0.15, 0.0};
    auto d = derivatives(s, P);
    double eps = 1e-6;
    auto fwd = integrate_flow(s, P, eps);
    auto two = integrate_flow(s, P, 2 * eps);
    double fd_b2 = (two.b2 - s.b2) / (2 * eps);
    double fd_z0 = (two.z0 - s.z0) / (2 * eps);
    CHECK(fd_b2 == doctest::Approx(d.db2).epsilon(1e-5));
    CHECK(fd_z0 == doctest::Approx(d.dz0).epsilon(1e-5));
    CHECK(fwd.b2 == doctest::Approx(s.b2 + eps * d.db2).epsilon(1e-7));
}

TEST_CASE("Im(a-dot) equals half the photocount rate") {
    auto P = params(0.7, 0.01);
    GaussianState s{0.03, 0.1, 0.2, -0.05, 0.0};
    auto d = derivatives(s, P);
    CHECK(2.0 * d.dim_a == doctest::Approx(jump_probability(s, P, 1.0)).epsilon(1e-12));
}

TEST_CASE("pq round trip is the identity") {
    Rng rng(5, 0);
    for (int i = 0; i < 200; ++i) {
        GaussianState s;
        s.b2 = 0.001 + std::abs(rng.normal());
        s.phi = rng.normal();
        s.z0 = std::tanh(rng.normal());
        s.c = rng.normal();
        auto back = from_pq(to_pq(s));
        CHECK(back.b2 == doctest::Approx(s.b2).epsilon(1e-12));
        CHECK(back.phi == doctest::Approx(s.phi).epsilon(1e-12));
        CHECK(back.z0 == doctest::Approx(s.z0).epsilon(1e-12));
        CHECK(back.c == doctest::Approx(s.c).epsilon(1e-12));
    }
}

TEST_CASE("analytic solution: initial condition, periodicity, stationary limit") {
    auto P = params(0.4, 0.01);
    auto s0 = initial_gaussian(P);
    auto pq0 = to_pq(s0);
    auto at0 = analytic_pq(0.0, pq0.p, pq0.q, P);
    CHECK(std::abs(at0.p - pq0.p) < 1e-12);
    CHECK(std::abs(at0.q - pq0.q) < 1e-12);

    // Gamma = 0: the p orbit closes after a period pi/(J omega)
    auto P0 = params(0.0, 0.01);
    double period = PI / (P0.J * P0.omega());
    auto pqT = analytic_pq(period, pq0.p, pq0.q, P0);
    CHECK(std::abs(pqT.p - pq0.p) < 1e-9);

    // long-time limit reaches the closed-form critical point
    auto sp = stationary_point(P);
    auto late = analytic_state(300.0, s0, P);
    CHECK(late.b2 == doctest::Approx(sp.state.b2).epsilon(1e-8));
    CHECK(late.phi == doctest::Approx(sp.state.phi).epsilon(1e-8));
    CHECK(late.z0 == doctest::Approx(sp.state.z0).epsilon(1e-8));
    CHECK(late.c == doctest::Approx(sp.state.c).epsilon(1e-8));
}

TEST_CASE("analytic solution matches the integrated flow across regimes") {
    for (double G : {0.001, 1.0, 100.0}) {
        for (double h : {0.01, 0.05}) {
            auto P = params(G, h);
            auto s0 = initial_gaussian(P);
            auto pq0 = to_pq(s0);
            double dev = 0.0;
            for (double t = 0.0; t <= 20.0 + 1e-9; t += 0.25) {
                auto ana = from_pq(analytic_pq(t, pq0.p, pq0.q, P));
                auto num = integrate_flow(s0, P, t);
                dev = std::max(dev, std::abs(ana.b2 - num.b2));
                dev = std::max(dev, std::abs(ana.phi - num.phi));
                dev = std::max(dev, std::abs(ana.z0 - num.z0));
                dev = std::max(dev, std::abs(ana.c - num.c));
            }
            INFO("Gamma=" << G << " h=" << h << " dev=" << dev);
            CHECK(dev < 1e-6);
        }
    }
}

TEST_CASE("stationary point: flow fixed point for a parameter grid") {
    for (double G : {0.01, 0.3, 2.0, 50.0}) {
        for (double h : {0.005, 0.02, 0.05}) {
            for (double J : {0.5, 1.0}) {
                auto P = params(G, h, J);
                auto sp = stationary_point(P);
                auto d = derivatives(sp.state, P);
                double scale = std::abs(jump_probability(sp.state, P, 1.0)) + P.J;
                CHECK(std::abs(d.db2) < 1e-10 * scale);
                CHECK(std::abs(d.dphi) < 1e-10 * scale);
                CHECK(std::abs(d.dz0) < 1e-10 * scale);
                CHECK(std::abs(d.dc) < 1e-10 * scale);
                for (const auto& ev : sp.eigenvalues) CHECK(ev.real() <= 1e-12);
            }
        }
    }
}

TEST_CASE("stationary point: strong and weak measurement limits") {
    double h = 0.01;
    auto Pstrong = params(100.0, h);
    auto sp = stationary_point(Pstrong);
    double w = Pstrong.omega();
    CHECK(sp.state.b2 == doctest::Approx(4.0 * h * std::sqrt(1.0 / 100.0)).epsilon(0.02));
    CHECK(sp.state.z0 == doctest::Approx(-1.0 + w * w / 200.0).epsilon(0.02));
    CHECK(std::abs(sp.eigenvalues[0].real()) == doctest::Approx(10.0).epsilon(0.01));
    CHECK(std::abs(sp.eigenvalues[0].imag()) == doctest::Approx(10.0).epsilon(0.01));
    CHECK(std::abs(sp.eigenvalues[2].real()) == doctest::Approx(20.0).epsilon(0.01));

    auto Pweak = params(0.0, h);
    auto spw = stationary_point(Pweak);
    CHECK(spw.state.b2 == doctest::Approx(4.0 * h / w).epsilon(1e-12));
    CHECK(spw.eigenvalues[0].real() == 0.0);
    CHECK(std::abs(spw.eigenvalues[0].imag()) == doctest::Approx(w));
    CHECK(std::abs(spw.eigenvalues[2].imag()) == doctest::Approx(2.0 * w));
}

TEST_CASE("numeric Jacobian reproduces the closed-form spectrum") {
    for (double G : {0.001, 0.3, 1.0, 100.0}) {
        auto P = params(G, 0.01);
        auto sp = stationary_point(P);
        Eigen::Matrix4d Jm = jacobian_numeric(sp.state, P);
        Eigen::EigenSolver<Eigen::Matrix4d> es(Jm);
        std::vector<cd> num;
        for (int i = 0; i < 4; ++i) num.push_back(es.eigenvalues()[i]);
        for (const auto& expect : sp.eigenvalues) {
            double best = 1e300;
            for (const auto& got : num) best = std::min(best, std::abs(got - expect));
            CHECK(best < 1e-6 * std::abs(expect));
        }
    }
}

TEST_CASE("under- and over-damped regimes via the eigenvalue ratio") {
    auto Pw = params(0.001, 0.01);
    auto spw = stationary_point(Pw);
    double ratio_w = std::abs(spw.eigenvalues[0].real()) / std::abs(spw.eigenvalues[0].imag());
    CHECK(ratio_w < 0.01);
    double w = Pw.omega();
    CHECK(ratio_w == doctest::Approx(Pw.J * w * w * spw.alpha * spw.alpha / Pw.Gamma).epsilon(1e-9));
    auto Ps = params(100.0, 0.01);
    auto sps = stationary_point(Ps);
    double ratio_s = std::abs(sps.eigenvalues[0].real()) / std::abs(sps.eigenvalues[0].imag());
    CHECK(ratio_s == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("stationary point is an attractor") {
    auto P = params(0.5, 0.02);
    auto sp = stationary_point(P);
    GaussianState s = sp.state;
    s.b2 *= 1.1;
    s.phi += 0.1 * std::abs(sp.state.phi) + 0.01;
    s.z0 += 0.05;
    s.c *= 0.9;
    double d0 = std::abs(s.b2 - sp.state.b2) + std::abs(s.z0 - sp.state.z0);
    auto late = integrate_flow(s, P, 60.0);
    double d1 = std::abs(late.b2 - sp.state.b2) + std::abs(late.z0 - sp.state.z0);
    CHECK(d1 < 1e-6 * d0);
}

TEST_CASE("jump map: fixed point at zero width, squeezing and imbalance growth") {
    GaussianState flat{0.0, 0.3, 0.2, -0.1, 0.0};
    GaussianState widened = flat;
    widened.b2 = 1e-300;
    auto out = jump_map(widened);
    CHECK(out.z0 == doctest::Approx(flat.z0));
    CHECK(out.phi == doctest::Approx(flat.phi));

    GaussianState s{0.02, 0.0, 0.0, 0.0, 0.0};
    auto j1 = jump_map(s);
    CHECK(j1.b2 == doctest::Approx(0.02 / 1.02));
    CHECK(j1.z0 == doctest::Approx(0.02 / 1.02));

    GaussianState cur{0.05, 0.1, -0.3, 0.2, 0.0};
    for (int k = 0; k < 30; ++k) {
        auto nxt = jump_map(cur);
        CHECK(nxt.b2 < cur.b2);
        CHECK(nxt.b2 > 0.0);
        CHECK(nxt.z0 > cur.z0);
        cur = nxt;
    }

    GaussianState empty{0.01, 0.0, -1.0, 0.0, 0.0};
    CHECK_THROWS(jump_map(empty));
}

TEST_CASE("jump probability: kernel zero and the near-balanced value") {
    auto P = params(0.8, 0.02);
    GaussianState dead{0.0, 0.0, -1.0, 0.0, 0.0};
    CHECK(jump_probability(dead, P, 0.1) == doctest::Approx(0.0));
    GaussianState bal{2.0 * P.h, 0.0, 0.0, 0.0, 0.0};
    CHECK(jump_probability(bal, P, 0.3) ==
          doctest::Approx((P.Gamma / (2 * P.h)) * (1.0 + P.h) * 0.3).epsilon(1e-12));
}

TEST_CASE("averaged jumps: frozen-width exponential growth of the imbalance") {
    auto P = params(0.02, 0.01);
    const double b2 = 2.2 * P.h;
    double z = 0.05;
    double dt = 1e-4;
    for (int k = 0; k < 20000; ++k) z += (P.Gamma / (2 * P.h)) * b2 * (1 + z) * dt;
    double t = 20000 * dt;
    double closed = -1.0 + 1.05 * std::exp(b2 * P.Gamma * t / (2 * P.h));
    CHECK(z == doctest::Approx(closed).epsilon(1e-6));

    GaussianState squeezed{0.0, 0.0, 0.3, 0.0, 0.0};
    auto f = mean_jump_flow(squeezed, P);
    CHECK(f.db2_jump == 0.0);
    CHECK(f.dz0_jump == 0.0);
}

TEST_CASE("averaged system: the balanced-width limit oscillates at omega") {
    auto P = params(0.001, 0.01);
    const double w = P.omega();
    double lo = 3.0 * P.h / w, hi = 5.0 * P.h / w;
    auto phi_of = [&](double b2) { return P.Gamma * b2 * b2 / (8.0 * P.h * P.h * P.J); };
    auto g = [&](double b2) {
        GaussianState s{b2, phi_of(b2), 0.0, 0.0, 0.0};
        return mean_jump_flow(s, P).dphi_comb;
    };
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if ((g(lo) > 0) == (g(mid) > 0))
            lo = mid;
        else
            hi = mid;
    }
    double b2s = 0.5 * (lo + hi);
    GaussianState s{b2s, phi_of(b2s), 0.01, 0.0, 0.0};
    auto f0 = mean_jump_flow(s, P);
    CHECK(std::abs(f0.db2_comb) < 1e-8);
    CHECK(std::abs(f0.dphi_comb) < 1e-8);
    double zdd = (2.0 * P.h * P.J / b2s) * (2.0 * s.phi * f0.dz0_comb + f0.dc_comb);
    CHECK(zdd / s.z0 == doctest::Approx(-w * w).epsilon(0.05));
}

TEST_CASE("growth exponent is positive near the initial width") {
    for (double h : {0.01, 0.03, 0.05}) {
        auto P = params(0.7, h);
        for (double b2 : {1.5 * h, 2.0 * h, 2.5 * h, 3.0 * h})
            CHECK(growth_exponent_margin(b2, P) > 0.0);
    }
}

TEST_CASE("regime timescales: under- and over-damped diagnostics") {
    auto Pw = params(0.001, 0.01);
    auto tw = regime_timescales(Pw);
    CHECK(tw.Omega_dt_damp > 100.0);
    CHECK(tw.Omega_dt_damp ==
          doctest::Approx(Pw.J * Pw.omega() * Pw.omega() / Pw.Gamma).epsilon(0.01));
    auto Ps = params(100.0, 0.01);
    auto ts = regime_timescales(Ps);
    CHECK(ts.Omega_dt_damp < 2.0);
    CHECK(ts.Omega_dt_damp ==
          doctest::Approx(1.0 + Ps.J * Ps.omega() * Ps.omega() / (2.0 * Ps.Gamma)).epsilon(0.01));
}

TEST_CASE("gaussian trajectory: conservative flow closes its orbit") {
    auto P = params(0.0, 0.01);
    GaussianRunOptions opt;
    opt.jumps = GaussianJumps::none;
    opt.horizon = PI / (P.J * P.omega());
    opt.sample_dt = opt.horizon / 200.0;
    auto rec = run_gaussian_trajectory(P, Rng(1, 0), opt);
    const auto& b2 = rec.extra.at("b2");
    const auto& z0 = rec.extra.at("z0");
    CHECK(b2.front() == doctest::Approx(2.0 * P.h));
    CHECK(b2.back() == doctest::Approx(b2.front()).epsilon(1e-6));
    for (double z : z0) CHECK(std::abs(z) < 1e-12);
}

TEST_CASE("gaussian trajectory: replayed jumps spiral the orbit outward") {
    // conservative flow, photocount times taken from a matching exact-engine
    // run: the state-correlated kicks pump the imbalance oscillation
    const int N = 100;
    const double gamma = 0.005;
    LatticeSpec lat{2 * N, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    TrajectoryOptions eopt;
    eopt.horizon = 12.0;
    eopt.sample_dt = 0.05;
    auto exact = run_trajectory(geom, 1.0, 0.0, gamma, N, eopt, 31, 0);
    REQUIRE(exact.jump_times.size() > 50);

    auto P = params(0.0, 1.0 / N);
    GaussianRunOptions opt;
    opt.jumps = GaussianJumps::replay;
    opt.horizon = 12.0;
    opt.sample_dt = 0.02;
    opt.replay_times = exact.jump_times;
    auto rec = run_gaussian_trajectory(P, Rng(2, 0), opt);
    CHECK(rec.jump_times.size() == opt.replay_times.size());
    const auto& z0 = rec.extra.at("z0");
    double early = 0.0, late = 0.0;
    for (std::size_t k = 0; k < z0.size(); ++k) {
        double t = rec.times[k];
        if (t < 3.0) early = std::max(early, std::abs(z0[k]));
        if (t > 9.0) late = std::max(late, std::abs(z0[k]));
    }
    CHECK(late > early);
    CHECK(late > 0.03);
}

TEST_CASE("norm bookkeeping tracks the exact engine over one oscillation") {
    const int N = 100;
    const double Gamma = 0.1, gamma = 2.0 * Gamma / N;
    auto P = params(Gamma, 1.0 / N);

    GaussianRunOptions opt;
    opt.jumps = GaussianJumps::none;
    opt.horizon = 2.0 * PI / (P.J * P.omega());
    opt.sample_dt = opt.horizon / 100.0;
    auto grec = run_gaussian_trajectory(P, Rng(1, 0), opt);

    LatticeSpec lat{2 * N, Boundary::periodic};
    auto geom = partition_modes(compute_jjj(lat, {ProbeKind::standing, PI / 2.0, 0.0}), lat);
    auto op = build_effective_operator(geom, 1.0, 0.0, gamma, N);
    auto st = initial_superfluid(geom, N);
    auto rhs = [&op](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) { op.rhs(y, dy); };
    Dopri5<Eigen::VectorXcd, decltype(rhs)> stepper(rhs, 1e-10, 1e-12);
    stepper.start(0.0, st.amps);
    for (std::size_t k = 1; k < grec.samples(); ++k) {
        double t = grec.times[k];
        while (stepper.t() < t) stepper.step(t);
        double exact = -0.5 * std::log(stepper.y().squaredNorm());
        double model = grec.extra.at("im_a")[k];
        CHECK(model == doctest::Approx(exact).epsilon(0.05));
    }
}
