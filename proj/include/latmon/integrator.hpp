#pragma once

// Adaptive Dormand-Prince 5(4) with the standard quartic dense output.
// Between photocounts the trajectory engines integrate i dpsi/dt = H_eff psi
// and stop when ||psi||^2 first reaches a uniform draw; the hitting time is
// located on the dense output (the squared norm along a step is a degree-8
// polynomial in the step fraction) and then polished by re-integration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>

namespace latmon {

namespace dp5 {
// Butcher tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// embedded error weights (5th minus 4th order)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
} // namespace dp5

template <class Vec, class Rhs>
class Dopri5 {
  public:
    Dopri5(Rhs rhs, double rtol, double atol) : f_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

    void start(double t0, const Vec& y0) {
        t_ = t0;
        y_ = y0;
        f_(t_, y_, k1_);
        have_k1_ = true;
        h_ = 0.0;
        n_steps_ = n_rejected_ = 0;
    }

    double t() const { return t_; }
    const Vec& y() const { return y_; }
    Vec& y() { return y_; }
    double last_h() const { return h_done_; }
    long steps() const { return n_steps_; }
    long rejected() const { return n_rejected_; }

    // One accepted adaptive step, not beyond t_limit. Returns the step size taken.
    double step(double t_limit) {
        if (t_ >= t_limit) return 0.0;
        if (!have_k1_) {
            f_(t_, y_, k1_);
            have_k1_ = true;
        }
        if (h_ <= 0.0) h_ = initial_step(t_limit);

        for (int attempt = 0; attempt < 200; ++attempt) {
            double h = std::min(h_, t_limit - t_);
            stages(t_, y_, h);
            double err = error_norm(h);
            if (err <= 1.0 || h <= 1e-14 * std::max(1.0, std::abs(t_))) {
                build_dense(h);
                t0_ = t_;
                h_done_ = h;
                t_ += h;
                std::swap(y_, ynew_);
                std::swap(k1_, k7_); // FSAL
                double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                h_ = h * std::clamp(fac, 0.2, 5.0);
                ++n_steps_;
                return h_done_;
            }
            ++n_rejected_;
            h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (n_rejected_ > 100000)
                throw std::runtime_error("dopri5: step controller failed to converge");
        }
        throw std::runtime_error("dopri5: step persistently rejected");
    }

    // dense state inside the last accepted step, theta in [0,1]
    void eval_dense(double theta, Vec& out) const {
        double th = theta, th1 = 1.0 - theta;
        out = r1_ + th * (r2_ + th1 * (r3_ + th * (r4_ + th1 * r5_)));
    }

    double dense_t0() const { return t0_; }
    const Vec& dense_start() const { return r1_; } // state at dense_t0()

    // coefficients of ||y(theta)||^2 as a polynomial in theta (degree 8)
    void norm2_poly(double coeff[9]) const {
        // y(theta) = sum c_k theta^k from the nested dense form
        Vec c0 = r1_;
        Vec c1 = r2_ + r3_;
        Vec c2v = -r3_ + r4_ + r5_;
        Vec c3 = -r4_ - 2.0 * r5_;
        Vec c4 = r5_;
        const Vec* c[5] = {&c0, &c1, &c2v, &c3, &c4};
        for (int m = 0; m <= 8; ++m) coeff[m] = 0.0;
        for (int k = 0; k <= 4; ++k)
            for (int l = 0; l <= 4; ++l) coeff[k + l] += real_dot(*c[k], *c[l]);
    }

    // single fixed step of size h from (t0, y0), no error control
    void fixed_step(double t0, const Vec& y0, double h, Vec& out) {
        Vec k1;
        f_(t0, y0, k1);
        stages_from(t0, y0, k1, h);
        out = ynew_;
    }

    void rhs(double t, const Vec& y, Vec& dy) { f_(t, y, dy); }

    // invalidate the FSAL cache after the caller modified the state
    void reset_state(double t, const Vec& y) {
        t_ = t;
        y_ = y;
        have_k1_ = false;
    }

  private:
    static double real_dot(const Vec& a, const Vec& b) {
        return std::real(a.dot(b));
    }

    double initial_step(double t_limit) const {
        double dy = std::sqrt(std::max(1e-300, std::real(k1_.dot(k1_))));
        double y = std::sqrt(std::max(atol_, std::real(y_.dot(y_))));
        double h = 0.01 * y / std::max(dy, 1e-10 * y);
        return std::min({h, t_limit - t_, 1.0});
    }

    void stages(double t0, const Vec& y0, double h) { stages_from(t0, y0, k1_, h); }

    void stages_from(double t0, const Vec& y0, const Vec& k1, double h) {
        using namespace dp5;
        ytmp_ = y0 + h * a21 * k1;
        f_(t0 + c2 * h, ytmp_, k2_);
        ytmp_ = y0 + h * (a31 * k1 + a32 * k2_);
        f_(t0 + c3 * h, ytmp_, k3_);
        ytmp_ = y0 + h * (a41 * k1 + a42 * k2_ + a43 * k3_);
        f_(t0 + c4 * h, ytmp_, k4_);
        ytmp_ = y0 + h * (a51 * k1 + a52 * k2_ + a53 * k3_ + a54 * k4_);
        f_(t0 + c5 * h, ytmp_, k5_);
        ytmp_ = y0 + h * (a61 * k1 + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        f_(t0 + h, ytmp_, k6_);
        ynew_ = y0 + h * (b1 * k1 + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
        f_(t0 + h, ynew_, k7_);
        k1s_ = k1; // stage-1 slope, reused by the error estimate and dense output
    }

    double error_norm(double h) const {
        using namespace dp5;
        double acc = 0.0;
        const auto n = y_.size();
        for (decltype(y_.size()) i = 0; i < n; ++i) {
            auto e = h * (e1 * k1s_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                          e7 * k7_[i]);
            double sc = atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            acc += std::norm(e) / (sc * sc);
        }
        return std::sqrt(acc / std::max<decltype(n)>(n, 1));
    }

    void build_dense(double h) {
        using namespace dp5;
        r1_ = y_;
        r2_ = ynew_ - y_;
        r3_ = h * k1s_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (d1 * k1s_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    }

    Rhs f_;
    double rtol_, atol_;
    double t_ = 0.0, h_ = 0.0, t0_ = 0.0, h_done_ = 0.0;
    bool have_k1_ = false;
    long n_steps_ = 0, n_rejected_ = 0;
    Vec y_, ynew_, ytmp_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, k1s_;
    Vec r1_, r2_, r3_, r4_, r5_;
};

// root of poly(theta) = target on [0,1], bisection-safeguarded Newton
inline double solve_norm_theta(const double coeff[9], double target) {
    auto eval = [&](double th) {
        double v = 0.0;
        for (int m = 8; m >= 0; --m) v = v * th + coeff[m];
        return v - target;
    };
    auto deriv = [&](double th) {
        double v = 0.0;
        for (int m = 8; m >= 1; --m) v = v * th + m * coeff[m];
        return v;
    };
    double lo = 0.0, hi = 1.0;
    double flo = eval(lo), fhi = eval(hi);
    if (flo < 0.0) return 0.0; // already below target at step start (roundoff)
    if (fhi > 0.0) return 1.0;
    double th = 0.5;
    for (int it = 0; it < 100; ++it) {
        double fv = eval(th);
        if (fv > 0.0)
            lo = th;
        else
            hi = th;
        double d = deriv(th);
        double step = d != 0.0 ? fv / d : 0.0;
        double cand = th - step;
        th = (cand > lo && cand < hi) ? cand : 0.5 * (lo + hi);
        if (hi - lo < 1e-15) break;
    }
    return th;
}

} // namespace latmon
