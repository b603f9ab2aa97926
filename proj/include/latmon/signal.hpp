#pragma once

// Series diagnostics shared by the tests and the batch reports: periodogram
// peak, oscillation envelope with regression slope, multimodality of sampled
// distributions, photocount staircase detection, and a two-sample KS test.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace latmon {

namespace signal {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: length must be 2^k");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * M_PI / double(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// dominant angular frequency of a uniformly sampled series (Hann window,
// parabolic sub-bin refinement); DC excluded
inline double spectral_peak(const std::vector<double>& series, double dt) {
    const std::size_t n = series.size();
    if (n < 16) throw std::invalid_argument("spectral_peak: series too short");
    double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
    std::size_t nfft = 1;
    while (nfft < 2 * n) nfft <<= 1;
    std::vector<std::complex<double>> buf(nfft, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * k / (n - 1));
        buf[k] = (series[k] - mean) * w;
    }
    fft_inplace(buf);
    std::size_t half = nfft / 2;
    std::size_t best = 1;
    double best_p = 0.0;
    for (std::size_t k = 1; k < half; ++k) {
        double p = std::norm(buf[k]);
        if (p > best_p) {
            best_p = p;
            best = k;
        }
    }
    double delta = 0.0;
    if (best > 1 && best + 1 < half) {
        double lm = std::log(std::norm(buf[best - 1]) + 1e-300);
        double l0 = std::log(std::norm(buf[best]) + 1e-300);
        double lp = std::log(std::norm(buf[best + 1]) + 1e-300);
        double den = lm - 2.0 * l0 + lp;
        if (den < 0.0) delta = 0.5 * (lm - lp) / den;
        delta = std::clamp(delta, -0.5, 0.5);
    }
    return 2.0 * M_PI * (best + delta) / (nfft * dt);
}

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};

inline LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 3 || y.size() != n) throw std::invalid_argument("linear_fit: need >= 3 points");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinFit f;
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (f.intercept + f.slope * x[i]);
        sse += r * r;
    }
    f.slope_se = std::sqrt(sse / double(n - 2) / sxx);
    return f;
}

inline std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
    if (window < 1) window = 1;
    std::vector<double> out(v.size());
    double acc = 0.0;
    std::size_t half = window / 2;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t lo = i > half ? i - half : 0;
        std::size_t hi = std::min(v.size() - 1, i + half);
        acc = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) acc += v[k];
        out[i] = acc / double(hi - lo + 1);
    }
    return out;
}

// local maxima of the oscillation magnitude after baseline removal
struct Envelope {
    std::vector<double> t;
    std::vector<double> amp;
    LinFit fit;
    double max_amp = 0.0;
};

inline Envelope oscillation_envelope(const std::vector<double>& times,
                                     const std::vector<double>& series, double baseline_window) {
    Envelope env;
    const std::size_t n = series.size();
    if (n < 8) return env;
    double dt = (times.back() - times.front()) / double(n - 1);
    std::size_t w = std::max<std::size_t>(3, std::size_t(baseline_window / dt));
    auto base = moving_average(series, w);
    std::vector<double> osc(n);
    for (std::size_t i = 0; i < n; ++i) osc[i] = std::abs(series[i] - base[i]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (osc[i] >= osc[i - 1] && osc[i] > osc[i + 1]) {
            env.t.push_back(times[i]);
            env.amp.push_back(osc[i]);
            env.max_amp = std::max(env.max_amp, osc[i]);
        }
    }
    if (env.t.size() >= 3) env.fit = linear_fit(env.t, env.amp);
    return env;
}

// count genuine modes of a sampled distribution: local maxima that rise by at
// least prominence_frac * max(p) above the highest valley separating them
inline int count_peaks(const std::vector<double>& p, double prominence_frac = 0.1,
                       std::size_t smooth_window = 0) {
    std::vector<double> q = smooth_window > 1 ? moving_average(p, smooth_window) : p;
    const std::size_t n = q.size();
    if (n < 3) return n >= 1 ? 1 : 0;
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        double left = i > 0 ? q[i - 1] : -1.0;
        double right = i + 1 < n ? q[i + 1] : -1.0;
        if (q[i] > left && q[i] >= right) cand.push_back(i);
    }
    double pmax = *std::max_element(q.begin(), q.end());
    if (pmax <= 0.0) return 0;
    // merge candidates separated by shallow valleys
    int count = 0;
    std::size_t prev = 0;
    bool have_prev = false;
    for (std::size_t idx : cand) {
        if (q[idx] < prominence_frac * pmax) continue;
        if (!have_prev) {
            ++count;
            have_prev = true;
            prev = idx;
            continue;
        }
        double valley = *std::min_element(q.begin() + prev, q.begin() + idx + 1);
        if (std::min(q[idx], q[prev]) - valley >= prominence_frac * pmax) {
            ++count;
            prev = idx;
        } else if (q[idx] > q[prev]) {
            prev = idx; // same mode, keep the taller summit
        }
    }
    return count;
}

struct Staircase {
    int steps = 0;
    double period = 0.0; // time between riser midpoints
};

// risers of a cumulative photocount record via smoothed-rate thresholding
inline Staircase staircase_detect(const std::vector<double>& times,
                                  const std::vector<double>& nph, double smooth_window) {
    Staircase out;
    const std::size_t n = times.size();
    if (n < 8 || nph.size() != n) return out;
    double dt = (times.back() - times.front()) / double(n - 1);
    std::vector<double> rate(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) rate[i] = (nph[i + 1] - nph[i - 1]) / (2.0 * dt);
    rate[0] = rate[1];
    rate[n - 1] = rate[n - 2];
    auto sm = moving_average(rate, std::max<std::size_t>(3, std::size_t(smooth_window / dt)));
    double mean_rate = (nph.back() - nph.front()) / (times.back() - times.front());
    if (mean_rate <= 0.0) return out;
    std::vector<double> mids;
    bool in_riser = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool high = sm[i] > mean_rate;
        if (high && !in_riser) {
            in_riser = true;
            start = i;
        } else if (!high && in_riser) {
            in_riser = false;
            mids.push_back(0.5 * (times[start] + times[i]));
        }
    }
    if (in_riser) mids.push_back(0.5 * (times[start] + times.back()));
    out.steps = static_cast<int>(mids.size());
    if (mids.size() >= 2) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < mids.size(); ++i) gaps.push_back(mids[i] - mids[i - 1]);
        std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
        out.period = gaps[gaps.size() / 2];
    }
    return out;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
    }
    double ne = double(a.size()) * b.size() / double(a.size() + b.size());
    double lam = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * sign * std::exp(-2.0 * k * k * lam * lam);
        p += term;
        sign = -sign;
        if (std::abs(term) < 1e-12) break;
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty");
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - double(lo);
    return lo + 1 < v.size() ? v[lo] * (1.0 - frac) + v[lo + 1] * frac : v[lo];
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

inline double stdev(const std::vector<double>& v) {
    double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / double(v.size() > 1 ? v.size() - 1 : 1));
}

} // namespace signal

} // namespace latmon
