#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace vexus {

struct RdSample {
    double bitrate_kbps = 0.0;
    double quality_db = 0.0;
};

struct RdCurve {
    std::vector<RdSample> points;  // strictly increasing in both coordinates
    std::string label;
};

// Remove points dominated in (bitrate <=, quality >=); the survivors are
// strictly increasing in both coordinates.
inline RdCurve pareto_clean(std::vector<RdSample> points, std::string label = {}) {
    if (points.empty()) throw std::invalid_argument("pareto_clean: no points");
    for (const auto& p : points)
        if (!(p.bitrate_kbps > 0.0) || !std::isfinite(p.quality_db))
            throw std::invalid_argument("pareto_clean: non-finite or non-positive point");
    std::sort(points.begin(), points.end(), [](const RdSample& a, const RdSample& b) {
        if (a.bitrate_kbps != b.bitrate_kbps) return a.bitrate_kbps < b.bitrate_kbps;
        return a.quality_db > b.quality_db;
    });
    RdCurve c;
    c.label = std::move(label);
    // After the sort, a point is dominated exactly when its quality does
    // not exceed the best quality seen at a lower-or-equal bitrate.
    for (const auto& p : points) {
        if (c.points.empty() || p.quality_db > c.points.back().quality_db)
            c.points.push_back(p);
    }
    return c;
}

namespace detail {

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
struct Pchip {
    std::vector<double> x, y, d;

    Pchip(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
        const size_t n = x.size();
        if (n < 2) throw std::invalid_argument("pchip: need at least 2 points");
        std::vector<double> h(n - 1), delta(n - 1);
        for (size_t i = 0; i + 1 < n; ++i) {
            h[i] = x[i + 1] - x[i];
            if (h[i] <= 0.0) throw std::invalid_argument("pchip: abscissae not increasing");
            delta[i] = (y[i + 1] - y[i]) / h[i];
        }
        d.assign(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] > 0.0) {
                double w1 = 2.0 * h[i] + h[i - 1];
                double w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        auto endpoint = [](double h0, double h1, double d0, double d1) {
            double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (s * d0 <= 0.0) return 0.0;
            if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
            return s;
        };
        if (n == 2) {
            d[0] = d[1] = delta[0];
        } else {
            d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
    }

    double eval(double xv) const {
        size_t i = segment(xv);
        double h = x[i + 1] - x[i];
        double t = (xv - x[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y[i] + (t3 - 2 * t2 + t) * h * d[i] +
               (-2 * t3 + 3 * t2) * y[i + 1] + (t3 - t2) * h * d[i + 1];
    }

    // Exact integral over [lo, hi] within the knot span: 2-point
    // Gauss-Legendre per clipped segment (exact for cubics).
    double integrate(double lo, double hi) const {
        double total = 0.0;
        static constexpr double kG = 0.5773502691896257;  // 1/sqrt(3)
        for (size_t i = 0; i + 1 < x.size(); ++i) {
            double a = std::max(lo, x[i]);
            double b = std::min(hi, x[i + 1]);
            if (b <= a) continue;
            double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            total += half * (eval(mid - half * kG) + eval(mid + half * kG));
        }
        return total;
    }

  private:
    size_t segment(double xv) const {
        auto it = std::upper_bound(x.begin(), x.end(), xv);
        size_t i = static_cast<size_t>(it - x.begin());
        if (i > 0) --i;
        if (i + 1 >= x.size()) i = x.size() - 2;
        return i;
    }
};

struct BdInput {
    Pchip ref;
    Pchip test;
    double lo, hi;
};

inline BdInput bd_prepare(const RdCurve& curve_ref, const RdCurve& curve_test, bool rate_on_x) {
    auto axes = [rate_on_x](const RdCurve& c) {
        std::vector<double> xs, ys;
        for (const auto& p : c.points) {
            double lr = std::log10(p.bitrate_kbps);
            xs.push_back(rate_on_x ? lr : p.quality_db);
            ys.push_back(rate_on_x ? p.quality_db : lr);
        }
        return Pchip(std::move(xs), std::move(ys));
    };
    auto clean_ref = pareto_clean(curve_ref.points, curve_ref.label);
    auto clean_test = pareto_clean(curve_test.points, curve_test.label);
    if (clean_ref.points.size() < 4 || clean_test.points.size() < 4)
        throw std::invalid_argument("bd: need at least 4 Pareto-efficient points per curve");
    BdInput in{axes(clean_ref), axes(clean_test), 0.0, 0.0};
    in.lo = std::max(in.ref.x.front(), in.test.x.front());
    in.hi = std::min(in.ref.x.back(), in.test.x.back());
    if (!(in.hi > in.lo)) throw std::invalid_argument("bd: curves do not overlap");
    return in;
}

}  // namespace detail

// Mean quality difference (test - ref) over the common log-rate interval.
inline double bd_quality(const RdCurve& curve_ref, const RdCurve& curve_test) {
    auto in = detail::bd_prepare(curve_ref, curve_test, /*rate_on_x=*/true);
    return (in.test.integrate(in.lo, in.hi) - in.ref.integrate(in.lo, in.hi)) / (in.hi - in.lo);
}

// Mean bitrate difference in percent over the common quality interval.
inline double bd_rate(const RdCurve& curve_ref, const RdCurve& curve_test) {
    auto in = detail::bd_prepare(curve_ref, curve_test, /*rate_on_x=*/false);
    double diff =
        (in.test.integrate(in.lo, in.hi) - in.ref.integrate(in.lo, in.hi)) / (in.hi - in.lo);
    return 100.0 * (std::pow(10.0, diff) - 1.0);
}

}  // namespace vexus
