#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vexus/bd.hpp"

using namespace vexus;

namespace {

std::vector<RdSample> typical_curve(double rate_scale = 1.0, double q_offset = 0.0) {
    // concave-ish RD points, rates in kbps
    std::vector<RdSample> pts = {{300, 30.2}, {600, 33.4}, {1200, 36.1},
                                 {2400, 38.5}, {4800, 40.3}, {9600, 41.6}};
    for (auto& p : pts) {
        p.bitrate_kbps *= rate_scale;
        p.quality_db += q_offset;
    }
    return pts;
}

// O(n^2) dominance oracle: a point survives iff no other point has
// bitrate <= and quality >= with at least one strict.
std::vector<RdSample> pareto_oracle(const std::vector<RdSample>& pts) {
    std::vector<RdSample> keep;
    for (const auto& p : pts) {
        bool dominated = false;
        for (const auto& q : pts) {
            bool better_or_equal = q.bitrate_kbps <= p.bitrate_kbps && q.quality_db >= p.quality_db;
            bool strict = q.bitrate_kbps < p.bitrate_kbps || q.quality_db > p.quality_db;
            if (better_or_equal && strict) {
                dominated = true;
                break;
            }
        }
        if (!dominated) keep.push_back(p);
    }
    std::sort(keep.begin(), keep.end(),
              [](const RdSample& a, const RdSample& b) { return a.bitrate_kbps < b.bitrate_kbps; });
    // drop exact duplicates the dominance test lets through
    std::vector<RdSample> out;
    for (const auto& p : keep)
        if (out.empty() || p.bitrate_kbps != out.back().bitrate_kbps ||
            p.quality_db != out.back().quality_db)
            out.push_back(p);
    return out;
}

}  // namespace

TEST_CASE("pareto cleaning matches the quadratic dominance oracle") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> rate(100.0, 10000.0);
    std::uniform_real_distribution<double> qual(25.0, 45.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RdSample> pts;
        for (int i = 0; i < 12; ++i) pts.push_back({rate(rng), qual(rng)});
        auto got = pareto_clean(pts).points;
        auto want = pareto_oracle(pts);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].bitrate_kbps == want[i].bitrate_kbps);
            CHECK(got[i].quality_db == want[i].quality_db);
        }
        // survivors are strictly increasing in both coordinates
        for (size_t i = 1; i < got.size(); ++i) {
            CHECK(got[i].bitrate_kbps > got[i - 1].bitrate_kbps);
            CHECK(got[i].quality_db > got[i - 1].quality_db);
        }
    }
}

TEST_CASE("pareto cleaning rejects bad input") {
    CHECK_THROWS(pareto_clean({}));
    CHECK_THROWS(pareto_clean({{0.0, 30.0}}));
    CHECK_THROWS(pareto_clean({{-5.0, 30.0}}));
    CHECK_THROWS(pareto_clean({{100.0, std::nan("")}}));
}

TEST_CASE("identical curves score zero") {
    RdCurve a{typical_curve(), "a"};
    CHECK(bd_rate(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bd_quality(a, a) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("uniform +1 dB offset gives BD-quality of exactly +1") {
    RdCurve ref{typical_curve(), "ref"};
    RdCurve test{typical_curve(1.0, 1.0), "test"};
    CHECK(bd_quality(ref, test) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("doubling every bitrate gives BD-rate of exactly +100 percent") {
    RdCurve ref{typical_curve(), "ref"};
    RdCurve test{typical_curve(2.0), "test"};
    CHECK(bd_rate(ref, test) == doctest::Approx(100.0).epsilon(1e-9));
    RdCurve half{typical_curve(0.5), "half"};
    CHECK(bd_rate(ref, half) == doctest::Approx(-50.0).epsilon(1e-9));
}

TEST_CASE("bd_quality antisymmetry on shared supports") {
    RdCurve a{typical_curve(), "a"};
    RdCurve b{typical_curve(1.0, 0.7), "b"};
    CHECK(bd_quality(a, b) == doctest::Approx(-bd_quality(b, a)).epsilon(1e-9));
}

TEST_CASE("bd_rate sign convention: better curve is negative") {
    RdCurve ref{typical_curve(), "ref"};
    RdCurve better{typical_curve(1.0, 1.5), "better"};  // more quality per bit
    CHECK(bd_rate(ref, better) < 0.0);
    CHECK(bd_quality(ref, better) > 0.0);
}

TEST_CASE("segment integration matches a dense Riemann-sum oracle") {
    std::vector<double> xs = {0.0, 1.0, 2.5, 3.0, 5.0};
    std::vector<double> ys = {1.0, 2.0, 2.2, 3.5, 4.0};
    detail::Pchip p(xs, ys);
    const double lo = 0.3, hi = 4.6;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double x0 = lo + (hi - lo) * i / n;
        double x1 = lo + (hi - lo) * (i + 1) / n;
        sum += 0.5 * (p.eval(x0) + p.eval(x1)) * (x1 - x0);
    }
    CHECK(p.integrate(lo, hi) == doctest::Approx(sum).epsilon(1e-8));
}

TEST_CASE("pchip interpolates the knots and preserves monotonicity") {
    std::vector<double> xs = {1.0, 2.0, 3.0, 4.0, 6.0};
    std::vector<double> ys = {10.0, 14.0, 15.0, 15.5, 20.0};
    detail::Pchip p(xs, ys);
    for (size_t i = 0; i < xs.size(); ++i)
        CHECK(p.eval(xs[i]) == doctest::Approx(ys[i]).epsilon(1e-12));
    double prev = p.eval(1.0);
    for (int i = 1; i <= 500; ++i) {
        double v = p.eval(1.0 + 5.0 * i / 500.0);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
}

TEST_CASE("inserting an on-curve interior point barely moves the score") {
    RdCurve ref{typical_curve(), "ref"};
    auto pts = typical_curve(1.0, 0.5);
    RdCurve test{pts, "test"};
    double base_rate = bd_rate(ref, test);
    double base_q = bd_quality(ref, test);

    // add a point on the test interpolant between two knots
    std::vector<double> lx, lq;
    for (const auto& p : pts) {
        lx.push_back(std::log10(p.bitrate_kbps));
        lq.push_back(p.quality_db);
    }
    detail::Pchip interp(lx, lq);
    double mid = 0.5 * (lx[2] + lx[3]);
    auto dense = pts;
    dense.push_back({std::pow(10.0, mid), interp.eval(mid)});
    RdCurve test2{dense, "test2"};
    CHECK(bd_rate(ref, test2) == doctest::Approx(base_rate).epsilon(0.02));
    CHECK(bd_quality(ref, test2) == doctest::Approx(base_q).epsilon(0.02));
}

TEST_CASE("too few Pareto points or no overlap raises") {
    RdCurve ref{typical_curve(), "ref"};
    RdCurve three{{{300, 30}, {600, 33}, {1200, 36}}, "three"};
    CHECK_THROWS(bd_rate(ref, three));
    // four raw points that collapse under cleaning
    RdCurve collapsing{{{300, 30}, {600, 29}, {1200, 28}, {2400, 36}}, "collapse"};
    CHECK_THROWS(bd_rate(ref, collapsing));
    // disjoint quality ranges
    RdCurve low{typical_curve(1.0, -40.0), "low"};
    CHECK_THROWS(bd_rate(ref, low));
}
