#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "vexus/encode_harness.hpp"
#include "vexus/predictor.hpp"

namespace vexus {

struct HullConfig {
    std::vector<int> resolutions = {360, 540, 720, 1080, 1440, 2160};  // R, ascending
    std::vector<double> target_bitrates_kbps = {145,  300,  600,  900,  1600,  2400,
                                                3400, 4500, 5800, 8100, 11600, 16800};  // B
    int r_max = 2160;
    int q_min = 10;
    int q_max = 50;

    void validate() const {
        if (resolutions.empty() || target_bitrates_kbps.empty())
            throw std::invalid_argument("hull config: empty resolution or bitrate set");
        if (!std::is_sorted(resolutions.begin(), resolutions.end()) ||
            !std::is_sorted(target_bitrates_kbps.begin(), target_bitrates_kbps.end()))
            throw std::invalid_argument("hull config: R and B must be sorted ascending");
        if (std::find(resolutions.begin(), resolutions.end(), r_max) == resolutions.end())
            throw std::invalid_argument("hull config: r_max must be a member of R");
        if (q_min >= q_max) throw std::invalid_argument("hull config: q_min >= q_max");
    }
};

struct LadderEntry {
    double target_bitrate_kbps = 0.0;
    int resolution = 0;  // height
    int qp = 0;
    double predicted_xpsnr_db = 0.0;   // predicted hulls
    double achieved_bitrate_kbps = 0.0;  // measured hulls
    bool over_budget = false;  // no measured point fit under the target
};

// Best measured (resolution, qp) per target: among points with achieved
// bitrate <= target, maximize XPSNR; ties break to lower bitrate, then
// lower resolution, then higher QP. Requires full grid coverage.
inline std::vector<LadderEntry> brute_force_hull(const std::vector<RdPoint>& rd_points,
                                                 const HullConfig& config) {
    config.validate();
    std::set<std::pair<int, int>> seen;
    for (const auto& p : rd_points) seen.insert({p.resolution, p.qp});
    for (int r : config.resolutions)
        if (r <= config.r_max)
            for (int q = config.q_min; q <= config.q_max; ++q)
                if (!seen.count({r, q}))
                    throw std::invalid_argument("brute_force_hull: missing cell (" +
                                                std::to_string(r) + ", " + std::to_string(q) + ")");

    auto better = [](const RdPoint& a, const RdPoint& b) {
        if (a.xpsnr_db != b.xpsnr_db) return a.xpsnr_db > b.xpsnr_db;
        if (a.bitrate_kbps != b.bitrate_kbps) return a.bitrate_kbps < b.bitrate_kbps;
        if (a.resolution != b.resolution) return a.resolution < b.resolution;
        return a.qp > b.qp;
    };

    std::vector<LadderEntry> ladder;
    for (double target : config.target_bitrates_kbps) {
        const RdPoint* best = nullptr;
        const RdPoint* cheapest = nullptr;
        for (const auto& p : rd_points) {
            if (p.resolution > config.r_max) continue;
            if (!cheapest || p.bitrate_kbps < cheapest->bitrate_kbps) cheapest = &p;
            if (p.bitrate_kbps <= target && (!best || better(p, *best))) best = &p;
        }
        LadderEntry e;
        e.target_bitrate_kbps = target;
        const RdPoint* pick = best ? best : cheapest;
        e.over_budget = best == nullptr;
        e.resolution = pick->resolution;
        e.qp = pick->qp;
        e.achieved_bitrate_kbps = pick->bitrate_kbps;
        e.predicted_xpsnr_db = pick->xpsnr_db;
        ladder.push_back(e);
    }
    return ladder;
}

// Prediction backend for ladder construction: either the trained models
// or the mock encoder's analytic surfaces (the test oracle).
class LadderPredictor {
  public:
    virtual ~LadderPredictor() = default;
    virtual double predict_xpsnr(const SceneFeatures& f, double bitrate_kbps,
                                 double r_norm) const = 0;
    virtual BitrateBounds bitrate_bounds(const SceneFeatures& f, double r_norm) const = 0;
};

class ModelLadderPredictor : public LadderPredictor {
  public:
    ModelLadderPredictor(PredictionModel xpsnr, PredictionModel bitrate_qmin,
                         PredictionModel bitrate_qmax)
        : xpsnr_(std::move(xpsnr)),
          qmin_(std::move(bitrate_qmin)),
          qmax_(std::move(bitrate_qmax)) {
        if (xpsnr_.kind != ModelKind::Xpsnr || qmin_.kind != ModelKind::BitrateAtQmin ||
            qmax_.kind != ModelKind::BitrateAtQmax)
            throw std::invalid_argument("ModelLadderPredictor: wrong model kinds");
    }

    double predict_xpsnr(const SceneFeatures& f, double bitrate_kbps,
                         double r_norm) const override {
        FeatureVector fv{f, bitrate_kbps, r_norm};
        return vexus::predict_xpsnr(xpsnr_, fv);
    }
    BitrateBounds bitrate_bounds(const SceneFeatures& f, double r_norm) const override {
        FeatureVector fv{f, 0.0, r_norm};
        return vexus::predict_bitrate_bounds(qmin_, qmax_, fv);
    }

  private:
    PredictionModel xpsnr_, qmin_, qmax_;
};

// Perfect predictor wired straight to the mock surfaces.
class MockOracleLadderPredictor : public LadderPredictor {
  public:
    MockOracleLadderPredictor(MockEncoderParams base, bool couple_scene_complexity, int q_min,
                              int q_max)
        : base_(base), couple_(couple_scene_complexity), q_min_(q_min), q_max_(q_max) {}

    double predict_xpsnr(const SceneFeatures& f, double bitrate_kbps,
                         double r_norm) const override {
        auto p = scene_params(f);
        int r = static_cast<int>(r_norm * 2160.0 + 0.5);
        // A perfect predictor answers "what XPSNR does this resolution
        // achieve under this budget": the encoder only offers integer-QP
        // rate points, so quantize the query rate down to the cheapest
        // grid rate that fits the budget (saturating at the q_min rate
        // when the budget exceeds it).
        double b_max = mock_bitrate_kbps(p, r, q_min_);
        double q_star = q_min_ + p.qp_halving * std::log2(b_max / bitrate_kbps);
        int q_eff = static_cast<int>(std::ceil(q_star - 1e-9));
        q_eff = std::clamp(q_eff, q_min_, q_max_);
        return mock_xpsnr_db(p, r, mock_bitrate_kbps(p, r, q_eff));
    }
    BitrateBounds bitrate_bounds(const SceneFeatures& f, double r_norm) const override {
        auto p = scene_params(f);
        int r = static_cast<int>(r_norm * 2160.0 + 0.5);
        BitrateBounds b;
        b.b_max = mock_bitrate_kbps(p, r, q_min_);
        b.b_min = mock_bitrate_kbps(p, r, q_max_);
        return b;
    }

  private:
    MockEncoderParams scene_params(const SceneFeatures& f) const {
        MockEncoderParams p = base_;
        if (couple_) p.c *= scene_complexity_coefficient(f);
        return p;
    }
    MockEncoderParams base_;
    bool couple_;
    int q_min_, q_max_;
};

// Online ladder: per target, the resolution maximizing predicted XPSNR
// (ties to the lower resolution), then QP via log-domain interpolation
// between the predicted bitrate bounds at that resolution.
inline std::vector<LadderEntry> predict_ladder(const SceneFeatures& features,
                                               const HullConfig& config,
                                               const LadderPredictor& predictor) {
    config.validate();
    std::vector<LadderEntry> ladder;
    for (double target : config.target_bitrates_kbps) {
        int best_r = -1;
        double best_x = 0.0;
        for (int r : config.resolutions) {
            if (r > config.r_max) continue;
            double x = predictor.predict_xpsnr(features, target, r / 2160.0);
            if (best_r < 0 || x > best_x) {
                best_r = r;
                best_x = x;
            }
        }
        auto bounds = predictor.bitrate_bounds(features, best_r / 2160.0);
        LadderEntry e;
        e.target_bitrate_kbps = target;
        e.resolution = best_r;
        e.qp = interpolate_qp_guarded(config.q_min, config.q_max, bounds, target);
        e.predicted_xpsnr_db = best_x;
        ladder.push_back(e);
    }
    return ladder;
}

// Fixed bitrate-to-resolution table; QP interpolated at the table's
// resolution. The shipped default mirrors common HLS authoring ladders
// and is configuration, not ground truth.
inline std::map<double, int> default_fixed_ladder_table() {
    return {{145, 360},  {300, 360},  {600, 540},  {900, 540},   {1600, 720},  {2400, 720},
            {3400, 1080}, {4500, 1080}, {5800, 1080}, {8100, 1440}, {11600, 2160}, {16800, 2160}};
}

inline std::vector<LadderEntry> fixed_ladder(const HullConfig& config,
                                             const std::map<double, int>& table,
                                             const SceneFeatures& features,
                                             const LadderPredictor& predictor) {
    config.validate();
    std::vector<LadderEntry> ladder;
    for (double target : config.target_bitrates_kbps) {
        auto it = table.find(target);
        if (it == table.end())
            throw std::invalid_argument("fixed_ladder: no table row for target " +
                                        std::to_string(target));
        int r = std::min(it->second, config.r_max);
        auto bounds = predictor.bitrate_bounds(features, r / 2160.0);
        LadderEntry e;
        e.target_bitrate_kbps = target;
        e.resolution = r;
        e.qp = interpolate_qp_guarded(config.q_min, config.q_max, bounds, target);
        e.predicted_xpsnr_db = 0.0;
        ladder.push_back(e);
    }
    return ladder;
}

}  // namespace vexus
