#include "auvgp/metrics.hpp"

#include <cmath>

namespace auvgp {

std::string horizon_name(Horizon h) {
    return h == Horizon::one_step ? "one_step" : "free_run";
}

MetricsReport compute_metrics(const Mat& residuals) {
    if (residuals.cols() != kNumOutputs)
        throw ConfigError("compute_metrics: expected " +
                          std::to_string(kNumOutputs) + " residual columns");
    if (residuals.rows() == 0)
        throw ConfigError("compute_metrics: no residual rows");
    MetricsReport rep;
    rep.count = static_cast<int>(residuals.rows());
    for (int ch = 0; ch < kNumOutputs; ++ch) {
        const auto col = residuals.col(ch);
        const double press = col.squaredNorm();
        rep.channel[ch].press = press;
        rep.channel[ch].rmse = std::sqrt(press / rep.count);
        rep.channel[ch].mae = col.cwiseAbs().mean();
        rep.rmse += rep.channel[ch].rmse;
        rep.mae += rep.channel[ch].mae;
        rep.press += press;
    }
    rep.rmse /= kNumOutputs;
    rep.mae /= kNumOutputs;
    rep.press /= kNumOutputs;
    return rep;
}

double coverage_fraction(const Mat& residuals, const Mat& sd) {
    if (residuals.rows() != sd.rows() || residuals.cols() != sd.cols())
        throw ConfigError("coverage_fraction: shape mismatch");
    if (residuals.size() == 0)
        throw ConfigError("coverage_fraction: empty residuals");
    long inside = 0;
    for (Eigen::Index i = 0; i < residuals.rows(); ++i)
        for (Eigen::Index j = 0; j < residuals.cols(); ++j)
            if (std::abs(residuals(i, j)) <= 2.0 * sd(i, j)) ++inside;
    return static_cast<double>(inside) /
           static_cast<double>(residuals.size());
}

}  // namespace auvgp
