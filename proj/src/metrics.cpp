#include "streamtf/metrics.hpp"

#include <cmath>
#include <cstdio>

STREAMTF_NS_BEGIN

double threshold_accuracy(const std::vector<double>& per_sample_error, double threshold) {
    if (per_sample_error.empty()) return 0.0;
    std::size_t hits = 0;
    for (double e : per_sample_error) hits += e < threshold;
    return static_cast<double>(hits) / static_cast<double>(per_sample_error.size());
}

MetricReport compute_metrics(const Tensor& pred, const Tensor& target) {
    if (pred.rank() != 2 || pred.shape() != target.shape()) {
        throw ShapeError("compute_metrics: prediction " + shape_str(pred.shape()) + " vs target " +
                         shape_str(target.shape()));
    }
    const std::size_t R = pred.dim(0), T = pred.dim(1);
    if (R == 0 || T == 0) throw ShapeError("compute_metrics: empty input");
    MetricReport m;
    m.samples = T;
    m.mae_per_doa.assign(R, 0.0);
    std::vector<double> per_sample(T, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t t = 0; t < T; ++t) {
            const double e = std::abs(static_cast<double>(pred[r * T + t]) - static_cast<double>(target[r * T + t]));
            m.mae_per_doa[r] += e;
            per_sample[t] += e;
        }
        m.mae_per_doa[r] /= static_cast<double>(T);
        m.mae += m.mae_per_doa[r];
    }
    m.mae /= static_cast<double>(R);
    // Per-sample error: mean absolute error over the DoA at that instant.
    for (auto& e : per_sample) e /= static_cast<double>(R);
    m.acc10 = threshold_accuracy(per_sample, 10.0);
    m.acc15 = threshold_accuracy(per_sample, 15.0);
    return m;
}

void write_metrics_csv(std::ostream& out, const std::vector<SubjectRow>& rows) {
    out << kMetricsCsvHeader << '\n';
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.3f,%.3f,%lld", r.subject, r.metrics.mae, r.metrics.acc10,
                      r.metrics.acc15, r.tau_min_ms, r.tau_memory_ms, r.macs);
        out << buf << '\n';
    }
}

nlohmann::json to_json(const MetricReport& m) {
    return {{"mae", m.mae}, {"mae_per_doa", m.mae_per_doa}, {"acc10", m.acc10}, {"acc15", m.acc15}, {"samples", m.samples}};
}

nlohmann::json to_json(const std::vector<SubjectRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"subject", r.subject},
                       {"metrics", to_json(r.metrics)},
                       {"tau_min_ms", r.tau_min_ms},
                       {"tau_memory_ms", r.tau_memory_ms},
                       {"macs", r.macs}});
    }
    return out;
}

STREAMTF_NS_END
