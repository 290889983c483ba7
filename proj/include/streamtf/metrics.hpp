#pragma once

#include <array>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamtf/tensor.hpp"

STREAMTF_NS_BEGIN

struct MetricReport {
    std::vector<double> mae_per_doa;
    double mae = 0.0;    // mean over DoA and time
    double acc10 = 0.0;  // fraction of samples with per-sample error < 10 deg
    double acc15 = 0.0;  // same with 15 deg
    std::size_t samples = 0;
};

// pred and target are [n_doa x T].
MetricReport compute_metrics(const Tensor& pred, const Tensor& target);
// Accuracy of a per-sample error series against a strict threshold.
double threshold_accuracy(const std::vector<double>& per_sample_error, double threshold);

// One row per subject of the metrics CSV (schema v1).
struct SubjectRow {
    int subject = 0;
    MetricReport metrics;
    double tau_min_ms = 0.0;
    double tau_memory_ms = 0.0;
    long long macs = 0;
};

inline constexpr const char* kMetricsCsvHeader = "subject,mae,acc10,acc15,tau_min_ms,tau_memory_ms,macs";

void write_metrics_csv(std::ostream& out, const std::vector<SubjectRow>& rows);
nlohmann::json to_json(const MetricReport& m);
nlohmann::json to_json(const std::vector<SubjectRow>& rows);

STREAMTF_NS_END
