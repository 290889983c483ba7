#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "streamtf/config.hpp"
#include "streamtf/data.hpp"
#include "streamtf/metrics.hpp"
#include "streamtf/model.hpp"

STREAMTF_NS_BEGIN

struct LossTerms {
    Var total;
    Var l1;
    Var embedding_norm;  // only recorded for sparse variants
    Var qkv_norm;
};

// Dense: mean |y - target|. Sparse variants add the activation norm term
// -lambda/2 (||x||_2 + ||concat(Q, K, V)||_2) (sign per `sign`), norms taken
// over every element passed in.
LossTerms total_loss(Var y, Var target, std::span<const Var> embeddings, std::span<const Var> qkv, double lambda,
                     Variant variant, SparsitySign sign = SparsitySign::as_printed);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::size_t step = 0;
};

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Raises NumericError naming the first parameter with a
// non-finite gradient, before anything is modified.
void adam_step(std::vector<Parameter>& params, std::span<const Tensor> grads, AdamState& state, const AdamOptions& opts);

class TrainingDiverged : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct EpochStats {
    std::size_t epoch = 0;
    double loss = 0.0;  // mean total loss over the epoch's batches
    double l1 = 0.0;    // mean L1 over the epoch's batches
    double embedding_norm = 0.0;
    double qkv_norm = 0.0;
    double seconds = 0.0;
};

inline constexpr const char* kLossCsvHeader = "epoch,loss,l1,embedding_norm,qkv_norm,seconds";
void write_loss_csv(std::ostream& out, const std::vector<EpochStats>& curve);

struct TrainOptions {
    std::optional<std::filesystem::path> checkpoint;  // written after every good epoch
    std::optional<std::filesystem::path> loss_csv;
    std::function<void(const EpochStats&)> on_epoch;
    std::uint64_t init_seed = 0;
};

struct TrainResult {
    Model model;
    std::vector<EpochStats> curve;
    double initial_l1 = 0.0;  // first batch, before any update
    MetricReport test_metrics;
};

// One batch step; returns the loss terms' values. Exposed for tests.
EpochStats train_batch(Model& model, AdamState& adam, const std::vector<Recording>& recs,
                       std::span<const WindowRef> windows, const TrainConfig& cfg, Rng& rng);

// Normalize -> augment -> batches of parallel forward/backward/Adam for
// every epoch, then streaming evaluation on the held-out recordings.
TrainResult train_subject(const SubjectData& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                          const TrainOptions& opts = {});

// Streaming-path evaluation: predictions of each (normalized) recording are
// concatenated before scoring.
MetricReport evaluate_streaming(const Model& model, const std::vector<Recording>& recs);
MetricReport evaluate_parallel(const Model& model, const std::vector<Recording>& recs);
// Baseline that always predicts the per-DoA training mean.
MetricReport evaluate_constant_mean(const std::vector<Recording>& train, const std::vector<Recording>& test);

STREAMTF_NS_END
