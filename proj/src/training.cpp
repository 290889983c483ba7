#include "streamtf/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "streamtf/checkpoint.hpp"
#include "streamtf/ops.hpp"

STREAMTF_NS_BEGIN

LossTerms total_loss(Var y, Var target, std::span<const Var> embeddings, std::span<const Var> qkv, double lambda,
                     Variant variant, SparsitySign sign) {
    Tape& tape = *y.tape;
    LossTerms out;
    out.l1 = ops::l1_loss(y, target);
    if (variant == Variant::dense) {
        out.total = out.l1;
        out.embedding_norm = tape.constant(Tensor({}, Scalar(0)));
        out.qkv_norm = tape.constant(Tensor({}, Scalar(0)));
        return out;
    }
    out.embedding_norm = embeddings.empty() ? tape.constant(Tensor({}, Scalar(0))) : ops::l2_norm(embeddings);
    out.qkv_norm = qkv.empty() ? tape.constant(Tensor({}, Scalar(0))) : ops::l2_norm(qkv);
    const Scalar half = static_cast<Scalar>(lambda / 2);
    Var term = ops::scale(ops::add(out.embedding_norm, out.qkv_norm), half);
    out.total = sign == SparsitySign::as_printed ? ops::sub(out.l1, term) : ops::add(out.l1, term);
    return out;
}

void adam_step(std::vector<Parameter>& params, std::span<const Tensor> grads, AdamState& state, const AdamOptions& o) {
    if (grads.size() != params.size()) throw std::invalid_argument("adam_step: one gradient per parameter required");
    for (std::size_t i = 0; i < params.size(); ++i) {
        expect_shape(grads[i], params[i].value.shape(), "adam_step gradient");
        if (!grads[i].all_finite()) throw NumericError("non-finite gradient for parameter '" + params[i].name + "'");
    }
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.value.shape());
            state.v.emplace_back(p.value.shape());
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i].value;
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        for (std::size_t j = 0; j < w.numel(); ++j) {
            const double gj = g[j];
            const double mj = o.beta1 * m[j] + (1 - o.beta1) * gj;
            const double vj = o.beta2 * v[j] + (1 - o.beta2) * gj * gj;
            m[j] = static_cast<Scalar>(mj);
            v[j] = static_cast<Scalar>(vj);
            const double update = o.lr * (mj / bc1) / (std::sqrt(vj / bc2) + o.eps);
            w[j] = static_cast<Scalar>(w[j] - update);
        }
    }
}

void write_loss_csv(std::ostream& out, const std::vector<EpochStats>& curve) {
    out << kLossCsvHeader << '\n';
    char buf[256];
    for (const auto& e : curve) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.3f", e.epoch, e.loss, e.l1, e.embedding_norm,
                      e.qkv_norm, e.seconds);
        out << buf << '\n';
    }
}

namespace {

Tensor slice_time(const Tensor& x, std::size_t start, std::size_t len) {
    const std::size_t R = x.dim(0), T = x.dim(1);
    Tensor out({R, len});
    for (std::size_t r = 0; r < R; ++r)
        std::copy_n(x.data() + r * T + start, len, out.data() + r * len);
    return out;
}

Tensor concat_time(const std::vector<Tensor>& parts) {
    const std::size_t R = parts.front().dim(0);
    std::size_t total = 0;
    for (const auto& p : parts) total += p.dim(1);
    Tensor out({R, total});
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t T = p.dim(1);
        for (std::size_t r = 0; r < R; ++r) std::copy_n(p.data() + r * T, T, out.data() + r * total + off);
        off += T;
    }
    return out;
}

std::vector<Recording> normalized(const std::vector<Recording>& recs) {
    std::vector<Recording> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.push_back(normalize_repetition(r).recording);
    return out;
}

}  // namespace

EpochStats train_batch(Model& model, AdamState& adam, const std::vector<Recording>& recs,
                       std::span<const WindowRef> windows, const TrainConfig& cfg, Rng& rng) {
    if (windows.empty()) throw std::invalid_argument("train_batch: empty batch");
    const auto& mc = model.config();
    Tape tape;
    auto params = bind_parameters(tape, model, true);
    ForwardOptions fo;
    fo.training = true;
    fo.rng = &rng;

    std::vector<Var> l1s, embeddings, qkv;
    std::vector<Var> preds, targets;
    for (const auto& w : windows) {
        const Recording& rec = recs.at(w.recording);
        Var x = tape.constant(slice_time(rec.emg, w.start, cfg.window));
        Var t = tape.constant(slice_time(rec.targets, w.start, cfg.window));
        ParallelOutput out = forward_parallel(model, params, x, fo);
        l1s.push_back(ops::l1_loss(out.predictions, t));
        if (mc.sparse()) {
            embeddings.push_back(out.embedding);
            for (const auto& b : out.blocks) {
                qkv.push_back(b.q);
                qkv.push_back(b.k);
                qkv.push_back(b.v);
            }
        }
    }
    // Mean of per-window L1 (every window has the same length).
    Var l1 = l1s.front();
    for (std::size_t i = 1; i < l1s.size(); ++i) l1 = ops::add(l1, l1s[i]);
    l1 = ops::scale(l1, Scalar(1) / static_cast<Scalar>(l1s.size()));

    EpochStats st;
    Var total = l1;
    if (mc.sparse()) {
        Var en = ops::l2_norm(embeddings), qn = ops::l2_norm(qkv);
        Var term = ops::scale(ops::add(en, qn), static_cast<Scalar>(cfg.lambda / 2));
        total = cfg.sparsity_sign == SparsitySign::as_printed ? ops::sub(l1, term) : ops::add(l1, term);
        st.embedding_norm = en.value().item();
        st.qkv_norm = qn.value().item();
    }
    st.loss = total.value().item();
    st.l1 = l1.value().item();
    if (!std::isfinite(st.loss)) throw NumericError("loss is not finite");
    tape.backward(total);

    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.push_back(p.grad());
    if (cfg.clip_grad_norm > 0) {
        double ss = 0;
        for (const auto& g : grads)
            for (Scalar v : g.values()) ss += static_cast<double>(v) * v;
        const double norm = std::sqrt(ss);
        if (norm > cfg.clip_grad_norm) {
            const auto f = static_cast<Scalar>(cfg.clip_grad_norm / norm);
            for (auto& g : grads)
                for (auto& v : g.values()) v *= f;
        }
    }
    adam_step(model.parameters(), grads, adam, {cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
    return st;
}

TrainResult train_subject(const SubjectData& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                          const TrainOptions& opts) {
    mcfg.validate();
    tcfg.validate();
    if (data.train.empty()) throw std::invalid_argument("train_subject: no training recordings");
    const std::vector<Recording> train = normalized(data.train);
    const std::vector<Recording> test = normalized(data.test);

    Rng root(tcfg.seed);
    TrainResult result{Model(mcfg, root.fork(1).next_u64() ^ opts.init_seed), {}, 0.0, {}};
    Model& model = result.model;
    AdamState adam;
    Rng dropout_rng = root.fork(3);

    bool first_batch = true;
    for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        AugmentOptions ao{tcfg.window, tcfg.duplicates, tcfg.max_shift, root.fork(100 + epoch).next_u64()};
        const auto windows = augment_training_windows(train, ao);
        EpochStats sum;
        std::size_t batches = 0;
        try {
            for (std::size_t b = 0; b < windows.size(); b += tcfg.batch) {
                const std::size_t n = std::min(tcfg.batch, windows.size() - b);
                const EpochStats st =
                    train_batch(model, adam, train, std::span(windows).subspan(b, n), tcfg, dropout_rng);
                if (first_batch) {
                    result.initial_l1 = st.l1;
                    first_batch = false;
                }
                sum.loss += st.loss;
                sum.l1 += st.l1;
                sum.embedding_norm += st.embedding_norm;
                sum.qkv_norm += st.qkv_norm;
                ++batches;
            }
        } catch (const NumericError& e) {
            throw TrainingDiverged("training diverged in epoch " + std::to_string(epoch) + ": " + e.what());
        }
        EpochStats es;
        es.epoch = epoch;
        const double nb = static_cast<double>(std::max<std::size_t>(batches, 1));
        es.loss = sum.loss / nb;
        es.l1 = sum.l1 / nb;
        es.embedding_norm = sum.embedding_norm / nb;
        es.qkv_norm = sum.qkv_norm / nb;
        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.curve.push_back(es);
        if (opts.checkpoint) save_checkpoint(*opts.checkpoint, model);
        if (opts.loss_csv) {
            std::ofstream out(*opts.loss_csv, std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write " + opts.loss_csv->string());
            write_loss_csv(out, result.curve);
        }
        if (opts.on_epoch) opts.on_epoch(es);
    }
    if (!test.empty()) result.test_metrics = evaluate_streaming(model, test);
    return result;
}

MetricReport evaluate_streaming(const Model& model, const std::vector<Recording>& recs) {
    if (recs.empty()) throw std::invalid_argument("evaluate_streaming: no recordings");
    std::vector<Tensor> preds, targets;
    for (const auto& r : recs) {
        preds.push_back(stream_recording(model, r.emg));
        targets.push_back(r.targets);
    }
    return compute_metrics(concat_time(preds), concat_time(targets));
}

MetricReport evaluate_parallel(const Model& model, const std::vector<Recording>& recs) {
    if (recs.empty()) throw std::invalid_argument("evaluate_parallel: no recordings");
    std::vector<Tensor> preds, targets;
    for (const auto& r : recs) {
        preds.push_back(predict_parallel(model, r.emg));
        targets.push_back(r.targets);
    }
    return compute_metrics(concat_time(preds), concat_time(targets));
}

MetricReport evaluate_constant_mean(const std::vector<Recording>& train, const std::vector<Recording>& test) {
    if (train.empty() || test.empty()) throw std::invalid_argument("evaluate_constant_mean: empty recordings");
    const std::size_t R = train.front().targets.dim(0);
    std::vector<double> mean(R, 0.0);
    std::size_t n = 0;
    for (const auto& r : train) {
        const std::size_t T = r.targets.dim(1);
        for (std::size_t d = 0; d < R; ++d)
            for (std::size_t t = 0; t < T; ++t) mean[d] += r.targets[d * T + t];
        n += T;
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<Tensor> preds, targets;
    for (const auto& r : test) {
        Tensor p(r.targets.shape());
        const std::size_t T = r.targets.dim(1);
        for (std::size_t d = 0; d < R; ++d)
            for (std::size_t t = 0; t < T; ++t) p[d * T + t] = static_cast<Scalar>(mean[d]);
        preds.push_back(std::move(p));
        targets.push_back(r.targets);
    }
    return compute_metrics(concat_time(preds), concat_time(targets));
}

STREAMTF_NS_END
