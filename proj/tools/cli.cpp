#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamtf/attention.hpp"
#include "streamtf/checkpoint.hpp"
#include "streamtf/config.hpp"
#include "streamtf/data.hpp"
#include "streamtf/metrics.hpp"
#include "streamtf/model.hpp"
#include "streamtf/opscount.hpp"
#include "streamtf/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace streamtf::cli {

std::vector<std::size_t> default_sweep_memories() {
    std::vector<std::size_t> m;
    for (std::size_t v = 10; v <= 150; v += 20) m.push_back(v);
    return m;
}

std::vector<std::size_t> default_sweep_kernels() { return {7, 15, 20, 25, 30}; }

namespace {

// Raised for bad stream input lines.
class InputError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string config_file;
    std::optional<std::uint64_t> seed;
    std::string data;

    std::optional<std::string> variant;
    std::optional<std::size_t> channels, embed_dim, attn_dim, heads, hidden, blocks, kernel, memory;
    std::optional<double> dropout;

    std::optional<std::size_t> epochs, batch, window, duplicates, max_shift;
    std::optional<double> lr, lambda, clip;
    std::optional<std::string> sparsity_sign;
};

template <class T>
void apply(T& field, const std::optional<T>& flag, bool& touched) {
    if (flag) {
        field = *flag;
        touched = true;
    }
}

struct Resolved {
    ModelConfig model;
    TrainConfig train;
    bool model_given = false;  // config file or any model flag
};

json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "model" && key != "train") throw ConfigError("config file " + path + ": unknown section '" + key + "'");
    }
    return j;
}

// defaults < config file < flags
Resolved resolve(const Settings& s) {
    Resolved r;
    if (!s.config_file.empty()) {
        const json j = read_config_file(s.config_file);
        if (j.contains("model")) {
            r.model = model_config_from_json(j["model"]);
            r.model_given = true;
        }
        if (j.contains("train")) r.train = train_config_from_json(j["train"]);
    }
    bool& m = r.model_given;
    if (s.variant) {
        r.model.variant = parse_variant(*s.variant);
        m = true;
    }
    apply(r.model.channels, s.channels, m);
    apply(r.model.embed_dim, s.embed_dim, m);
    apply(r.model.attn_dim, s.attn_dim, m);
    apply(r.model.heads, s.heads, m);
    apply(r.model.hidden, s.hidden, m);
    apply(r.model.blocks, s.blocks, m);
    apply(r.model.kernel, s.kernel, m);
    apply(r.model.memory, s.memory, m);
    apply(r.model.dropout, s.dropout, m);

    bool t = false;
    apply(r.train.epochs, s.epochs, t);
    apply(r.train.batch, s.batch, t);
    apply(r.train.window, s.window, t);
    apply(r.train.duplicates, s.duplicates, t);
    apply(r.train.max_shift, s.max_shift, t);
    apply(r.train.lr, s.lr, t);
    apply(r.train.lambda, s.lambda, t);
    apply(r.train.clip_grad_norm, s.clip, t);
    if (s.sparsity_sign) {
        if (*s.sparsity_sign == "as_printed") r.train.sparsity_sign = SparsitySign::as_printed;
        else if (*s.sparsity_sign == "penalize") r.train.sparsity_sign = SparsitySign::penalize;
        else throw ConfigError("unknown sparsity sign '" + *s.sparsity_sign + "'");
    }
    if (s.seed) r.train.seed = *s.seed;
    r.model.validate();
    r.train.validate();
    return r;
}

fs::path data_dir(const Settings& s) {
    if (!s.data.empty()) return s.data;
    if (const char* env = std::getenv(kDataEnv); env && *env) return env;
    throw DatasetMissing(std::string("no dataset given (use --data or set ") + kDataEnv + ")");
}

std::string format(const char* fmt, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

fs::path checkpoint_name(int subject) { return format("s%02d.stfc", subject); }

std::vector<Recording> normalized(const std::vector<Recording>& recs) {
    std::vector<Recording> out;
    out.reserve(recs.size());
    for (const auto& r : recs) out.push_back(normalize_repetition(r).recording);
    return out;
}

SparsityStats stats_for(const Model& model, const std::vector<Recording>& test) {
    if (!model.config().sparse()) return SparsityStats::dense(model.config());
    return measure_sparsity(model, test);
}

SubjectRow subject_row(int subject, const MetricReport& m, const ModelConfig& c, const SparsityStats& stats) {
    SubjectRow row;
    row.subject = subject;
    row.metrics = m;
    row.tau_min_ms = c.tau_min() * 1e3;
    row.tau_memory_ms = c.tau_memory() * 1e3;
    row.macs = count_macs(c, stats).total;
    return row;
}

std::vector<SubjectData> select_subjects(std::vector<SubjectData> all, const std::vector<int>& wanted) {
    if (wanted.empty()) return all;
    std::vector<SubjectData> out;
    for (int w : wanted) {
        auto it = std::find_if(all.begin(), all.end(), [&](const SubjectData& d) { return d.subject == w; });
        if (it == all.end()) throw DatasetMissing(format("subject %d not in dataset", w));
        out.push_back(std::move(*it));
    }
    return out;
}

void write_metrics_files(const fs::path& dir, const std::vector<SubjectRow>& rows) {
    std::ofstream csv(dir / "metrics.csv");
    write_metrics_csv(csv, rows);
    std::ofstream js(dir / "metrics.json");
    js << to_json(rows).dump(2) << '\n';
    if (!csv || !js) throw std::runtime_error("cannot write metrics in " + dir.string());
}

// ---- commands ---------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int subjects = 2;
    std::size_t length = 60000;
    double noise = 0.1;
};

int cmd_synth(const Settings& s, const SynthArgs& a, std::ostream& out) {
    const Resolved r = resolve(s);
    fs::create_directories(a.out);
    Rng root(r.train.seed);
    for (int subject = 1; subject <= a.subjects; ++subject) {
        for (int acq = 1; acq <= 3; ++acq) {
            SynthOptions o;
            o.channels = r.model.channels;
            o.n_doa = r.model.n_doa;
            o.length = a.length;
            o.sample_rate_hz = r.model.sample_rate_hz;
            o.noise_level = a.noise;
            o.subject = subject;
            o.acquisition = acq;
            const std::uint64_t seed = root.fork(static_cast<std::uint64_t>(subject * 10 + acq)).next_u64();
            const fs::path path = fs::path(a.out) / recording_filename(subject, acq);
            write_recording(path, synth_dataset(o, seed).recording);
            out << path.string() << '\n';
        }
    }
    return kOk;
}

int cmd_convert_check(const Settings& s, std::ostream& out, std::ostream& err) {
    const fs::path dir = data_dir(s);
    if (!fs::is_directory(dir)) throw DatasetMissing("dataset directory not found: " + dir.string());
    const auto issues = check_dataset(dir);
    for (const auto& i : issues) err << i.file.string() << ": " << i.message << '\n';
    if (!issues.empty()) return kInvalidData;
    const auto subjects = load_dataset(dir);
    std::size_t n = 0;
    for (const auto& d : subjects) n += d.train.size() + d.test.size();
    out << "ok: " << n << " recordings, " << subjects.size() << " subjects\n";
    return kOk;
}

struct TrainArgs {
    std::string out = "runs";
    std::vector<int> subjects;
};

int cmd_train(const Settings& s, const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(s);
    const auto data = select_subjects(load_dataset(data_dir(s)), a.subjects);
    const fs::path dir = a.out;
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "config.json");
        cfg << json{{"model", to_json(r.model)}, {"train", to_json(r.train)}}.dump(2) << '\n';
    }
    std::vector<SubjectRow> rows;
    for (const auto& d : data) {
        TrainOptions opts;
        opts.checkpoint = dir / checkpoint_name(d.subject);
        opts.loss_csv = dir / format("s%02d_loss.csv", d.subject);
        opts.on_epoch = [&](const EpochStats& e) {
            err << format("subject %d epoch %zu loss %.6g l1 %.6g (%.1f s)\n", d.subject, e.epoch, e.loss, e.l1,
                          e.seconds);
        };
        TrainResult res = train_subject(d, r.model, r.train, opts);
        const auto stats = stats_for(res.model, normalized(d.test));
        rows.push_back(subject_row(d.subject, res.test_metrics, r.model, stats));
    }
    write_metrics_files(dir, rows);
    write_metrics_csv(out, rows);
    return kOk;
}

struct EvalArgs {
    std::string checkpoints = "runs";
    std::string out;
    std::vector<int> subjects;
};

Model load_model(const fs::path& path, const Resolved& r) {
    return r.model_given ? load_checkpoint(path, r.model) : load_checkpoint(path);
}

int cmd_eval(const Settings& s, const EvalArgs& a, std::ostream& out) {
    const Resolved r = resolve(s);
    const auto data = select_subjects(load_dataset(data_dir(s)), a.subjects);
    std::vector<SubjectRow> rows;
    for (const auto& d : data) {
        const Model model = load_model(fs::path(a.checkpoints) / checkpoint_name(d.subject), r);
        const auto test = normalized(d.test);
        rows.push_back(subject_row(d.subject, evaluate_streaming(model, test), model.config(), stats_for(model, test)));
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        write_metrics_files(a.out, rows);
    }
    write_metrics_csv(out, rows);
    return kOk;
}

struct StreamArgs {
    std::string checkpoint;
    std::string input = "-";
};

std::vector<Scalar> parse_sample(const std::string& line, std::size_t channels, std::size_t lineno) {
    std::string text = line;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream ss(text);
    std::vector<Scalar> v;
    std::string tok;
    while (ss >> tok) {
        char* end = nullptr;
        const double x = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0' || !std::isfinite(x))
            throw InputError(format("line %zu: bad value '%s'", lineno, tok.c_str()));
        v.push_back(static_cast<Scalar>(x));
    }
    if (v.size() != channels)
        throw InputError(format("line %zu: expected %zu values, got %zu", lineno, channels, v.size()));
    return v;
}

int cmd_stream(const Settings& s, const StreamArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(s);
    const Model model = a.checkpoint.empty() ? Model(r.model, r.train.seed) : load_model(a.checkpoint, r);
    const std::size_t channels = model.config().channels;

    std::ifstream file;
    std::istream* src = &in;
    if (a.input != "-") {
        file.open(a.input);
        if (!file) throw InputError("cannot open " + a.input);
        src = &file;
    }

    StreamingSession session(model);
    std::vector<double> latencies_us;
    auto emit = [&](std::span<const Scalar> rows) {
        const std::size_t n = model.config().n_doa;
        for (std::size_t i = 0; i + n <= rows.size(); i += n) {
            for (std::size_t j = 0; j < n; ++j) out << (j ? " " : "") << format("%.6g", static_cast<double>(rows[i + j]));
            out << '\n';
        }
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(*src, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        const auto sample = parse_sample(line, channels, lineno);
        const std::size_t before = session.tokens_emitted();
        const auto t0 = std::chrono::steady_clock::now();
        const auto rows = session.push(sample);
        const auto t1 = std::chrono::steady_clock::now();
        if (session.tokens_emitted() > before)
            latencies_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        emit(rows);
    }
    emit(session.finish());
    out.flush();

    double mean = 0, worst = 0;
    for (double l : latencies_us) {
        mean += l;
        worst = std::max(worst, l);
    }
    if (!latencies_us.empty()) mean /= static_cast<double>(latencies_us.size());
    err << format("tokens %zu, per-token latency mean %.1f us, max %.1f us\n", latencies_us.size(), mean, worst);
    return kOk;
}

struct BenchArgs {
    std::vector<std::size_t> ns{64, 128, 256, 512, 1024};
    int repeat = 3;
};

int cmd_bench(const Settings& s, const BenchArgs& a, std::ostream& out) {
    const Resolved r = resolve(s);
    const std::size_t h = r.model.heads, d = r.model.attn_dim, M = r.model.memory;
    const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(d)));
    Rng rng(r.train.seed);
    out << kBenchCsvHeader << '\n';
    for (std::size_t n : a.ns) {
        auto random = [&] {
            Tensor t({n, h * d});
            for (auto& x : t.values()) x = static_cast<Scalar>(rng.normal());
            return t;
        };
        const Tensor q = random(), k = random(), v = random();
        kernels::MacCounter sliding, full;
        double sliding_ms = 1e300, full_ms = 1e300;
        for (int rep = 0; rep < std::max(1, a.repeat); ++rep) {
            Tape tape;
            kernels::MacCounter cs, cf;
            auto t0 = std::chrono::steady_clock::now();
            unfold_sliding_attention(tape.constant(q), tape.constant(k), tape.constant(v), h, M, scale, &cs);
            auto t1 = std::chrono::steady_clock::now();
            self_attention_reference(tape.constant(q), tape.constant(k), tape.constant(v), h, scale, false, &cf);
            auto t2 = std::chrono::steady_clock::now();
            sliding_ms = std::min(sliding_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
            full_ms = std::min(full_ms, std::chrono::duration<double, std::milli>(t2 - t1).count());
            sliding = cs;
            full = cf;
        }
        out << format("%zu,%zu,%zu,%zu,%llu,%llu,%.4f,%.4f\n", n, M, h, d,
                      static_cast<unsigned long long>(sliding.macs), static_cast<unsigned long long>(full.macs),
                      sliding_ms, full_ms);
    }
    return kOk;
}

struct CountArgs {
    std::string checkpoint;
    bool measure = false;  // measure sparsity on the --data test recordings
    bool csv = false;
    std::optional<double> embedding, v, attention, ffl1, qk_l1;
};

int cmd_count_ops(const Settings& s, const CountArgs& a, std::ostream& out) {
    const Resolved r = resolve(s);
    std::optional<Model> model;
    if (!a.checkpoint.empty()) model.emplace(load_model(a.checkpoint, r));
    const ModelConfig config = model ? model->config() : r.model;

    SparsityStats stats = SparsityStats::dense(config);
    if (a.measure) {
        if (!model) model.emplace(config, r.train.seed);
        std::vector<Recording> test;
        for (const auto& d : load_dataset(data_dir(s))) {
            for (auto& rec : normalized(d.test)) test.push_back(std::move(rec));
        }
        stats = measure_sparsity(*model, test);
    }
    if (a.embedding) stats.embedding_sparsity = *a.embedding;
    if (a.v) stats.v_sparsity = *a.v;
    if (a.attention) stats.attention_sparsity = *a.attention;
    if (a.ffl1) stats.ffl1_sparsity = *a.ffl1;
    if (a.qk_l1) stats.qk_l1 = *a.qk_l1;
    try {
        stats.validate();
        if (stats.qk_l1 > static_cast<double>(config.attn_dim)) throw std::invalid_argument("qk_l1 exceeds attn_dim");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    if (a.csv) {
        out << kMacCsvHeader << '\n' << mac_csv_row(config, count_macs(config, stats)) << '\n';
    } else {
        out << mac_report_json(config, stats).dump(2) << '\n';
    }
    return kOk;
}

struct SweepArgs {
    std::string out;
    std::vector<std::size_t> memories = default_sweep_memories();
    std::vector<std::size_t> kernels = default_sweep_kernels();
    std::vector<int> subjects;
};

int cmd_sweep(const Settings& s, const SweepArgs& a, std::ostream& out, std::ostream& err) {
    const Resolved r = resolve(s);
    const auto data = select_subjects(load_dataset(data_dir(s)), a.subjects);
    std::ofstream file;
    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
        file.open(a.out);
        if (!file) throw std::runtime_error("cannot write " + a.out);
    }
    auto row = [&](const std::string& line) {
        out << line << '\n';
        if (file.is_open()) file << line << '\n' << std::flush;
    };
    row(kSweepCsvHeader);
    for (std::size_t M : a.memories) {
        for (std::size_t k : a.kernels) {
            ModelConfig mc = r.model;
            mc.memory = M;
            mc.kernel = k;
            mc.validate();
            double mae = 0, acc10 = 0, acc15 = 0;
            for (const auto& d : data) {
                const TrainResult res = train_subject(d, mc, r.train);
                mae += res.test_metrics.mae;
                acc10 += res.test_metrics.acc10;
                acc15 += res.test_metrics.acc15;
                err << format("M=%zu k=%zu subject %d mae %.3f\n", M, k, d.subject, res.test_metrics.mae);
            }
            const double n = static_cast<double>(data.size());
            row(format("%zu,%zu,%.3f,%.3f,%zu,%.6f,%.6f,%.6f", M, k, mc.tau_min() * 1e3, mc.tau_memory() * 1e3,
                       data.size(), mae / n, acc10 / n, acc15 / n));
        }
    }
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming sliding-window transformer for sEMG regression"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    const auto all = CLI::MultiOptionPolicy::TakeAll;

    Settings s;
    app.add_option("--config", s.config_file, "JSON file with \"model\" and/or \"train\" objects");
    app.add_option("--seed", s.seed, "seed for every random stream");
    app.add_option("--data", s.data, std::string("dataset directory (default: $") + kDataEnv + ")");

    auto* model = app.add_option_group("model", "model settings (override the config file)");
    model->add_option("--variant", s.variant, "dense, sparseA or sparseB");
    model->add_option("--channels", s.channels);
    model->add_option("--embed-dim", s.embed_dim);
    model->add_option("--attn-dim", s.attn_dim);
    model->add_option("--heads", s.heads);
    model->add_option("--hidden", s.hidden);
    model->add_option("--blocks", s.blocks);
    model->add_option("--kernel", s.kernel);
    model->add_option("--memory", s.memory, "stored tokens M");
    model->add_option("--dropout", s.dropout);

    auto* train = app.add_option_group("train", "training settings (override the config file)");
    train->add_option("--epochs", s.epochs);
    train->add_option("--batch", s.batch);
    train->add_option("--lr", s.lr);
    train->add_option("--lambda", s.lambda);
    train->add_option("--sparsity-sign", s.sparsity_sign, "as_printed or penalize");
    train->add_option("--window", s.window);
    train->add_option("--duplicates", s.duplicates);
    train->add_option("--max-shift", s.max_shift);
    train->add_option("--clip-grad-norm", s.clip, "0 disables");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "write a synthetic dataset");
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--subjects", synth.subjects)->check(CLI::PositiveNumber);
    c_synth->add_option("--length", synth.length, "samples per acquisition")->check(CLI::PositiveNumber);
    c_synth->add_option("--noise", synth.noise)->check(CLI::NonNegativeNumber);

    auto* c_check = app.add_subcommand("convert-check", "validate the recordings of a dataset");

    TrainArgs targs;
    auto* c_train = app.add_subcommand("train", "train one model per subject");
    c_train->add_option("--out", targs.out, "run directory for checkpoints and metrics");
    c_train->add_option("--subject", targs.subjects, "restrict to these subjects")->multi_option_policy(all);

    EvalArgs eargs;
    auto* c_eval = app.add_subcommand("eval", "evaluate saved checkpoints on the test acquisitions");
    c_eval->add_option("--checkpoints", eargs.checkpoints, "directory with sNN.stfc files");
    c_eval->add_option("--out", eargs.out, "also write metrics.csv/json here");
    c_eval->add_option("--subject", eargs.subjects)->multi_option_policy(all);

    StreamArgs sargs;
    auto* c_stream = app.add_subcommand("stream", "online inference, one input sample per line");
    c_stream->add_option("--checkpoint", sargs.checkpoint, "model file (default: randomly initialised)");
    c_stream->add_option("--input", sargs.input, "input file, - for stdin");

    BenchArgs bargs;
    auto* c_bench = app.add_subcommand("bench", "sliding vs full attention cost over N");
    c_bench->add_option("--n", bargs.ns, "sequence lengths")->delimiter(',')->multi_option_policy(all);
    c_bench->add_option("--repeat", bargs.repeat);

    CountArgs cargs;
    auto* c_count = app.add_subcommand("count-ops", "MAC count per inference");
    c_count->add_option("--checkpoint", cargs.checkpoint);
    c_count->add_flag("--measure", cargs.measure, "measure sparsity on the dataset's test recordings");
    c_count->add_flag("--csv", cargs.csv, "CSV row instead of JSON");
    c_count->add_option("--embedding-sparsity", cargs.embedding);
    c_count->add_option("--v-sparsity", cargs.v);
    c_count->add_option("--attention-sparsity", cargs.attention);
    c_count->add_option("--ffl1-sparsity", cargs.ffl1);
    c_count->add_option("--qk-l1", cargs.qk_l1);

    SweepArgs wargs;
    auto* c_sweep = app.add_subcommand("sweep", "train and evaluate over memory M and kernel k");
    c_sweep->add_option("--out", wargs.out, "CSV file (also printed)");
    c_sweep->add_option("--memories", wargs.memories)->delimiter(',')->multi_option_policy(all);
    c_sweep->add_option("--kernels", wargs.kernels)->delimiter(',')->multi_option_policy(all);
    c_sweep->add_option("--subject", wargs.subjects)->multi_option_policy(all);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (c_synth->parsed()) return cmd_synth(s, synth, out);
        if (c_check->parsed()) return cmd_convert_check(s, out, err);
        if (c_train->parsed()) return cmd_train(s, targs, out, err);
        if (c_eval->parsed()) return cmd_eval(s, eargs, out);
        if (c_stream->parsed()) return cmd_stream(s, sargs, in, out, err);
        if (c_bench->parsed()) return cmd_bench(s, bargs, out);
        if (c_count->parsed()) return cmd_count_ops(s, cargs, out);
        if (c_sweep->parsed()) return cmd_sweep(s, wargs, out, err);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const DatasetMissing& e) {
        err << "missing dataset: " << e.what() << '\n';
        return kDatasetMissing;
    } catch (const CheckpointMismatch& e) {
        err << "checkpoint mismatch: " << e.what() << '\n';
        return kCheckpointMismatch;
    } catch (const TrainingDiverged& e) {
        err << "training diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const InputError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInvalidData;
    } catch (const FormatError& e) {
        err << "invalid data: " << e.what() << '\n';
        return kInvalidData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace streamtf::cli
