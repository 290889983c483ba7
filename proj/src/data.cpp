#include "streamtf/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

STREAMTF_NS_BEGIN

namespace {

constexpr double kDegenerateStd = 1e-8;

std::size_t target_rows(TargetKind k) { return k == TargetKind::doa ? 5 : 18; }

}  // namespace

void Recording::validate() const {
    if (emg.rank() != 2) throw ShapeError("recording: emg must be [C x T]");
    if (targets.rank() != 2) throw ShapeError("recording: targets must be [R x T]");
    if (targets.dim(1) != emg.dim(1)) throw ShapeError("recording: emg and targets are not time-aligned");
    if (targets.dim(0) != target_rows(target_kind)) {
        throw ShapeError("recording: expected " + std::to_string(target_rows(target_kind)) + " target rows");
    }
    if (!(sample_rate_hz > 0)) throw ShapeError("recording: sample rate must be > 0");
    for (const auto& r : repetitions) {
        if (r.begin >= r.end) throw ShapeError("recording: empty repetition range");
        if (r.end > length()) throw ShapeError("recording: repetition range past the end");
    }
}

NormalizedRecording normalize_repetition(const Recording& rec) {
    rec.validate();
    NormalizedRecording out{rec, {}};
    Tensor& emg = out.recording.emg;
    const std::size_t C = emg.dim(0), T = emg.dim(1);
    std::vector<SampleRange> ranges = rec.repetitions;
    if (ranges.empty()) ranges.push_back({0, T});
    for (std::size_t r = 0; r < ranges.size(); ++r) {
        const auto [b, e] = ranges[r];
        const double n = static_cast<double>(e - b);
        for (std::size_t c = 0; c < C; ++c) {
            Scalar* x = emg.data() + c * T;
            double mean = 0;
            for (std::size_t t = b; t < e; ++t) mean += x[t];
            mean /= n;
            double var = 0;
            for (std::size_t t = b; t < e; ++t) var += (x[t] - mean) * (x[t] - mean);
            const double sd = std::sqrt(var / n);
            const bool degenerate = sd < kDegenerateStd;
            if (degenerate) out.degenerate.push_back({r, c});
            for (std::size_t t = b; t < e; ++t) {
                const double centered = x[t] - mean;
                x[t] = static_cast<Scalar>(degenerate ? centered : centered / sd);
            }
        }
    }
    return out;
}

Tensor dof_to_doa(const Tensor& dof, const Tensor& matrix) {
    if (matrix.rank() != 2 || dof.rank() != 2) throw ShapeError("dof_to_doa: rank-2 inputs required");
    if (matrix.dim(1) != dof.dim(0)) {
        throw ShapeError("dof_to_doa: matrix " + shape_str(matrix.shape()) + " cannot map " + shape_str(dof.shape()));
    }
    const std::size_t R = matrix.dim(0), K = matrix.dim(1), T = dof.dim(1);
    Tensor out({R, T});
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t k = 0; k < K; ++k) {
            const Scalar a = matrix[r * K + k];
            if (a == Scalar(0)) continue;
            for (std::size_t t = 0; t < T; ++t) out[r * T + t] += a * dof[k * T + t];
        }
    return out;
}

std::vector<WindowRef> augment_training_windows(const std::vector<Recording>& recs, const AugmentOptions& opts) {
    if (opts.window == 0 || opts.duplicates == 0) throw ConfigError("augment: window and duplicates must be >= 1");
    Rng rng(opts.seed);
    std::vector<WindowRef> out;
    for (std::size_t r = 0; r < recs.size(); ++r) {
        const std::size_t T = recs[r].length();
        if (T < 2 * opts.window) {
            throw ShapeError("augment: recording " + std::to_string(r) + " has " + std::to_string(T) +
                             " samples, needs at least " + std::to_string(2 * opts.window));
        }
        const std::size_t n = T / opts.window;
        for (std::size_t w = 0; w < n; ++w) {
            for (std::size_t k = 0; k < opts.duplicates; ++k) {
                const std::size_t shift = opts.max_shift ? rng.below(opts.max_shift) : 0;
                const std::size_t start = w * opts.window + shift;
                if (start + opts.window > T) continue;
                out.push_back({r, start});
            }
        }
    }
    // Fisher-Yates with our own generator so the order is toolchain-independent.
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
    return out;
}

// ---- synthetic data -----------------------------------------------------------

namespace {

double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }

}  // namespace

SynthRecording synth_dataset(const SynthOptions& o, std::uint64_t seed) {
    if (o.channels == 0 || o.n_doa == 0 || o.length == 0) throw ConfigError("synth: sizes must be >= 1");
    const std::size_t C = o.channels, R = o.n_doa, T = o.length;
    const double fs = o.sample_rate_hz;

    // Subject "anatomy": rest posture and range of every DoA, and how each
    // DoA modulates each electrode. Shared by all acquisitions of a subject.
    Rng anatomy(0x5eedULL * 1000003ULL + static_cast<std::uint64_t>(o.subject));
    std::vector<double> offset(R), amps(R * 3);
    for (std::size_t r = 0; r < R; ++r) {
        offset[r] = anatomy.uniform(20.0, 60.0);
        for (std::size_t m = 0; m < 3; ++m) amps[r * 3 + m] = anatomy.uniform(4.0, 12.0);
    }
    std::vector<double> bias(C), mix_pos(C * R), mix_vel(C * R);
    for (auto& b : bias) b = anatomy.uniform(-0.5, 0.5);
    for (auto& a : mix_pos) a = 1.2 * anatomy.normal();
    for (auto& a : mix_vel) a = 0.3 * anatomy.normal();

    Rng rng(seed);
    Rng traj = rng.fork(1);
    Rng carrier_rng = rng.fork(2);
    Rng noise_rng = rng.fork(3);

    // Targets: rest posture plus three slow sinusoids per DoA; only the
    // frequencies and phases change between acquisitions.
    struct Wave {
        double amp, freq, phase;
    };
    Tensor targets({R, T});
    std::vector<double> pos(R * T), vel(R * T);
    for (std::size_t r = 0; r < R; ++r) {
        std::vector<Wave> waves(3);
        double amp_total = 0;
        for (std::size_t m = 0; m < 3; ++m) {
            waves[m] = {amps[r * 3 + m], traj.uniform(0.1, 0.8), traj.uniform(0.0, 2 * std::numbers::pi)};
            amp_total += waves[m].amp;
        }
        for (std::size_t t = 0; t < T; ++t) {
            const double ts = static_cast<double>(t) / fs;
            double y = offset[r], dy = 0;
            for (const auto& w : waves) {
                const double a = 2 * std::numbers::pi * w.freq;
                y += w.amp * std::sin(a * ts + w.phase);
                dy += w.amp * a * std::cos(a * ts + w.phase);
            }
            targets[r * T + t] = static_cast<Scalar>(y);
            pos[r * T + t] = (y - offset[r]) / amp_total;
            vel[r * T + t] = dy / (amp_total * 2 * std::numbers::pi * 0.8);
        }
    }

    Tensor envelope({C, T});
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            double drive = bias[c];
            for (std::size_t r = 0; r < R; ++r) {
                drive += mix_pos[c * R + r] * pos[r * T + t] + mix_vel[c * R + r] * vel[r * T + t];
            }
            envelope[c * T + t] = static_cast<Scalar>(softplus(drive));
        }
    }

    // Carrier: white noise through a first-order high-pass (20 Hz) and
    // low-pass (400 Hz), rescaled to unit variance.
    const double hp = std::exp(-2 * std::numbers::pi * 20.0 / fs);
    const double lp = std::exp(-2 * std::numbers::pi * 400.0 / fs);
    Tensor emg({C, T});
    std::vector<double> carrier(T);
    for (std::size_t c = 0; c < C; ++c) {
        double prev_in = 0, hp_state = 0, lp_state = 0;
        double ss = 0;
        for (std::size_t t = 0; t < T; ++t) {
            const double w = carrier_rng.normal();
            hp_state = hp * (hp_state + w - prev_in);
            prev_in = w;
            lp_state = lp * lp_state + (1 - lp) * hp_state;
            carrier[t] = lp_state;
            ss += lp_state * lp_state;
        }
        const double norm = ss > 0 ? 1.0 / std::sqrt(ss / static_cast<double>(T)) : 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            double v = envelope[c * T + t] * carrier[t] * norm;
            if (o.noise_level > 0) v += o.noise_level * noise_rng.normal();
            emg[c * T + t] = static_cast<Scalar>(v);
        }
    }

    SynthRecording out;
    out.recording.emg = std::move(emg);
    out.recording.targets = std::move(targets);
    out.recording.target_kind = TargetKind::doa;
    out.recording.sample_rate_hz = fs;
    out.recording.subject = o.subject;
    out.recording.acquisition = o.acquisition;
    const auto block = std::max<std::size_t>(1, static_cast<std::size_t>(o.repetition_seconds * fs));
    for (std::size_t b = 0; b < T; b += block) out.recording.repetitions.push_back({b, std::min(T, b + block)});
    out.envelope = std::move(envelope);
    return out;
}

// ---- files ------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

nlohmann::json recording_header(const Recording& rec) {
    nlohmann::json reps = nlohmann::json::array();
    for (const auto& r : rec.repetitions) reps.push_back({r.begin, r.end});
    return {
        {"format", "streamtf-recording"},
        {"version", 1},
        {"subject", rec.subject},
        {"acquisition", rec.acquisition},
        {"sample_rate", rec.sample_rate_hz},
        {"dtype", "float32"},
        {"emg_shape", {rec.emg.dim(0), rec.emg.dim(1)}},
        {"target_kind", rec.target_kind == TargetKind::doa ? "doa" : "dof"},
        {"target_shape", {rec.targets.dim(0), rec.targets.dim(1)}},
        {"repetitions", reps},
    };
}

struct Header {
    nlohmann::json json;
    std::streamoff payload_offset = 0;
};

Header read_header(std::istream& in, const std::filesystem::path& path) {
    std::uint32_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof len)) throw FormatError(path.string() + ": missing header length");
    if (len > (1u << 26)) throw FormatError(path.string() + ": implausible header length");
    std::string text(len, '\0');
    if (!in.read(text.data(), len)) throw FormatError(path.string() + ": truncated header");
    Header h;
    try {
        h.json = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": header is not JSON: " + e.what());
    }
    h.payload_offset = static_cast<std::streamoff>(sizeof len + len);
    return h;
}

Tensor read_block(std::istream& in, Shape shape, const std::filesystem::path& path) {
    const std::size_t n = shape_numel(shape);
    std::vector<float> raw(n);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
        throw FormatError(path.string() + ": truncated payload");
    }
    return Tensor(std::move(shape), std::vector<Scalar>(raw.begin(), raw.end()));
}

Shape shape_of(const nlohmann::json& j, const char* key, const std::filesystem::path& path) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2) {
        throw FormatError(path.string() + ": header key '" + key + "' must be a [rows, cols] array");
    }
    return {j[key][0].get<std::size_t>(), j[key][1].get<std::size_t>()};
}

Tensor read_dof_matrix(const std::filesystem::path& dir) {
    const auto path = dir / kDofMatrixFile;
    std::ifstream in(path);
    if (!in) throw DatasetMissing("DoF-form targets need " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.size() != 5) throw FormatError(path.string() + ": matrix must have 5 rows");
    Tensor out({5, 18});
    for (std::size_t r = 0; r < 5; ++r) {
        if (!m[r].is_array() || m[r].size() != 18) throw FormatError(path.string() + ": matrix rows need 18 entries");
        for (std::size_t c = 0; c < 18; ++c) out[r * 18 + c] = m[r][c].get<Scalar>();
    }
    return out;
}

}  // namespace

std::filesystem::path recording_filename(int subject, int acquisition) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%02d_a%d%s", subject, acquisition, kRecordingExtension);
    return buf;
}

void write_recording(const std::filesystem::path& path, const Recording& rec) {
    rec.validate();
    const std::string header = recording_header(rec).dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    const auto len = static_cast<std::uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const Tensor* t : {&rec.emg, &rec.targets}) {
        std::vector<float> raw(t->values().begin(), t->values().end());
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    }
    if (!out) throw FormatError("failed writing " + path.string());
}

Recording read_recording(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    const Header h = read_header(in, path);
    const auto& j = h.json;
    try {
        if (j.value("format", "") != "streamtf-recording") throw FormatError(path.string() + ": unknown format");
        if (j.value("version", 0) != 1) throw FormatError(path.string() + ": unsupported version");
        if (j.value("dtype", "") != "float32") throw FormatError(path.string() + ": dtype must be float32");
        Recording rec;
        rec.subject = j.at("subject").get<int>();
        rec.acquisition = j.at("acquisition").get<int>();
        rec.sample_rate_hz = j.at("sample_rate").get<double>();
        const std::string kind = j.at("target_kind").get<std::string>();
        if (kind != "doa" && kind != "dof") throw FormatError(path.string() + ": target_kind must be doa or dof");
        rec.target_kind = kind == "doa" ? TargetKind::doa : TargetKind::dof;
        for (const auto& r : j.at("repetitions")) {
            rec.repetitions.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
        }
        rec.emg = read_block(in, shape_of(j, "emg_shape", path), path);
        rec.targets = read_block(in, shape_of(j, "target_shape", path), path);
        if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": payload longer than header says");
        try {
            rec.validate();
        } catch (const ShapeError& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
        return rec;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad header: " + e.what());
    }
}

std::vector<SubjectData> load_dataset(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DatasetMissing("dataset directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == kRecordingExtension) files.push_back(e.path());
    }
    if (files.empty()) throw DatasetMissing("no " + std::string(kRecordingExtension) + " files in " + dir.string());
    std::sort(files.begin(), files.end());

    std::optional<Tensor> matrix;
    std::map<int, SubjectData> subjects;
    for (const auto& f : files) {
        Recording rec = read_recording(f);
        if (rec.target_kind == TargetKind::dof) {
            if (!matrix) matrix = read_dof_matrix(dir);
            rec.targets = dof_to_doa(rec.targets, *matrix);
            rec.target_kind = TargetKind::doa;
        }
        auto& s = subjects[rec.subject];
        s.subject = rec.subject;
        (rec.is_training() ? s.train : s.test).push_back(std::move(rec));
    }
    std::vector<SubjectData> out;
    for (auto& [_, s] : subjects) {
        auto by_acq = [](const Recording& a, const Recording& b) { return a.acquisition < b.acquisition; };
        std::sort(s.train.begin(), s.train.end(), by_acq);
        std::sort(s.test.begin(), s.test.end(), by_acq);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<CheckIssue> check_dataset(const std::filesystem::path& dir) {
    std::vector<CheckIssue> issues;
    if (!std::filesystem::is_directory(dir)) {
        issues.push_back({dir, "dataset directory not found"});
        return issues;
    }
    bool any = false, needs_matrix = false;
    std::map<int, std::vector<int>> acquisitions;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == kRecordingExtension) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        any = true;
        try {
            Recording rec = read_recording(f);
            if (rec.acquisition < 1 || rec.acquisition > 3) issues.push_back({f, "acquisition id must be 1, 2 or 3"});
            if (rec.emg.dim(0) != 16) issues.push_back({f, "expected 16 EMG channels"});
            if (!rec.emg.all_finite() || !rec.targets.all_finite()) issues.push_back({f, "non-finite values in payload"});
            if (rec.repetitions.empty()) issues.push_back({f, "no repetition ranges"});
            if (rec.target_kind == TargetKind::dof) needs_matrix = true;
            acquisitions[rec.subject].push_back(rec.acquisition);
        } catch (const std::exception& e) {
            issues.push_back({f, e.what()});
        }
    }
    if (!any) issues.push_back({dir, "no " + std::string(kRecordingExtension) + " files"});
    if (needs_matrix) {
        try {
            read_dof_matrix(dir);
        } catch (const std::exception& e) {
            issues.push_back({dir / kDofMatrixFile, e.what()});
        }
    }
    for (const auto& [subject, acqs] : acquisitions) {
        const bool has_train = std::count(acqs.begin(), acqs.end(), 1) + std::count(acqs.begin(), acqs.end(), 2) > 0;
        const bool has_test = std::count(acqs.begin(), acqs.end(), 3) > 0;
        if (!has_train || !has_test) {
            issues.push_back({dir, "subject " + std::to_string(subject) + " lacks a training or test acquisition"});
        }
    }
    return issues;
}

STREAMTF_NS_END
