#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "streamtf/config.hpp"
#include "streamtf/rng.hpp"
#include "streamtf/tensor.hpp"

STREAMTF_NS_BEGIN

// Half-open sample range [begin, end).
struct SampleRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    bool operator==(const SampleRange&) const = default;
};

enum class TargetKind { doa, dof };

struct Recording {
    Tensor emg;      // [C x T]
    Tensor targets;  // [5 x T] DoA in degrees, or [18 x T] DoF
    TargetKind target_kind = TargetKind::doa;
    double sample_rate_hz = 2000.0;
    int subject = 0;
    int acquisition = 1;  // 1 and 2 train, 3 test
    std::vector<SampleRange> repetitions;

    std::size_t length() const { return emg.empty() ? 0 : emg.cols(); }
    bool is_training() const { return acquisition == 1 || acquisition == 2; }
    void validate() const;
};

struct DegenerateChannel {
    std::size_t repetition;
    std::size_t channel;
    bool operator==(const DegenerateChannel&) const = default;
};

struct NormalizedRecording {
    Recording recording;
    std::vector<DegenerateChannel> degenerate;  // std < 1e-8, centered only
};

// Per repetition range and per channel: subtract the mean, divide by the
// population std. Samples outside every range are left as they are; a
// recording without ranges is treated as one repetition.
NormalizedRecording normalize_repetition(const Recording& rec);

// targets = A * dof with A [5 x 18].
Tensor dof_to_doa(const Tensor& dof, const Tensor& matrix);

struct WindowRef {
    std::size_t recording = 0;  // index into the recordings list
    std::size_t start = 0;      // first sample
    bool operator==(const WindowRef&) const = default;
};

struct AugmentOptions {
    std::size_t window = 2000;
    std::size_t duplicates = 64;
    std::size_t max_shift = 2000;  // shifts drawn from [0, max_shift)
    std::uint64_t seed = 0;
};

// Consecutive windows, each duplicated and randomly shifted; shifted windows
// running past the recording end are dropped; the result is shuffled.
std::vector<WindowRef> augment_training_windows(const std::vector<Recording>& recs, const AugmentOptions& opts);

struct SynthOptions {
    std::size_t channels = 16;
    std::size_t n_doa = 5;
    std::size_t length = 60000;
    double sample_rate_hz = 2000.0;
    double noise_level = 0.1;        // additive noise relative to unit envelope
    double repetition_seconds = 5.0;  // size of the normalization blocks
    int subject = 1;
    int acquisition = 1;
};

struct SynthRecording {
    Recording recording;
    Tensor envelope;  // [C x T] amplitude envelope of every channel
};

// Synthetic sEMG-like recording. Targets are sums of slow sinusoids in
// degrees. Each channel is band-limited noise whose envelope is a fixed
// random mixture of the targets and their derivatives. The mixing matrices
// depend on the subject only, so all acquisitions of a subject share them.
SynthRecording synth_dataset(const SynthOptions& opts, std::uint64_t seed);

// ---- on-disk dataset --------------------------------------------------------
//
// One file per recording, `s<subject>_a<acquisition>.strec`:
//   u32 (LE) header length, then a JSON header, then the float32 LE payload
//   (emg row-major [C x T], then targets row-major [R x T]).
// Header keys: format ("streamtf-recording"), version (1), subject,
// acquisition, sample_rate, dtype ("float32"), emg_shape [C, T],
// target_kind ("doa" | "dof"), target_shape [R, T], repetitions [[b, e], ...].
// DoF-form datasets need `dof_to_doa.json` ({"matrix": [[...18...] x 5]})
// in the dataset directory.

inline constexpr const char* kRecordingExtension = ".strec";
inline constexpr const char* kDofMatrixFile = "dof_to_doa.json";

void write_recording(const std::filesystem::path& path, const Recording& rec);
Recording read_recording(const std::filesystem::path& path);
std::filesystem::path recording_filename(int subject, int acquisition);

struct SubjectData {
    int subject = 0;
    std::vector<Recording> train;
    std::vector<Recording> test;
};

class DatasetMissing : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// Loads every recording under dir, converts DoF targets with the matrix
// file when needed, and groups by subject.
std::vector<SubjectData> load_dataset(const std::filesystem::path& dir);

struct CheckIssue {
    std::filesystem::path file;
    std::string message;
};

// Validates header/payload invariants of every file without failing early.
std::vector<CheckIssue> check_dataset(const std::filesystem::path& dir);

STREAMTF_NS_END
