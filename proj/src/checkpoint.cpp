#include "streamtf/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

STREAMTF_NS_BEGIN

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'T', 'F', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError(path.string() + ": truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
    const std::string cfg = canonical_json(model.config());
    // Write to a sibling file first so an interrupted save never clobbers
    // the last good checkpoint.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
        out.write(kMagic.data(), kMagic.size());
        put<std::uint32_t>(out, kCheckpointVersion);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.size()));
        out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
        put<std::uint64_t>(out, model.parameter_count());
        for (const auto& p : model.parameters()) {
            for (Scalar v : p.value.values()) put<float>(out, static_cast<float>(v));
        }
        if (!out) throw FormatError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint " + path.string());
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError(path.string() + ": not a checkpoint");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kCheckpointVersion) {
        throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
    }
    const auto len = get<std::uint32_t>(in, path);
    std::string cfg(len, '\0');
    if (!in.read(cfg.data(), len)) throw FormatError(path.string() + ": truncated config");
    ModelConfig config;
    try {
        config = model_config_from_json(nlohmann::json::parse(cfg));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": bad config JSON: " + e.what());
    }
    Model model(config, 0);
    const auto count = get<std::uint64_t>(in, path);
    if (count != model.parameter_count()) {
        throw FormatError(path.string() + ": weight count " + std::to_string(count) + " does not match config (" +
                          std::to_string(model.parameter_count()) + ")");
    }
    for (auto& p : model.parameters()) {
        for (auto& v : p.value.values()) v = static_cast<Scalar>(get<float>(in, path));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
    return model;
}

Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    Model m = load_checkpoint(path);
    if (canonical_json(m.config()) != canonical_json(expected)) {
        throw CheckpointMismatch(path.string() + ": checkpoint config " + canonical_json(m.config()) +
                                 " differs from requested " + canonical_json(expected));
    }
    return m;
}

STREAMTF_NS_END
