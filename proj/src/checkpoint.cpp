#include "rrm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace rrm {

namespace {

constexpr char kMagic[4] = {'R', 'R', 'M', 'W'};

template <typename U>
void put_le(std::ostream& out, U value)
{
    unsigned char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i)
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xffu);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in)
{
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U)))
        throw CheckpointError("truncated weight record");
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        value |= static_cast<U>(bytes[i]) << (8 * i);
    return value;
}

} // namespace

void write_weights(std::ostream& out, const MlpSpec& spec, const ParamVector& params)
{
    spec.validate();
    if (params.size() != spec.param_count())
        throw CheckpointError("parameter count does not match spec " + describe(spec));
    out.write(kMagic, sizeof(kMagic));
    put_le<std::uint8_t>(out, kCheckpointVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(spec.activation));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(spec.output_head));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(spec.layer_sizes.size()));
    for (int s : spec.layer_sizes)
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s));
    put_le<std::uint64_t>(out, params.size());
    for (double p : params)
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p));
    if (!out)
        throw CheckpointError("failed to write weight record");
}

NetworkWeights read_weights(std::istream& in)
{
    char magic[4];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw CheckpointError("not a weight record (bad magic)");
    const auto version = get_le<std::uint8_t>(in);
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported weight record version " + std::to_string(version));
    const auto activation = get_le<std::uint8_t>(in);
    const auto head = get_le<std::uint8_t>(in);
    if (activation > 1 || head > 1)
        throw CheckpointError("unknown activation or head id");

    NetworkWeights w;
    w.spec.activation = static_cast<Activation>(activation);
    w.spec.output_head = static_cast<OutputHead>(head);
    const auto layers = get_le<std::uint32_t>(in);
    if (layers < 2 || layers > 1024)
        throw CheckpointError("implausible layer count");
    for (std::uint32_t i = 0; i < layers; ++i)
        w.spec.layer_sizes.push_back(static_cast<int>(get_le<std::uint32_t>(in)));
    try {
        w.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(e.what());
    }
    const auto count = get_le<std::uint64_t>(in);
    if (count != w.spec.param_count())
        throw CheckpointError("parameter count does not match the stored layer sizes");
    w.params.resize(count);
    for (auto& p : w.params)
        p = std::bit_cast<double>(get_le<std::uint64_t>(in));
    return w;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NetworkWeights>& networks)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CheckpointError("cannot open " + tmp.string() + " for writing");
        for (const auto& n : networks)
            write_weights(out, n.spec, n.params);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<NetworkWeights> load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<NetworkWeights> out;
    while (in.peek() != std::char_traits<char>::eof())
        out.push_back(read_weights(in));
    if (out.empty())
        throw CheckpointError("checkpoint " + path.string() + " is empty");
    return out;
}

} // namespace rrm
