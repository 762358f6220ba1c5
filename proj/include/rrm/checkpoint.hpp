#pragma once

// Weight file: one or more records, each
//   "RRMW" | version:u8 | activation:u8 | head:u8 | layers:u32 | sizes:u32[layers]
//   | count:u64 | params:f64[count]
// with every integer and double stored little-endian.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "rrm/approximator.hpp"

namespace rrm {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kCheckpointVersion = 1;

struct NetworkWeights {
    MlpSpec spec;
    ParamVector params;
};

void write_weights(std::ostream& out, const MlpSpec& spec, const ParamVector& params);
NetworkWeights read_weights(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NetworkWeights>& networks);
std::vector<NetworkWeights> load_checkpoint(const std::filesystem::path& path);

} // namespace rrm
