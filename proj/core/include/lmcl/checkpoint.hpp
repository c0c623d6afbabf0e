#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "lmcl/params.hpp"

namespace lmcl {

// Binary container of named tensors, all integers little-endian:
//   magic "LMCLCKPT" (8 bytes) | version u32 | count u64 |
//   per tensor: name_len u32 | name (UTF-8) | rank u32 | extents u64[rank] | f64[prod(extents)]

inline constexpr char kCheckpointMagic[8] = {'L', 'M', 'C', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(std::ostream& out, const ParamStore& params);
ParamStore read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path);

/// FNV-1a 64 over the file bytes, hex encoded.
std::string file_hash(const std::filesystem::path& path);

}  // namespace lmcl
