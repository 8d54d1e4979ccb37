#pragma once

#include "equips/error.hpp"
#include "equips/grid.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace equips {

enum class DType { uint8, float32, float64 };

const char *dtype_name(DType dtype);
std::size_t dtype_size(DType dtype);

/// Parsed NPY v1.0 header. A grid of nx * ny * nz voxels is stored in C
/// order with shape (nz, ny, nx), so the payload is x fastest, matching the
/// library's linear voxel order. Payloads are little-endian.
struct VolumeHeader {
  DType dtype = DType::float64;
  GridShape shape{1, 1, 1};
  std::size_t header_bytes = 0; ///< magic + version + length field + dict
  std::size_t payload_bytes = 0;
};

/// Raised for malformed NPY containers. `offset` is the byte position where
/// the problem was detected.
class NpyFormatError : public IoError {
public:
  enum class Kind { magic, version, header, dtype, order, rank, truncated };

  NpyFormatError(std::string path, Kind kind, std::size_t offset, const std::string &what)
      : IoError(std::move(path), what + " (at byte " + std::to_string(offset) + ")"),
        kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  Kind kind_;
  std::size_t offset_;
};

/// Volume exactly as stored, without conversion.
struct NpyVolume {
  VolumeHeader header;
  std::variant<std::vector<std::uint8_t>, std::vector<float>, std::vector<double>> data;

  ScalarGrid to_scalar_grid() const;
  /// uint8 payload with values in {0, 1} only.
  PhaseGrid to_phase_grid() const;
  ProbabilityMap to_probability_map(int class_label = 1) const;
  /// uint8 payload, any values (label volumes).
  const std::vector<std::uint8_t> &labels() const;
};

/// Reads a 3-D NPY v1.0 file. `spacing` is attached to the grid shape since
/// the container carries none.
NpyVolume read_npy(const std::string &path, Spacing spacing = {});
VolumeHeader read_npy_header(const std::string &path);

void write_npy(const std::string &path, const NpyVolume &volume);
void write_npy(const std::string &path, const ScalarGrid &grid, DType dtype = DType::float64);
void write_npy(const std::string &path, const ProbabilityMap &pmap, DType dtype = DType::float64);
void write_npy(const std::string &path, const PhaseGrid &seg);

/// Serialized bytes of a complete NPY file; write_npy writes exactly these.
std::vector<char> encode_npy(const NpyVolume &volume);

} // namespace equips
