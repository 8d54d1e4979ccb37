#include "equips/npy.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read and written in native little-endian order");

namespace equips {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreamble = 10; // magic + version + uint16 header length
constexpr std::size_t kAlign = 64;

const char *descr(DType dtype) {
  switch (dtype) {
  case DType::uint8:
    return "|u1";
  case DType::float32:
    return "<f4";
  case DType::float64:
    return "<f8";
  }
  return "";
}

std::vector<char> read_all(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path, "cannot open for reading");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad())
    throw IoError(path, "read failed");
  return bytes;
}

using Kind = NpyFormatError::Kind;

struct ParsedHeader {
  VolumeHeader header;
  std::size_t data_offset = 0;
};

ParsedHeader parse_header(const std::string &path, const std::vector<char> &bytes,
                          Spacing spacing) {
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw NpyFormatError(path, Kind::magic, 0, "not an NPY file (bad magic string)");
  if (bytes.size() < kPreamble)
    throw NpyFormatError(path, Kind::truncated, bytes.size(), "file ends inside the NPY preamble");
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0)
    throw NpyFormatError(path, Kind::version, 6,
                         "unsupported NPY version " + std::to_string(major) + "." +
                             std::to_string(minor) + " (only 1.0)");
  const std::size_t dict_len = static_cast<unsigned char>(bytes[8]) |
                               (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  const std::size_t data_offset = kPreamble + dict_len;
  if (bytes.size() < data_offset)
    throw NpyFormatError(path, Kind::truncated, bytes.size(),
                         "file ends inside the header dictionary (needs " +
                             std::to_string(data_offset) + " bytes)");
  const std::string dict(bytes.data() + kPreamble, dict_len);

  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  if (!std::regex_search(dict, m, descr_re))
    throw NpyFormatError(path, Kind::header, kPreamble, "header has no 'descr' entry");
  const std::string d = m[1];
  DType dtype;
  if (d == "|u1" || d == "<u1" || d == "u1" || d == "|b1")
    dtype = DType::uint8;
  else if (d == "<f4")
    dtype = DType::float32;
  else if (d == "<f8")
    dtype = DType::float64;
  else
    throw NpyFormatError(path, Kind::dtype, kPreamble + m.position(1),
                         "unsupported dtype '" + d + "' (expected |u1, <f4 or <f8)");

  if (!std::regex_search(dict, m, order_re))
    throw NpyFormatError(path, Kind::header, kPreamble, "header has no 'fortran_order' entry");
  if (m[1] == "True")
    throw NpyFormatError(path, Kind::order, kPreamble + m.position(1),
                         "Fortran-ordered arrays are not supported");

  if (!std::regex_search(dict, m, shape_re))
    throw NpyFormatError(path, Kind::header, kPreamble, "header has no 'shape' entry");
  const std::size_t shape_offset = kPreamble + m.position(1);
  std::vector<std::size_t> dims;
  const std::string shape_text = m[1];
  static const std::regex dim_re(R"(\d+)");
  for (auto it = std::sregex_iterator(shape_text.begin(), shape_text.end(), dim_re);
       it != std::sregex_iterator(); ++it)
    dims.push_back(std::stoull(it->str()));
  if (dims.size() != 3)
    throw NpyFormatError(path, Kind::rank, shape_offset,
                         "array has rank " + std::to_string(dims.size()) + ", expected 3");
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end())
    throw NpyFormatError(path, Kind::rank, shape_offset, "array has a zero-length axis");

  ParsedHeader out;
  out.header.dtype = dtype;
  out.header.shape = GridShape(dims[2], dims[1], dims[0], spacing);
  out.header.header_bytes = data_offset;
  out.header.payload_bytes = out.header.shape.voxel_count() * dtype_size(dtype);
  out.data_offset = data_offset;
  if (bytes.size() - data_offset < out.header.payload_bytes)
    throw NpyFormatError(path, Kind::truncated, bytes.size(),
                         "payload truncated: expected " + std::to_string(out.header.payload_bytes) +
                             " bytes from offset " + std::to_string(data_offset) + ", found " +
                             std::to_string(bytes.size() - data_offset));
  return out;
}

template <class T> std::vector<T> copy_payload(const std::vector<char> &bytes, std::size_t offset,
                                               std::size_t count) {
  std::vector<T> out(count);
  std::memcpy(out.data(), bytes.data() + offset, count * sizeof(T));
  return out;
}

void write_bytes(const std::string &path, const std::vector<char> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path, "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError(path, "write failed");
}

} // namespace

const char *dtype_name(DType dtype) {
  switch (dtype) {
  case DType::uint8:
    return "uint8";
  case DType::float32:
    return "float32";
  case DType::float64:
    return "float64";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
  case DType::uint8:
    return 1;
  case DType::float32:
    return 4;
  case DType::float64:
    return 8;
  }
  return 0;
}

VolumeHeader read_npy_header(const std::string &path) {
  return parse_header(path, read_all(path), {}).header;
}

NpyVolume read_npy(const std::string &path, Spacing spacing) {
  const std::vector<char> bytes = read_all(path);
  const ParsedHeader parsed = parse_header(path, bytes, spacing);
  const std::size_t n = parsed.header.shape.voxel_count();
  NpyVolume vol{parsed.header, {}};
  switch (parsed.header.dtype) {
  case DType::uint8:
    vol.data = copy_payload<std::uint8_t>(bytes, parsed.data_offset, n);
    break;
  case DType::float32:
    vol.data = copy_payload<float>(bytes, parsed.data_offset, n);
    break;
  case DType::float64:
    vol.data = copy_payload<double>(bytes, parsed.data_offset, n);
    break;
  }
  return vol;
}

std::vector<char> encode_npy(const NpyVolume &volume) {
  const GridShape &s = volume.header.shape;
  std::string dict = std::string("{'descr': '") + descr(volume.header.dtype) +
                     "', 'fortran_order': False, 'shape': (" + std::to_string(s.nz()) + ", " +
                     std::to_string(s.ny()) + ", " + std::to_string(s.nx()) + "), }";
  // Pad with spaces so the payload starts on a 64-byte boundary; the
  // dictionary ends with a newline.
  const std::size_t unpadded = kPreamble + dict.size() + 1;
  dict.append((kAlign - unpadded % kAlign) % kAlign, ' ');
  dict.push_back('\n');

  std::vector<char> out(kMagic, kMagic + kMagicLen);
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<char>(dict.size() & 0xff));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
  out.insert(out.end(), dict.begin(), dict.end());
  std::visit(
      [&](const auto &values) {
        if (values.size() != s.voxel_count())
          throw ValidationError("NPY payload size does not match its shape");
        const char *p = reinterpret_cast<const char *>(values.data());
        out.insert(out.end(), p, p + values.size() * sizeof(values[0]));
      },
      volume.data);
  return out;
}

void write_npy(const std::string &path, const NpyVolume &volume) {
  write_bytes(path, encode_npy(volume));
}

void write_npy(const std::string &path, const ScalarGrid &grid, DType dtype) {
  NpyVolume vol;
  vol.header.dtype = dtype;
  vol.header.shape = grid.shape();
  auto values = grid.values();
  switch (dtype) {
  case DType::float64:
    vol.data = std::vector<double>(values.begin(), values.end());
    break;
  case DType::float32: {
    std::vector<float> f(values.size());
    std::transform(values.begin(), values.end(), f.begin(),
                   [](double v) { return static_cast<float>(v); });
    vol.data = std::move(f);
    break;
  }
  case DType::uint8:
    throw ValidationError("scalar grids are written as float32 or float64");
  }
  write_npy(path, vol);
}

void write_npy(const std::string &path, const ProbabilityMap &pmap, DType dtype) {
  write_npy(path, pmap.as_scalar_grid(), dtype);
}

void write_npy(const std::string &path, const PhaseGrid &seg) {
  NpyVolume vol;
  vol.header.dtype = DType::uint8;
  vol.header.shape = seg.shape();
  vol.data = std::vector<std::uint8_t>(seg.inside().begin(), seg.inside().end());
  write_npy(path, vol);
}

ScalarGrid NpyVolume::to_scalar_grid() const {
  return std::visit(
      [&](const auto &values) {
        return ScalarGrid(header.shape, std::vector<double>(values.begin(), values.end()));
      },
      data);
}

PhaseGrid NpyVolume::to_phase_grid() const {
  if (header.dtype != DType::uint8)
    throw ValidationError(std::string("segmentation must be stored as uint8, found ") +
                          dtype_name(header.dtype));
  return PhaseGrid(header.shape, std::get<std::vector<std::uint8_t>>(data));
}

ProbabilityMap NpyVolume::to_probability_map(int class_label) const {
  return std::visit(
      [&](const auto &values) {
        return ProbabilityMap(header.shape, std::vector<double>(values.begin(), values.end()),
                              class_label);
      },
      data);
}

const std::vector<std::uint8_t> &NpyVolume::labels() const {
  if (header.dtype != DType::uint8)
    throw ValidationError(std::string("label volume must be stored as uint8, found ") +
                          dtype_name(header.dtype));
  return std::get<std::vector<std::uint8_t>>(data);
}

} // namespace equips
