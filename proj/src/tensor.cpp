#include "partfuse/tensor.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include "partfuse/error.hpp"
#include "io_util.hpp"

namespace partfuse {

namespace {

constexpr std::size_t kHeaderBytes = 8;

std::size_t dtype_width(DType dtype) {
  switch (dtype) {
    case DType::f32:
      return 4;
    case DType::u16:
      return 2;
    case DType::u8:
      return 1;
  }
  return 0;
}

Tensor::Storage make_storage(DType dtype, std::size_t n) {
  switch (dtype) {
    case DType::f32:
      return std::vector<float>(n, 0.0f);
    case DType::u16:
      return std::vector<std::uint16_t>(n, 0);
    case DType::u8:
      return std::vector<std::uint8_t>(n, 0);
  }
  throw ValidationError("bad-dtype", "unknown dtype");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::size_t element_count(std::span<const std::uint32_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / 8 / d) {
      throw ValidationError("dim-overflow", "tensor dimension product overflows");
    }
    n *= d;
  }
  return n;
}

Tensor::Tensor(DType dtype, std::vector<std::uint32_t> shape)
    : dtype_(dtype), shape_(std::move(shape)), storage_(make_storage(dtype, element_count(shape_))) {
  if (shape_.size() > kMaxTensorRank) throw ValidationError("bad-rank", "tensor rank above 8");
}

Tensor Tensor::from_floats(std::vector<std::uint32_t> shape, std::vector<float> values) {
  Tensor t(DType::f32, std::move(shape));
  if (values.size() != t.size()) throw ValidationError("shape-mismatch", "value count does not match shape");
  t.storage_ = std::move(values);
  return t;
}

std::size_t Tensor::size() const noexcept {
  return std::visit([](const auto& v) { return v.size(); }, storage_);
}

std::vector<double> Tensor::to_doubles() const {
  return std::visit(
      [](const auto& v) {
        std::vector<double> out(v.begin(), v.end());
        return out;
      },
      storage_);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  std::vector<std::uint8_t> out{'P', 'P', 'T', '1', static_cast<std::uint8_t>(tensor.dtype()),
                                static_cast<std::uint8_t>(tensor.rank()), 0, 0};
  for (auto d : tensor.shape()) put_u32(out, d);
  const std::size_t width = dtype_width(tensor.dtype());
  out.reserve(out.size() + tensor.size() * width);
  switch (tensor.dtype()) {
    case DType::f32:
      for (float f : tensor.values<float>()) put_u32(out, std::bit_cast<std::uint32_t>(f));
      break;
    case DType::u16:
      for (auto v : tensor.values<std::uint16_t>()) {
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
      }
      break;
    case DType::u8:
      for (auto v : tensor.values<std::uint8_t>()) out.push_back(v);
      break;
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "PPT1", 4) != 0) {
    throw ValidationError("bad-magic", "not a PPT1 tensor");
  }
  const std::uint8_t code = bytes[4];
  if (code < 1 || code > 3) throw ValidationError("bad-dtype", "dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[5];
  if (rank > kMaxTensorRank) throw ValidationError("bad-rank", "rank " + std::to_string(rank));
  if (bytes[6] != 0 || bytes[7] != 0) throw ValidationError("bad-header", "reserved header bytes not zero");
  if (bytes.size() < kHeaderBytes + 4 * rank) throw ValidationError("truncated", "tensor header truncated");

  std::vector<std::uint32_t> shape(rank);
  for (std::size_t i = 0; i < rank; ++i) shape[i] = get_u32(bytes.data() + kHeaderBytes + 4 * i);
  const std::size_t n = element_count(shape);
  const std::size_t width = dtype_width(dtype);
  const std::size_t offset = kHeaderBytes + 4 * rank;
  if (n > (bytes.size() - offset) / width || bytes.size() - offset != n * width) {
    throw ValidationError("truncated", "tensor payload size does not match shape");
  }

  Tensor t(dtype, std::move(shape));
  const std::uint8_t* p = bytes.data() + offset;
  switch (dtype) {
    case DType::f32: {
      auto v = t.values<float>();
      for (std::size_t i = 0; i < n; ++i) v[i] = std::bit_cast<float>(get_u32(p + 4 * i));
      break;
    }
    case DType::u16: {
      auto v = t.values<std::uint16_t>();
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
      }
      break;
    }
    case DType::u8: {
      auto v = t.values<std::uint8_t>();
      std::memcpy(v.data(), p, n);
      break;
    }
  }
  return t;
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return decode_tensor(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(e.code(), path.string() + ": " + e.what());
  }
}

void write_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  detail::write_file(path, encode_tensor(tensor));
}

}  // namespace partfuse
