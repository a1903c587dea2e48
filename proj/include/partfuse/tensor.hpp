#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace partfuse {

enum class DType : std::uint8_t { f32 = 1, u16 = 2, u8 = 3 };

inline constexpr std::size_t kMaxTensorRank = 8;

/// Dense row-major tensor (last dimension fastest) in one of the three PPT1
/// element types. Rank 0 holds one scalar.
class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::uint16_t>, std::vector<std::uint8_t>>;

  Tensor() : Tensor(DType::f32, {}) {}
  Tensor(DType dtype, std::vector<std::uint32_t> shape);

  static Tensor from_floats(std::vector<std::uint32_t> shape, std::vector<float> values);

  DType dtype() const noexcept { return dtype_; }
  const std::vector<std::uint32_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept;

  template <typename T>
  std::span<T> values() {
    return std::get<std::vector<T>>(storage_);
  }
  template <typename T>
  std::span<const T> values() const {
    return std::get<std::vector<T>>(storage_);
  }

  /// Elements of any dtype widened to double.
  std::vector<double> to_doubles() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  DType dtype_;
  std::vector<std::uint32_t> shape_;
  Storage storage_;
};

/// Number of elements for a shape; throws ValidationError("dim-overflow")
/// when the product does not fit in memory addressing.
std::size_t element_count(std::span<const std::uint32_t> shape);

/// PPT1 container. Errors: IoError (missing/unwritable), ValidationError with
/// codes bad-magic, bad-dtype, bad-rank, truncated, dim-overflow.
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const Tensor& tensor, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

}  // namespace partfuse
