#pragma once
// Helpers shared by the generated test cases.

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <type_traits>

#if defined(__GNUC__)
// Vector register types carry alignment attributes that type traits drop.
#pragma GCC diagnostic ignored "-Wignored-attributes"
#endif

namespace tsl_test {

/// Aligned buffer split into an input half and a result half, each holding
/// `count` elements.
template<typename T>
class test_memory {
 public:
  explicit test_memory(std::size_t count, std::size_t alignment = 64)
      : count_(count), alignment_(alignment) {
    std::size_t bytes = 2 * count * sizeof(T);
    bytes = (bytes + alignment - 1) / alignment * alignment;
    data_ = static_cast<T*>(::operator new(bytes, std::align_val_t(alignment)));
    std::memset(static_cast<void*>(data_), 0, bytes);
  }
  test_memory(test_memory const&) = delete;
  test_memory& operator=(test_memory const&) = delete;
  ~test_memory() { ::operator delete(data_, std::align_val_t(alignment_)); }

  T* data() { return data_; }
  T* input() { return data_; }
  T* result() { return data_ + count_; }
  std::size_t size() const { return count_; }

  /// input[i] = start + i * step, wrapping for integral types.
  void fill_sequence(T start, T step = T(1)) {
    for (std::size_t i = 0; i < count_; ++i) {
      data_[i] = wrap_value(start, step, i);
    }
  }

  /// Deterministic pseudo-random fill (xorshift).
  void fill_random(std::uint64_t seed) {
    std::uint64_t x = seed ? seed : 0x9e3779b97f4a7c15ull;
    for (std::size_t i = 0; i < count_; ++i) {
      x ^= x << 13;
      x ^= x >> 7;
      x ^= x << 17;
      if constexpr (std::is_floating_point_v<T>) {
        data_[i] = static_cast<T>(static_cast<double>(x % 1000) / 8.0);
      } else {
        data_[i] = static_cast<T>(x);
      }
    }
  }

 private:
  static T wrap_value(T start, T step, std::size_t i) {
    if constexpr (std::is_floating_point_v<T>) {
      return static_cast<T>(start + step * static_cast<T>(i));
    } else {
      using U = std::make_unsigned_t<T>;
      return static_cast<T>(static_cast<U>(static_cast<U>(start) +
                                           static_cast<U>(static_cast<U>(step) * static_cast<U>(i))));
    }
  }

  T* data_;
  std::size_t count_;
  std::size_t alignment_;
};

/// Two's-complement wrap-around addition for integral types, plain
/// addition for floating point.
template<typename T>
T wrap_add(T a, T b) {
  if constexpr (std::is_floating_point_v<T>) {
    return a + b;
  } else {
    using U = std::make_unsigned_t<T>;
    return static_cast<T>(static_cast<U>(static_cast<U>(a) + static_cast<U>(b)));
  }
}

/// Lanes of a register, lowest lane first.
template<typename SimdT>
std::array<typename SimdT::base_type, SimdT::vector_element_count()> lanes_of(
    typename SimdT::register_type const& reg) {
  std::array<typename SimdT::base_type, SimdT::vector_element_count()> lanes;
  static_assert(sizeof(lanes) == sizeof(reg), "register size does not match lane count");
  std::memcpy(&lanes, &reg, sizeof(reg));
  return lanes;
}

/// Whether lane `lane` of `mask` is set. Handles boolean masks, compact
/// integral bit masks, full-register masks and per-lane bool arrays.
template<typename SimdT>
bool mask_lane(typename SimdT::mask_type const& mask, std::size_t lane) {
  using mask_type = typename SimdT::mask_type;
  constexpr std::size_t lanes = SimdT::vector_element_count();
  if constexpr (std::is_same_v<mask_type, bool>) {
    return mask;
  } else if constexpr (std::is_integral_v<mask_type>) {
    return ((static_cast<unsigned long long>(mask) >> lane) & 1ull) != 0;
  } else {
    constexpr std::size_t width = sizeof(mask_type) / lanes;
    static_assert(width * lanes == sizeof(mask_type), "mask size is not a lane multiple");
    unsigned char bytes[sizeof(mask_type)];
    std::memcpy(bytes, &mask, sizeof(mask_type));
    for (std::size_t b = 0; b < width; ++b) {
      if (bytes[lane * width + b] != 0) {
        return true;
      }
    }
    return false;
  }
}

template<typename T>
bool imask_bit(T const& value, std::size_t bit) {
  if constexpr (std::is_integral_v<T>) {
    return bit < std::numeric_limits<T>::digits && ((value >> bit) & T(1)) != 0;
  } else {
    return bit < value.size() && value[bit];
  }
}

template<typename T>
std::size_t imask_popcount(T const& value) {
  if constexpr (std::is_integral_v<T>) {
    std::size_t count = 0;
    for (std::size_t bit = 0; bit < std::numeric_limits<T>::digits; ++bit) {
      count += imask_bit(value, bit) ? 1 : 0;
    }
    return count;
  } else {
    return value.count();
  }
}

/// Equality for integral types, relative tolerance for floating point.
template<typename T>
bool same_value(T expected, T actual) {
  if constexpr (std::is_floating_point_v<T>) {
    T const tolerance = std::is_same_v<T, float> ? T(1e-6) : T(1e-12);
    T const scale = std::fabs(expected) > T(1) ? std::fabs(expected) : T(1);
    return std::fabs(expected - actual) <= tolerance * scale;
  } else {
    return expected == actual;
  }
}

/// All bits of a lane set (integral types).
template<typename T>
T all_ones() {
  return static_cast<T>(~std::make_unsigned_t<T>(0));
}

}  // namespace tsl_test
