#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <new>
#include <numbers>
#include <vector>

namespace phnls {

using complex = std::complex<double>;

/// 64-byte aligned allocator so FFTW can use SIMD kernels on field storage.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), alignment));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using ComplexBuffer = std::vector<complex, AlignedAllocator<complex>>;

/// Neumaier-compensated accumulator.
class KahanSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value))
      compensation_ += (sum_ - t) + value;
    else
      compensation_ += (value - t) + sum_;
    sum_ = t;
  }
  KahanSum& operator+=(double value) noexcept {
    add(value);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// |z|^alpha from |z|^2 with fast paths for integer and half-integer alpha.
inline double abs_pow_from_sq(double abs2, double alpha) {
  const double twice = 2.0 * alpha;
  if (twice == std::floor(twice) && alpha >= 0.0 && alpha <= 16.0) {
    const int whole = static_cast<int>(std::floor(alpha / 2.0));
    double r = 1.0;
    for (int i = 0; i < whole; ++i) r *= abs2;
    const double rest = alpha - 2.0 * whole;  // 0, 0.5, 1 or 1.5
    if (rest == 0.5) r *= std::sqrt(std::sqrt(abs2));
    else if (rest == 1.0) r *= std::sqrt(abs2);
    else if (rest == 1.5) r *= std::sqrt(abs2) * std::sqrt(std::sqrt(abs2));
    return r;
  }
  return std::pow(abs2, 0.5 * alpha);
}

inline constexpr double pi = std::numbers::pi;

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int d) {
  return std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

}  // namespace phnls
