#pragma once

// Thin FFTW wrapper: batched, in-place, unitary d-dimensional transforms with
// a process-wide plan cache guarded by a mutex (FFTW planning is not
// thread-safe; execution of an existing plan is).

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/numeric.hpp"

namespace phnls::fft {

enum class Direction : int { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  /// Plan for `batch` contiguous d-dimensional cubes of side n, in place.
  fftw_plan get(int d, int n, int batch, Direction dir) {
    const auto key = std::make_tuple(d, n, batch, static_cast<int>(dir));
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<int> dims(static_cast<std::size_t>(d), n);
    int cube = 1;
    for (int i = 0; i < d; ++i) cube *= n;
    ComplexBuffer scratch(static_cast<std::size_t>(cube) * batch);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_many_dft(d, dims.data(), batch, data, nullptr, 1, cube, data, nullptr, 1, cube,
                                        static_cast<int>(dir), FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("fftw: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

/// In-place unitary transform of `batch` consecutive cubes (side n, rank d).
inline void transform(ComplexBuffer& data, int d, int n, int batch, Direction dir) {
  int cube = 1;
  for (int i = 0; i < d; ++i) cube *= n;
  require(data.size() == static_cast<std::size_t>(cube) * batch, "fft: buffer size mismatch");
  fftw_plan plan = PlanCache::instance().get(d, n, batch, dir);
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, ptr, ptr);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cube));
  for (auto& v : data) v *= scale;
}

/// Signed integer frequency index for FFT bin k of an n-point transform.
inline int wavenumber(int k, int n) { return k < n / 2 ? k : k - n; }

}  // namespace phnls::fft
