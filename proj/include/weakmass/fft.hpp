#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace weakmass::detail {

// Thread-safe access to FFTW plans. FFTW's planner is not reentrant, so plan
// creation is serialized; executing an existing plan on new arrays is safe
// from any thread.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<std::complex<double>> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

// Unnormalized DFT: out[k] = sum_j in[j] exp(sign * 2 pi i j k / n).
inline std::vector<std::complex<double>> dft(std::span<const std::complex<double>> in, int sign) {
  std::vector<std::complex<double>> work(in.begin(), in.end());
  std::vector<std::complex<double>> out(in.size());
  fftw_plan plan = FftPlanCache::instance().get(in.size(), sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace weakmass::detail
