#pragma once

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "translab/core.hpp"

namespace translab {

/// In-place complex FFT over a row-major array of the given shape.
/// Plans are created once per shape (FFTW planning is not thread-safe, so it
/// sits behind a mutex) and executed through the new-array interface, which
/// is safe to call concurrently on distinct buffers.
class Fft {
 public:
  explicit Fft(std::vector<int> dims) : dims_(std::move(dims)) {
    require(!dims_.empty(), "Fft: empty shape");
    total_ = 1;
    for (int d : dims_) {
      require(d >= 1, "Fft: non-positive extent");
      total_ *= static_cast<std::size_t>(d);
    }
    plans_ = plans_for(dims_);
  }

  std::size_t size() const { return total_; }
  const std::vector<int>& dims() const { return dims_; }

  /// data <- sum_j data_j exp(-2 pi i j.k / n), unnormalised.
  void forward(std::vector<cplx>& data) const { run(plans_->fwd, data); }
  /// data <- sum_k data_k exp(+2 pi i j.k / n), unnormalised.
  void inverse(std::vector<cplx>& data) const { run(plans_->inv, data); }

 private:
  struct Plans {
    fftw_plan fwd = nullptr, inv = nullptr;
    ~Plans() {
      if (fwd) fftw_destroy_plan(fwd);
      if (inv) fftw_destroy_plan(inv);
    }
  };

  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  static std::shared_ptr<const Plans> plans_for(const std::vector<int>& dims) {
    static std::map<std::vector<int>, std::shared_ptr<const Plans>> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (auto it = cache.find(dims); it != cache.end()) return it->second;
    std::size_t total = 1;
    for (int d : dims) total *= static_cast<std::size_t>(d);
    auto* buf = fftw_alloc_complex(total);
    if (!buf) throw NumericalError("Fft: allocation failed");
    auto p = std::make_shared<Plans>();
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int rank = static_cast<int>(dims.size());
    p->fwd = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_FORWARD, flags);
    p->inv = fftw_plan_dft(rank, dims.data(), buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!p->fwd || !p->inv) throw NumericalError("Fft: planning failed");
    cache.emplace(dims, p);
    return p;
  }

  void run(fftw_plan plan, std::vector<cplx>& data) const {
    require(data.size() == total_, "Fft: buffer size does not match shape");
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
  }

  std::vector<int> dims_;
  std::size_t total_ = 0;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace translab
