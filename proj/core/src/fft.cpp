#include "fft.h"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace rainforge::detail {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::vector<std::complex<double>> dft2(const std::vector<std::complex<double>>& in, int width,
                                       int height, bool inverse) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(height, width, buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  std::memcpy(buf, in.data(), sizeof(fftw_complex) * n);
  fftw_execute(plan);
  std::vector<std::complex<double>> out(n);
  std::memcpy(static_cast<void*>(out.data()), buf, sizeof(fftw_complex) * n);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

}  // namespace rainforge::detail
