#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace kdvlab::detail {

const char* fft_library_version() noexcept { return fftw_version; }

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  grid_ = fftw_alloc_real(n_);
  spectrum_ = reinterpret_cast<Complex*>(fftw_alloc_complex(n_ / 2 + 1));
  if (grid_ == nullptr || spectrum_ == nullptr) throw std::bad_alloc();
  auto* spec = reinterpret_cast<fftw_complex*>(spectrum_);
  forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), grid_, spec, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), spec, grid_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  fftw_free(grid_);
  fftw_free(spectrum_);
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }
void RealFft::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

ComplexFft2d::ComplexFft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  std::lock_guard lock(planner_mutex());
  data_ = reinterpret_cast<Complex*>(fftw_alloc_complex(rows_ * cols_));
  if (data_ == nullptr) throw std::bad_alloc();
  auto* d = reinterpret_cast<fftw_complex*>(data_);
  forward_plan_ = fftw_plan_dft_2d(static_cast<int>(rows_), static_cast<int>(cols_), d, d,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft_2d(static_cast<int>(rows_), static_cast<int>(cols_), d, d,
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexFft2d::~ComplexFft2d() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
  fftw_free(data_);
}

void ComplexFft2d::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }
void ComplexFft2d::backward() { fftw_execute(static_cast<fftw_plan>(backward_plan_)); }

}  // namespace kdvlab::detail
