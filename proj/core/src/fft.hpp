#pragma once

#include <complex>
#include <cstddef>
#include <span>

// Thin RAII wrappers over FFTW plans. Plan creation and destruction are
// serialized internally; execution on distinct objects is thread-safe.

namespace kdvlab::detail {

using Complex = std::complex<double>;

/// Version string of the linked FFT library.
const char* fft_library_version() noexcept;

/// Real <-> half-complex transform of length n. Both directions are unnormalized:
///   forward:  X_k = sum_j x_j e^{-2 pi i jk/n}
///   backward: x_j = sum_k X_k e^{+2 pi i jk/n}  (Hermitian extension implied)
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<double> grid() noexcept { return {grid_, n_}; }
  std::span<Complex> spectrum() noexcept { return {spectrum_, n_ / 2 + 1}; }

  void forward();
  /// Destroys the contents of spectrum().
  void backward();

 private:
  std::size_t n_;
  double* grid_ = nullptr;
  Complex* spectrum_ = nullptr;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// In-place complex 2-D transform on a row-major rows x cols array, unnormalized.
class ComplexFft2d {
 public:
  ComplexFft2d(std::size_t rows, std::size_t cols);
  ~ComplexFft2d();
  ComplexFft2d(const ComplexFft2d&) = delete;
  ComplexFft2d& operator=(const ComplexFft2d&) = delete;

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<Complex> data() noexcept { return {data_, rows_ * cols_}; }

  void forward();
  void backward();

 private:
  std::size_t rows_;
  std::size_t cols_;
  Complex* data_ = nullptr;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

}  // namespace kdvlab::detail
