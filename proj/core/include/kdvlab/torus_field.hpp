#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace kdvlab {

using Complex = std::complex<double>;

/// Regularity exponent of the homogeneous Sobolev space H^s (weights |k|^s).
struct SobolevIndex {
  double value = 0.0;

  constexpr SobolevIndex() = default;
  /// Throws DomainError when s < 0.
  explicit SobolevIndex(double s);

  constexpr double operator*() const noexcept { return value; }
};

/// Real, mean-zero function on the torus [0, 2pi) stored by its positive
/// Fourier modes k = 1..M.
///
/// The amplitude convention is
///
///     u(x) = (1/pi) * sum_{k=1..M} 2 Re( a(k) e^{ikx} ),   a(k) = (1/2) int_T u(x) e^{-ikx} dx,
///
/// so that u = alpha c_k + beta s_k, with c_k = cos(kx)/sqrt(pi) and
/// s_k = sin(kx)/sqrt(pi), has a(k) = (alpha - i beta) sqrt(pi)/2. The basis
/// {c_k, s_k} is orthonormal in L^2 and every norm in the library inherits
/// this normalization. Negative modes are implied by conjugacy and the zero
/// mode does not exist, so realness and zero mean hold by construction.
class TorusField {
 public:
  /// Builds a field from amplitudes a(1..M). Throws ContractError on an empty list.
  explicit TorusField(std::vector<Complex> modes);

  static TorusField zero(std::size_t cutoff);
  /// alpha * c_k + beta * s_k with the given cutoff (k <= cutoff).
  static TorusField basis(std::size_t k, double alpha, double beta, std::size_t cutoff);
  static TorusField cosine(std::size_t k, std::size_t cutoff) { return basis(k, 1.0, 0.0, cutoff); }
  static TorusField sine(std::size_t k, std::size_t cutoff) { return basis(k, 0.0, 1.0, cutoff); }

  std::size_t cutoff() const noexcept { return modes_.size(); }

  /// Amplitude of mode k, 1 <= k <= cutoff().
  Complex operator[](std::size_t k) const { return modes_[k - 1]; }
  Complex& operator[](std::size_t k) { return modes_[k - 1]; }

  std::span<const Complex> amplitudes() const noexcept { return modes_; }
  std::span<Complex> amplitudes() noexcept { return modes_; }

  /// Coordinates in the orthonormal basis: u = sum alpha_k c_k + beta_k s_k.
  double cos_coordinate(std::size_t k) const;
  double sin_coordinate(std::size_t k) const;

  /// Same function with a different cutoff (zero padding or truncation).
  TorusField with_cutoff(std::size_t cutoff) const;

  /// Point values on the equispaced grid x_j = 2 pi j / points.
  /// Requires points > 2 * cutoff() so that every mode is resolved.
  std::vector<double> sample(std::size_t points) const;
  double value_at(double x) const;

  bool all_finite() const noexcept;

  TorusField& operator+=(const TorusField& other);
  TorusField& operator-=(const TorusField& other);
  TorusField& operator*=(double scale);

  friend TorusField operator+(TorusField a, const TorusField& b) { return a += b; }
  friend TorusField operator-(TorusField a, const TorusField& b) { return a -= b; }
  friend TorusField operator*(double scale, TorusField a) { return a *= scale; }
  friend TorusField operator*(TorusField a, double scale) { return a *= scale; }

  friend bool operator==(const TorusField&, const TorusField&) = default;

 private:
  std::vector<Complex> modes_;
};

/// Same as the TorusField constructor.
TorusField make_field(std::vector<Complex> modes);

/// Homogeneous Sobolev norm ( sum_k |k|^{2s} |coordinates_k|^2 )^{1/2}; s = 0 is the L^2 norm.
double sobolev_norm(const TorusField& u, SobolevIndex s);
double l2_norm(const TorusField& u);

/// L^2 inner product <u, v>.
double inner_product(const TorusField& u, const TorusField& v);

/// max |u(x)| over an equispaced grid of at least 8 * cutoff points.
double linf_norm(const TorusField& u);

/// Orthogonal projection onto span{c_k, s_k : k <= n}. Keeps the cutoff.
TorusField project(const TorusField& u, std::size_t n);

/// int_T u^3 dx from the Fourier triple convolution (exact for trigonometric polynomials).
double integral_u3(const TorusField& u);
/// int_T u^3 dx by the periodic trapezoid rule on a grid of at least 3M+1 points.
double integral_u3_quadrature(const TorusField& u);

/// H(u) = 1/2 ||d_x u||^2 - 1/6 int u^3.
double hamiltonian(const TorusField& u);

/// Spatial derivative.
TorusField derivative(const TorusField& u);

}  // namespace kdvlab
