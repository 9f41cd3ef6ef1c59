#include "kdvlab/torus_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.hpp"
#include "kdvlab/errors.hpp"

namespace kdvlab {
namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrtPi = std::sqrt(kPi);

void require_same_cutoff(const TorusField& a, const TorusField& b) {
  if (a.cutoff() != b.cutoff()) {
    throw ContractError("field cutoffs differ: " + std::to_string(a.cutoff()) + " vs " +
                        std::to_string(b.cutoff()));
  }
}

}  // namespace

SobolevIndex::SobolevIndex(double s) : value(s) {
  if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("Sobolev index must be >= 0");
}

TorusField::TorusField(std::vector<Complex> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw ContractError("a torus field needs at least one mode");
}

TorusField TorusField::zero(std::size_t cutoff) {
  return TorusField(std::vector<Complex>(cutoff, Complex{}));
}

TorusField TorusField::basis(std::size_t k, double alpha, double beta, std::size_t cutoff) {
  if (k == 0 || k > cutoff) throw ContractError("basis mode out of range");
  TorusField u = zero(cutoff);
  u[k] = Complex(alpha, -beta) * (kSqrtPi / 2.0);
  return u;
}

double TorusField::cos_coordinate(std::size_t k) const {
  return 2.0 * (*this)[k].real() / kSqrtPi;
}

double TorusField::sin_coordinate(std::size_t k) const {
  return -2.0 * (*this)[k].imag() / kSqrtPi;
}

TorusField TorusField::with_cutoff(std::size_t cutoff) const {
  std::vector<Complex> out(cutoff, Complex{});
  std::copy_n(modes_.begin(), std::min(cutoff, modes_.size()), out.begin());
  return TorusField(std::move(out));
}

std::vector<double> TorusField::sample(std::size_t points) const {
  if (points <= 2 * cutoff()) throw ContractError("grid too coarse to resolve every mode");
  detail::RealFft fft(points);
  auto spec = fft.spectrum();
  std::fill(spec.begin(), spec.end(), Complex{});
  for (std::size_t k = 1; k <= cutoff(); ++k) spec[k] = modes_[k - 1] / kPi;
  fft.backward();
  auto grid = fft.grid();
  return {grid.begin(), grid.end()};
}

double TorusField::value_at(double x) const {
  double sum = 0.0;
  for (std::size_t k = 1; k <= cutoff(); ++k) {
    sum += 2.0 * (modes_[k - 1] * std::polar(1.0, static_cast<double>(k) * x)).real();
  }
  return sum / kPi;
}

bool TorusField::all_finite() const noexcept {
  return std::all_of(modes_.begin(), modes_.end(), [](const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

TorusField& TorusField::operator+=(const TorusField& other) {
  require_same_cutoff(*this, other);
  for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] += other.modes_[i];
  return *this;
}

TorusField& TorusField::operator-=(const TorusField& other) {
  require_same_cutoff(*this, other);
  for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] -= other.modes_[i];
  return *this;
}

TorusField& TorusField::operator*=(double scale) {
  for (auto& c : modes_) c *= scale;
  return *this;
}

TorusField make_field(std::vector<Complex> modes) { return TorusField(std::move(modes)); }

double sobolev_norm(const TorusField& u, SobolevIndex s) {
  double sum = 0.0;
  for (std::size_t k = 1; k <= u.cutoff(); ++k) {
    const double w = s.value == 0.0 ? 1.0 : std::pow(static_cast<double>(k), 2.0 * s.value);
    sum += w * std::norm(u[k]);
  }
  return std::sqrt(4.0 * sum / kPi);
}

double l2_norm(const TorusField& u) { return sobolev_norm(u, SobolevIndex{}); }

double inner_product(const TorusField& u, const TorusField& v) {
  const std::size_t m = std::min(u.cutoff(), v.cutoff());
  double sum = 0.0;
  for (std::size_t k = 1; k <= m; ++k) sum += (u[k] * std::conj(v[k])).real();
  return 4.0 * sum / kPi;
}

double linf_norm(const TorusField& u) {
  const auto grid = u.sample(8 * u.cutoff());
  double best = 0.0;
  for (double x : grid) best = std::max(best, std::abs(x));
  return best;
}

TorusField project(const TorusField& u, std::size_t n) {
  TorusField out = u;
  for (std::size_t k = n + 1; k <= out.cutoff(); ++k) out[k] = Complex{};
  return out;
}

double integral_u3(const TorusField& u) {
  // int u^3 = 2 pi sum_{k1+k2+k3=0} g(k1) g(k2) g(k3) with g = a / pi. Each
  // zero-sum triple has two modes of one sign; grouping by the lone mode gives
  // 3 * 2 Re sum_{p,q>0} g(p) g(q) conj(g(p+q)).
  const std::size_t m = u.cutoff();
  Complex acc{};
  for (std::size_t p = 1; p < m; ++p) {
    for (std::size_t q = 1; p + q <= m; ++q) acc += u[p] * u[q] * std::conj(u[p + q]);
  }
  return 12.0 * kPi * acc.real() / (kPi * kPi * kPi);
}

double integral_u3_quadrature(const TorusField& u) {
  const std::size_t points = 4 * u.cutoff() + 4;
  const auto grid = u.sample(points);
  double sum = 0.0;
  for (double x : grid) sum += x * x * x;
  return 2.0 * kPi * sum / static_cast<double>(points);
}

double hamiltonian(const TorusField& u) {
  const double grad = sobolev_norm(u, SobolevIndex(1.0));
  return 0.5 * grad * grad - integral_u3(u) / 6.0;
}

TorusField derivative(const TorusField& u) {
  TorusField out = u;
  for (std::size_t k = 1; k <= out.cutoff(); ++k) out[k] *= Complex(0.0, static_cast<double>(k));
  return out;
}

}  // namespace kdvlab
