#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdvlab/stats.hpp"
#include "kdvlab/torus_field.hpp"

namespace kdvlab {

/// Real mean-zero function on T x [-L, L) sampled on an nx-by-nt grid,
/// x_j = 2 pi j / nx, t_m = -L + m dt. Both sizes are powers of two >= 8.
///
/// Its space-time transform is discretized by the window DFT: tau runs over
/// pi q / L and integrals in tau become sums weighted by dtau = pi / L.
class SpaceTimeField {
 public:
  /// values[m * nx + j] = F(x_j, t_m). Throws ContractError when the grid is
  /// invalid or a time slice has nonzero spatial mean.
  SpaceTimeField(std::size_t nx, std::size_t nt, double half_window, std::vector<double> values);

  static SpaceTimeField from_function(std::size_t nx, std::size_t nt, double half_window,
                                      const std::function<double(double x, double t)>& f);
  /// (S(t) u0)(x), optionally multiplied by the bump eta(t / cutoff_time).
  static SpaceTimeField linear_solution(const TorusField& u0, std::size_t nx, std::size_t nt,
                                        double half_window,
                                        std::optional<double> cutoff_time = {});

  std::size_t nx() const noexcept { return nx_; }
  std::size_t nt() const noexcept { return nt_; }
  double half_window() const noexcept { return half_window_; }
  double dt() const noexcept { return 2.0 * half_window_ / static_cast<double>(nt_); }
  double dtau() const noexcept;
  double x(std::size_t j) const noexcept;
  double t(std::size_t m) const noexcept;
  const std::vector<double>& values() const noexcept { return values_; }

  /// eta(t / T) F.
  SpaceTimeField localized(double cutoff_time) const;
  /// d_x (F G), with the derivative taken spectrally in x.
  SpaceTimeField derivative_of_product(const SpaceTimeField& other) const;

  SpaceTimeField& operator*=(double scale);
  friend SpaceTimeField operator*(double scale, SpaceTimeField f) { return f *= scale; }

  struct Mode {
    int k;
    double tau;
    double magnitude;  ///< (1/2pi)|F^(k, tau)|, so X^{0,0} is the space-time L2 norm
  };
  /// Every nonzero space-time coefficient.
  std::vector<Mode> spectrum() const;

 private:
  std::size_t nx_;
  std::size_t nt_;
  double half_window_;
  std::vector<double> values_;
};

/// Smooth bump: 1 on [-1, 1], 0 outside (-2, 2).
double bump(double t) noexcept;

/// <x> = 1 + |x|.
inline double japanese(double x) noexcept { return 1.0 + (x < 0 ? -x : x); }

/// || |k|^s <tau - k^3>^b F^ ||_{l2_k L2_tau}
double xsb_norm(const SpaceTimeField& f, double s, double b);
/// X^{s,1/2} + || |k|^s F^ ||_{l2_k L1_tau}
double ys_norm(const SpaceTimeField& f, double s);
/// X^{s,-1/2} + || |k|^s F^ / <tau - k^3> ||_{l2_k L1_tau}
double zs_norm(const SpaceTimeField& f, double s);
/// Trapezoid space-time L2 norm of the grid values.
double spacetime_l2(const SpaceTimeField& f);

/// Coefficient f^(m, n) of a function on T^2 (x and t both 2 pi periodic), m > 0;
/// the conjugate at (-m, -n) is implied.
struct TorusMode {
  int m;
  long n;
  Complex value;
};

struct L4Ratio {
  double lhs;  ///< (mean over T^2 of f^4)^(1/4)
  double rhs;  ///< (sum <n - m^3>^(2/3) |f^|^2)^(1/2)
  double ratio;
};

/// Both sides of the L^4 Strichartz-type inequality; the quadrature grid is
/// fine enough to integrate f^4 exactly.
L4Ratio l4_ratio(std::span<const TorusMode> modes);

struct L4Probe {
  std::size_t band = 0;
  std::vector<L4Ratio> trials;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  double q90_ratio = 0.0;
};

/// Random fields concentrated near the cubic n = m^3: modes 1 <= m <= band with
/// n - m^3 in [-band, band], each kept with probability 1/2 and given a complex
/// Gaussian amplitude scaled by <n - m^3>^(-1/3).
L4Probe l4_inequality_probe(std::size_t trials, std::size_t band, std::uint64_t seed,
                            std::size_t threads = 0);

struct L4Refinement {
  L4Probe coarse;
  L4Probe fine;  ///< band doubled
  double growth = 0.0;  ///< fine.max_ratio / coarse.max_ratio
  bool stable = false;  ///< growth < 1.1
};

L4Refinement l4_refinement_study(std::size_t trials, std::size_t band, std::uint64_t seed,
                                 std::size_t threads = 0);

struct BilinearRecord {
  double cutoff_time = 0.0;
  double numerator = 0.0;    ///< || eta_T d_x(uv) ||_{Z^s}
  double denominator = 0.0;  ///< T^(1/12) (|u|_{Y^s} |v|_{Y^0} + |u|_{Y^0} |v|_{Y^s})
  double ratio = 0.0;
};

struct BilinearProbe {
  std::vector<BilinearRecord> records;
  /// Largest ratio over the grid.
  double fitted_constant = 0.0;
  /// Log-log fit of ratio against T (absent when a ratio vanishes).
  std::optional<LinearFit> scaling;
  /// Every ratio finite and <= fitted constant, and the ratio does not grow as T shrinks.
  bool bounded = false;
};

/// u = eta(t) S(t) u0 and v = eta(t) S(t) v0 on the window; T grid in (0, 1], >= 4 points.
BilinearProbe bilinear_scaling_probe(const TorusField& u0, const TorusField& v0, double s,
                                     std::span<const double> cutoff_times, std::size_t nx = 32,
                                     std::size_t nt = 512);

struct RatioRow {
  std::size_t trial;
  double parameter;  ///< cutoff time T or resolution band
  double lhs;
  double rhs;
  double ratio;
};

/// CSV with header "trial,<parameter_name>,lhs,rhs,ratio".
std::string ratio_csv(std::span<const RatioRow> rows, const std::string& parameter_name);
std::vector<RatioRow> ratio_rows(const L4Refinement& study);
std::vector<RatioRow> ratio_rows(const BilinearProbe& probe);

}  // namespace kdvlab
