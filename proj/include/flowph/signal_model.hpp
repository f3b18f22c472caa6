#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace flowph {

/// Uniformly sampled trajectory in R^d. Row i of points() is the state at
/// time t0 + i * dt.
class TimeSeriesPointCloud {
 public:
  using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  /// Throws InvalidArgument unless n >= min_size, d >= 1, dt > 0 and all
  /// entries are finite. min_size defaults to 2; a single-point cloud can be
  /// requested explicitly for degenerate-case callers.
  TimeSeriesPointCloud(Points points, double dt, double t0 = 0.0, std::size_t min_size = 2);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }

  const Points& points() const noexcept { return points_; }
  auto point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)); }

  /// Squared Euclidean distance, accumulated in axis order.
  double squared_distance(std::size_t i, std::size_t j) const noexcept {
    double acc = 0.0;
    for (Eigen::Index a = 0; a < points_.cols(); ++a) {
      const double diff = points_(static_cast<Eigen::Index>(j), a) - points_(static_cast<Eigen::Index>(i), a);
      acc += diff * diff;
    }
    return acc;
  }

  /// Same samples with a different point matrix (shape must match).
  TimeSeriesPointCloud with_points(Points points) const;

  /// Rows [start, start + length) taking every stride-th sample; dt scales by stride.
  TimeSeriesPointCloud slice(std::size_t start, std::size_t length, std::size_t stride = 1) const;

 private:
  Points points_;
  double dt_;
  double t0_;
};

// ---------------------------------------------------------------------------
// Hamiltonian double-well trajectory

struct HamiltonianParams {
  double total_time = 17.22;
  double step = 0.08;
  int exponent = 5;          // power of q in the restoring force
  double perturbation = 0.39;  // amplitude of the sinusoidal potential ripple
  double omega = 3.0;
  double q0 = 0.5;
  double p0 = 1.0;

  void validate() const;
};

/// F(q) = -(q^r - q - eps * omega * sin(omega q)).
double hamiltonian_force(double q, const HamiltonianParams& params) noexcept;

struct PhaseState {
  double q;
  double p;
};

/// One Stormer-Verlet (leapfrog) step of size h; h may be negative.
PhaseState verlet_step(PhaseState state, double h, const HamiltonianParams& params) noexcept;

/// floor(T/h) + 1 states (q, p) with dt = h, dropping the first `skip`.
/// Throws DivergenceError at the first non-finite state.
TimeSeriesPointCloud generate_hamiltonian(const HamiltonianParams& params, std::size_t skip = 0);

// ---------------------------------------------------------------------------
// Linear chirp with an amplitude notch on the second axis

struct ChirpParams {
  double f_start = 1.0;   // Hz
  double f_end = 10.0;    // Hz
  double t_max = 2.0;     // s
  std::size_t n = 500;
  double amp_x = 10.0;
  double amp_y = 2.0;
  double notch_depth = 0.9;

  void validate() const;
};

/// Instantaneous frequency f(t) in Hz.
double chirp_frequency(double t, const ChirpParams& params) noexcept;
/// phi(t) = 2 pi (f_start t + (f_end - f_start) t^2 / (2 t_max)).
double chirp_phase(double t, const ChirpParams& params) noexcept;
/// S(x) = 1 - depth * exp(-(x / amp_x)^2 / 2); amp_x is the analytic max |x(t)|.
double chirp_notch(double x, const ChirpParams& params) noexcept;

struct Chirp {
  TimeSeriesPointCloud cloud;  // columns (x, y), t_i = i * t_max / (n - 1)
  std::vector<double> phase;   // exact phi(t_i)
};

Chirp generate_chirp(const ChirpParams& params);

// ---------------------------------------------------------------------------
// Additive Gaussian observation noise

/// Per-axis noise variance is per_axis_power[a] / snr_linear. An infinite
/// snr_linear means no noise. For absolute variances use absolute().
struct NoiseSpec {
  double snr_linear = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  std::vector<double> per_axis_power;

  /// Signal-relative noise: P_a is the mean square of the clean axis.
  static NoiseSpec relative(const TimeSeriesPointCloud& clean, double snr_linear, std::uint64_t seed);
  static NoiseSpec relative_db(const TimeSeriesPointCloud& clean, double snr_db, std::uint64_t seed);
  /// Fixed per-axis standard deviations, independent of the signal.
  static NoiseSpec absolute(std::vector<double> sigmas, std::uint64_t seed);

  double variance(std::size_t axis) const { return per_axis_power.at(axis) / snr_linear; }
};

double db_to_linear(double snr_db) noexcept;

/// Mean square of every column.
std::vector<double> axis_power(const TimeSeriesPointCloud& cloud);

/// Noise is drawn row-major (all axes of sample 0, then sample 1, ...) from
/// GaussianRng(seed).
TimeSeriesPointCloud add_noise(const TimeSeriesPointCloud& cloud, const NoiseSpec& spec);

}  // namespace flowph
