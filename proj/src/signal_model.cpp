#include "flowph/signal_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "flowph/errors.hpp"
#include "flowph/rng.hpp"

namespace flowph {

TimeSeriesPointCloud::TimeSeriesPointCloud(Points points, double dt, double t0, std::size_t min_size)
    : points_(std::move(points)), dt_(dt), t0_(t0) {
  if (points_.cols() < 1) throw InvalidArgument("point cloud dimension must be >= 1");
  if (static_cast<std::size_t>(points_.rows()) < min_size) {
    throw InvalidArgument(fmt::format("point cloud needs at least {} samples, got {}", min_size, points_.rows()));
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("sampling interval dt must be positive and finite");
  if (!std::isfinite(t0_)) throw InvalidArgument("start time must be finite");
  if (!points_.allFinite()) throw InvalidArgument("point cloud contains non-finite coordinates");
}

TimeSeriesPointCloud TimeSeriesPointCloud::with_points(Points points) const {
  if (points.rows() != points_.rows() || points.cols() != points_.cols()) {
    throw InvalidArgument("replacement points must keep the cloud shape");
  }
  return TimeSeriesPointCloud(std::move(points), dt_, t0_, 1);
}

TimeSeriesPointCloud TimeSeriesPointCloud::slice(std::size_t start, std::size_t length, std::size_t stride) const {
  if (stride == 0) throw InvalidArgument("stride must be >= 1");
  if (start >= size()) throw InvalidArgument(fmt::format("segment start {} beyond {} samples", start, size()));
  const std::size_t end = std::min(size(), start + length);
  const std::size_t count = (end - start + stride - 1) / stride;
  Points out(static_cast<Eigen::Index>(count), points_.cols());
  for (std::size_t r = 0; r < count; ++r) {
    out.row(static_cast<Eigen::Index>(r)) = points_.row(static_cast<Eigen::Index>(start + r * stride));
  }
  return TimeSeriesPointCloud(std::move(out), dt_ * static_cast<double>(stride), time(start));
}

// ---------------------------------------------------------------------------

void HamiltonianParams::validate() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("Hamiltonian step h must be positive");
  if (!(total_time > 0.0) || !std::isfinite(total_time)) throw InvalidArgument("Hamiltonian total time T must be positive");
  if (exponent < 1) throw InvalidArgument("Hamiltonian exponent must be a positive integer");
  if (!std::isfinite(perturbation) || !std::isfinite(omega) || !std::isfinite(q0) || !std::isfinite(p0)) {
    throw InvalidArgument("Hamiltonian parameters must be finite");
  }
}

double hamiltonian_force(double q, const HamiltonianParams& params) noexcept {
  double qr = 1.0;
  for (int e = 0; e < params.exponent; ++e) qr *= q;
  return -(qr - q - params.perturbation * params.omega * std::sin(params.omega * q));
}

PhaseState verlet_step(PhaseState state, double h, const HamiltonianParams& params) noexcept {
  const double p_half = state.p + 0.5 * h * hamiltonian_force(state.q, params);
  const double q_next = state.q + h * p_half;
  const double p_next = p_half + 0.5 * h * hamiltonian_force(q_next, params);
  return {q_next, p_next};
}

TimeSeriesPointCloud generate_hamiltonian(const HamiltonianParams& params, std::size_t skip) {
  params.validate();
  const auto steps = static_cast<std::size_t>(std::floor(params.total_time / params.step));
  const std::size_t total = steps + 1;
  if (skip + 2 > total) throw InvalidArgument("transient skip leaves fewer than two states");

  TimeSeriesPointCloud::Points out(static_cast<Eigen::Index>(total - skip), 2);
  PhaseState state{params.q0, params.p0};
  for (std::size_t k = 0; k < total; ++k) {
    if (k > 0) state = verlet_step(state, params.step, params);
    if (!std::isfinite(state.q) || !std::isfinite(state.p)) {
      throw DivergenceError(fmt::format("Stormer-Verlet integration diverged at step {}", k), k);
    }
    if (k >= skip) {
      out(static_cast<Eigen::Index>(k - skip), 0) = state.q;
      out(static_cast<Eigen::Index>(k - skip), 1) = state.p;
    }
  }
  return TimeSeriesPointCloud(std::move(out), params.step, static_cast<double>(skip) * params.step);
}

// ---------------------------------------------------------------------------

void ChirpParams::validate() const {
  if (!(f_start > 0.0) || !(f_end >= f_start) || !std::isfinite(f_end)) {
    throw InvalidArgument("chirp requires f_end >= f_start > 0");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw InvalidArgument("chirp duration t_max must be positive");
  if (n < 2) throw InvalidArgument("chirp needs n >= 2 samples");
  if (!(notch_depth >= 0.0 && notch_depth < 1.0)) throw InvalidArgument("notch depth must lie in [0, 1)");
  if (!(amp_x > 0.0) || !std::isfinite(amp_y)) throw InvalidArgument("chirp amplitudes must be finite, amp_x > 0");
}

double chirp_frequency(double t, const ChirpParams& params) noexcept {
  return params.f_start + (params.f_end - params.f_start) / params.t_max * t;
}

double chirp_phase(double t, const ChirpParams& params) noexcept {
  return 2.0 * std::numbers::pi *
         (params.f_start * t + (params.f_end - params.f_start) / (2.0 * params.t_max) * t * t);
}

double chirp_notch(double x, const ChirpParams& params) noexcept {
  const double u = x / params.amp_x;
  return 1.0 - params.notch_depth * std::exp(-0.5 * u * u);
}

Chirp generate_chirp(const ChirpParams& params) {
  params.validate();
  const double dt = params.t_max / static_cast<double>(params.n - 1);
  TimeSeriesPointCloud::Points pts(static_cast<Eigen::Index>(params.n), 2);
  std::vector<double> phase(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double phi = chirp_phase(t, params);
    const double x = params.amp_x * std::cos(phi);
    const double y = params.amp_y * std::sin(phi) * chirp_notch(x, params);
    pts(static_cast<Eigen::Index>(i), 0) = x;
    pts(static_cast<Eigen::Index>(i), 1) = y;
    phase[i] = phi;
  }
  return Chirp{TimeSeriesPointCloud(std::move(pts), dt, 0.0), std::move(phase)};
}

// ---------------------------------------------------------------------------

double db_to_linear(double snr_db) noexcept { return std::pow(10.0, snr_db / 10.0); }

std::vector<double> axis_power(const TimeSeriesPointCloud& cloud) {
  std::vector<double> power(cloud.dim(), 0.0);
  for (std::size_t a = 0; a < cloud.dim(); ++a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double v = cloud.points()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
      acc += v * v;
    }
    power[a] = acc / static_cast<double>(cloud.size());
  }
  return power;
}

NoiseSpec NoiseSpec::relative(const TimeSeriesPointCloud& clean, double snr_linear, std::uint64_t seed) {
  return NoiseSpec{snr_linear, seed, axis_power(clean)};
}

NoiseSpec NoiseSpec::relative_db(const TimeSeriesPointCloud& clean, double snr_db, std::uint64_t seed) {
  return relative(clean, db_to_linear(snr_db), seed);
}

NoiseSpec NoiseSpec::absolute(std::vector<double> sigmas, std::uint64_t seed) {
  for (double& s : sigmas) s *= s;
  return NoiseSpec{1.0, seed, std::move(sigmas)};
}

TimeSeriesPointCloud add_noise(const TimeSeriesPointCloud& cloud, const NoiseSpec& spec) {
  if (!(spec.snr_linear > 0.0)) throw InvalidArgument("SNR must be positive");
  if (spec.per_axis_power.size() != cloud.dim()) {
    throw InvalidArgument(fmt::format("noise spec has {} axis powers for a {}-dimensional cloud",
                                      spec.per_axis_power.size(), cloud.dim()));
  }
  std::vector<double> sigma(cloud.dim());
  bool silent = true;
  for (std::size_t a = 0; a < cloud.dim(); ++a) {
    const double power = spec.per_axis_power[a];
    if (!(power >= 0.0) || !std::isfinite(power)) throw InvalidArgument("axis power must be finite and >= 0");
    sigma[a] = std::isinf(spec.snr_linear) ? 0.0 : std::sqrt(power / spec.snr_linear);
    silent = silent && sigma[a] == 0.0;
  }
  if (silent) return cloud;

  GaussianRng rng(spec.seed);
  auto noisy = cloud.points();
  for (Eigen::Index i = 0; i < noisy.rows(); ++i) {
    for (Eigen::Index a = 0; a < noisy.cols(); ++a) {
      noisy(i, a) += sigma[static_cast<std::size_t>(a)] * rng.normal();
    }
  }
  return cloud.with_points(std::move(noisy));
}

}  // namespace flowph
