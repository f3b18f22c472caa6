#pragma once

#include <optional>

#include <Eigen/Dense>

#include "flowph/neighborhoods.hpp"

namespace flowph {

/// |min K| at or below this counts as touching.
inline constexpr double kTangencyTolerance = 1e-9;

/// E(eps) = {x : (x - c)^T Sigma^{-1} (x - c) <= eps^2}. Semi-axes are
/// eps * sqrt(lambda_j) along the eigenvectors of Sigma, so the ellipsoid
/// grows with eps and Sigma = I gives the ball of radius eps.
struct Ellipsoid {
  Eigen::VectorXd center;
  LocalCovariance shape;
  double scale = 1.0;

  Eigen::VectorXd semi_axes() const { return scale * shape.eigenvalues.cwiseSqrt(); }
};

/// Closed membership test; throws InvalidArgument on a dimension mismatch.
bool contains(const Ellipsoid& e, const Eigen::Ref<const Eigen::VectorXd>& x);

struct IntersectionOptions {
  double tol = 1e-6;  // golden-section bracket width
  int max_iter = 100;
  bool early_exit = true;  // stop at the first negative K
};

struct IntersectionResult {
  bool intersects = true;
  double k_min = 1.0;    // smallest K found (at the exit point when stopped early)
  double s_at_min = 0.5;
  int iterations = 0;
  bool stopped_early = false;
};

/// K(S) = 1 - S(1-S) vᵀ((1-S) Sigma_i + S Sigma_j)^{-1} v / eps^2, v = x_i - x_j.
double separation_k(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j, const Eigen::VectorXd& x_i,
                    const Eigen::VectorXd& x_j, double eps, double s);

/// Golden-section minimisation of K over (0,1); intersects iff k_min >= -kTangencyTolerance.
IntersectionResult intersection_test(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                                     const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j, double eps,
                                     const IntersectionOptions& options = {});

/// Smallest eps in [0, eps_max] at which intersection_test succeeds, or
/// nullopt when the pair is still apart at eps_max.
///
/// The golden-section path compares only g(S) = (1 - K(S)) eps^2, so the
/// pass/fail outcome at eps is g_max <= eps^2 (within the tangency
/// tolerance). The scale is obtained by inverting that relation to the last
/// ulp, then probed at eps(1 -/+ rel_tol); a probe disagreeing with
/// monotonicity raises ConsistencyError.
std::optional<double> edge_birth_scale(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                                       const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j, double eps_max,
                                       double rel_tol = 1e-6, const IntersectionOptions& options = {});

}  // namespace flowph
