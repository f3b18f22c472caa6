#include "flowph/ellipsoid.hpp"

#include <cmath>

#include <fmt/format.h>

#include "detail/contact.hpp"
#include "flowph/errors.hpp"

namespace flowph {

namespace {

void check_pair(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j, const Eigen::VectorXd& x_i,
                const Eigen::VectorXd& x_j) {
  const auto d = x_i.size();
  if (d == 0 || x_j.size() != d || sigma_i.rows() != d || sigma_i.cols() != d || sigma_j.rows() != d ||
      sigma_j.cols() != d) {
    throw InvalidArgument("ellipsoid pair has inconsistent dimensions");
  }
}

template <int D>
detail::ContactPair<D> make_pair(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                                 const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j) {
  return detail::ContactPair<D>{sigma_i, sigma_j, x_i - x_j};
}

template <int D>
IntersectionResult run_test(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                            const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j, double eps,
                            const IntersectionOptions& options) {
  const auto pair = make_pair<D>(sigma_i, sigma_j, x_i, x_j);
  const auto outcome =
      detail::golden_contact(pair, options.tol, options.max_iter, options.early_exit ? eps : 0.0);
  IntersectionResult result;
  result.k_min = detail::k_from_g(outcome.g_max, eps);
  result.s_at_min = outcome.s_at;
  result.iterations = outcome.iterations;
  result.stopped_early = outcome.stopped_early;
  result.intersects = detail::within_contact(outcome.g_max, eps);
  return result;
}

}  // namespace

bool contains(const Ellipsoid& e, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != e.center.size() || e.shape.eigenvalues.size() != x.size()) {
    throw InvalidArgument("ellipsoid membership: dimension mismatch");
  }
  const Eigen::VectorXd diff = x - e.center;
  return e.shape.mahalanobis_squared(diff) <= e.scale * e.scale;
}

double separation_k(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j, const Eigen::VectorXd& x_i,
                    const Eigen::VectorXd& x_j, double eps, double s) {
  check_pair(sigma_i, sigma_j, x_i, x_j);
  if (!(eps > 0.0)) throw InvalidArgument("scale eps must be positive");
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("S must lie in (0, 1)");
  const auto pair = make_pair<Eigen::Dynamic>(sigma_i, sigma_j, x_i, x_j);
  return detail::k_from_g(pair.g(s, 1e-12), eps);
}

IntersectionResult intersection_test(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                                     const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j, double eps,
                                     const IntersectionOptions& options) {
  check_pair(sigma_i, sigma_j, x_i, x_j);
  if (!(eps > 0.0)) throw InvalidArgument("scale eps must be positive");
  switch (x_i.size()) {
    case 2:
      return run_test<2>(sigma_i, sigma_j, x_i, x_j, eps, options);
    case 3:
      return run_test<3>(sigma_i, sigma_j, x_i, x_j, eps, options);
    default:
      return run_test<Eigen::Dynamic>(sigma_i, sigma_j, x_i, x_j, eps, options);
  }
}

std::optional<double> edge_birth_scale(const Eigen::MatrixXd& sigma_i, const Eigen::MatrixXd& sigma_j,
                                       const Eigen::VectorXd& x_i, const Eigen::VectorXd& x_j, double eps_max,
                                       double rel_tol, const IntersectionOptions& options) {
  check_pair(sigma_i, sigma_j, x_i, x_j);
  if (!(eps_max > 0.0)) throw InvalidArgument("eps_max must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("rel_tol must lie in (0, 1)");

  detail::BirthOutcome outcome;
  switch (x_i.size()) {
    case 2:
      outcome = detail::birth_scale(make_pair<2>(sigma_i, sigma_j, x_i, x_j), eps_max, rel_tol, options.tol,
                                    options.max_iter);
      break;
    case 3:
      outcome = detail::birth_scale(make_pair<3>(sigma_i, sigma_j, x_i, x_j), eps_max, rel_tol, options.tol,
                                    options.max_iter);
      break;
    default:
      outcome = detail::birth_scale(make_pair<Eigen::Dynamic>(sigma_i, sigma_j, x_i, x_j), eps_max, rel_tol,
                                    options.tol, options.max_iter);
  }
  switch (outcome.status) {
    case detail::BirthStatus::beyond_cap:
      return std::nullopt;
    case detail::BirthStatus::inconsistent:
      throw ConsistencyError(fmt::format("non-monotone intersection bracket around eps = {}", outcome.scale));
    case detail::BirthStatus::born:
      break;
  }
  return outcome.scale;
}

}  // namespace flowph
