#include "tgcca/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "tgcca/log.hpp"

namespace tgcca {

TruncatedSvd truncated_svd(const Matrix& a, Index r) {
  if (r < 1 || r > std::min(a.rows(), a.cols()))
    throw ConfigError("truncated_svd: rank " + std::to_string(r) +
                      " out of range for " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " matrix");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd out;
  out.left = svd.matrixU().leftCols(r);
  out.singular = svd.singularValues().head(r);
  out.right = svd.matrixV().leftCols(r);
  // Sign convention: largest-magnitude entry of each left vector nonnegative.
  for (Index k = 0; k < r; ++k) {
    Index imax = 0;
    out.left.col(k).cwiseAbs().maxCoeff(&imax);
    if (out.left(imax, k) < 0.0) {
      out.left.col(k) = -out.left.col(k);
      out.right.col(k) = -out.right.col(k);
    }
  }
  return out;
}

ProcrustesResult procrustes_max(const Matrix& f) {
  const Index r = f.cols();
  if (r > f.rows())
    throw ConfigError("procrustes_max: more columns than rows");
  TruncatedSvd svd = truncated_svd(f, r);
  bool unique = true;
  if (svd.singular[r - 1] <= 1e-12 * svd.singular[0]) {
    unique = false;
    log::warn("procrustes_max: rank-deficient input, update not unique");
  }
  return {svd.left * svd.right.transpose(), unique};
}

Matrix spd_inv_sqrt(const Matrix& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw NumericalError("spd_inv_sqrt: input not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0)
    throw NumericalError("spd_inv_sqrt: non-SPD input, smallest eigenvalue " +
                         std::to_string(ev.minCoeff()));
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

double spectral_norm_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Vector ball_hyperplane_project(const Vector& lambda_ref, const Vector& u,
                               double alpha, double eps_level) {
  const double uu = u.squaredNorm();
  if (uu == 0.0) throw NumericalError("ball_hyperplane_project: u = 0");
  if (eps_level * eps_level / uu > alpha * (1.0 + 1e-12))
    throw NumericalError(
        "ball_hyperplane_project: hyperplane does not meet the ball");

  Vector perp = lambda_ref - (u.dot(lambda_ref) / uu) * u;
  const double pn = perp.norm();
  const double radial = std::max(alpha - eps_level * eps_level / uu, 0.0);
  if (pn <= 1e-12 * lambda_ref.norm() || radial == 0.0) {
    // Collinear (or tangent) case: the feasible optimum is on span(u).
    return std::sqrt(alpha) / std::sqrt(uu) * u;
  }
  return (eps_level / uu) * u + std::sqrt(radial) / pn * perp;
}

}  // namespace tgcca
