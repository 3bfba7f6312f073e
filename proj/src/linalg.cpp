#include "iiss/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>

#include "iiss/errors.hpp"

namespace iiss {
namespace {

constexpr double kTheta13 = 5.371920351148152;

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

void require_square(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix must be square");
}

}  // namespace

Mat expm(const Mat& a) {
  require_square(a);
  if (!a.allFinite()) throw Error(ErrorCode::NonFinite, "expm: matrix has non-finite entries");
  const auto n = a.rows();
  if (n == 0) return a;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
  const Mat x = a / std::ldexp(1.0, s);
  const Mat id = Mat::Identity(n, n);
  const Mat x2 = x * x;
  const Mat x4 = x2 * x2;
  const Mat x6 = x4 * x2;
  const auto& b = kPade13;
  const Mat u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                      b[3] * x2 + b[1] * id;
  const Mat u = x * u_inner;
  const Mat v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 +
                b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

std::pair<Mat, Mat> exp_and_phi(const Mat& a, double h) {
  require_square(a);
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::InvalidArgument, "exp_and_phi: step must be positive");
  }
  const auto n = a.rows();
  Mat aug = Mat::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = a * h;
  aug.topRightCorner(n, n) = Mat::Identity(n, n) * h;
  const Mat big = expm(aug);
  return {big.topLeftCorner(n, n), big.topRightCorner(n, n)};
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

bool is_symmetric(const Mat& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double spectral_abscissa(const Mat& a) {
  require_square(a);
  if (a.size() == 0) return 0.0;
  if (is_symmetric(a)) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

}  // namespace iiss
