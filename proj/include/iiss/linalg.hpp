#pragma once

#include <Eigen/Dense>
#include <utility>

namespace iiss {

using Mat = Eigen::MatrixXd;

/// e^A by scaling and squaring with a degree-13 Pade approximant.
Mat expm(const Mat& a);

/// (e^{Ah}, integral_0^h e^{As} ds) from one exponential of the augmented
/// block matrix [[A h, I h], [0, 0]].
std::pair<Mat, Mat> exp_and_phi(const Mat& a, double h);

/// Largest singular value.
double spectral_norm(const Mat& a);

/// max Re(lambda) over the eigenvalues of a square matrix.
double spectral_abscissa(const Mat& a);

bool is_symmetric(const Mat& a, double rel_tol = 0.0);

}  // namespace iiss
