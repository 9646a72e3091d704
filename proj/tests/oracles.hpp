#pragma once

// Independent reference computations used only by the test suites. None of
// these call into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using cd = std::complex<double>;

/// Lag-l sample ACV over I_v(G), 1-based inclusive, written as a triple loop.
inline Mat acv(const Mat& X, int v, int lag, int G) {
  const int p = static_cast<int>(X.rows());
  Mat out = Mat::Zero(p, p);
  const int l = std::abs(lag);
  for (int t = v - G + 1 + l; t <= v; ++t) {
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) out(i, j) += X(i, t - l - 1) * X(j, t - 1);
    }
  }
  out /= G;
  if (lag < 0) return out.transpose();
  return out;
}

inline double bartlett(int lag, int m) {
  const double x = static_cast<double>(lag) / m;
  return std::max(0.0, 1.0 - std::abs(x));
}

/// Local spectral density, summing every lag -m..m term by term.
inline CMat spectral(const Mat& X, int v, int G, int m, double omega) {
  const int p = static_cast<int>(X.rows());
  CMat out = CMat::Zero(p, p);
  for (int l = -m; l <= m; ++l) {
    const double w = bartlett(l, m);
    if (w == 0.0) continue;
    const Mat g = acv(X, v, l, G);
    const cd e = std::exp(cd(0.0, -l * omega));
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) out(i, j) += w * g(i, j) * e;
    }
  }
  return out / (2.0 * std::numbers::pi);
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix.
inline Eigen::VectorXd jacobi_eigenvalues(Mat a) {
  const int n = static_cast<int>(a.rows());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (int pidx = 0; pidx < n; ++pidx) {
      for (int q = pidx + 1; q < n; ++q) {
        if (std::abs(a(pidx, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(pidx, pidx)) / (2.0 * a(pidx, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, pidx), akq = a(k, q);
          a(k, pidx) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(pidx, k), aqk = a(q, k);
          a(pidx, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  return a.diagonal();
}

/// Eigenvalues of a Hermitian matrix via the real 2p x 2p embedding
/// [[Re, -Im], [Im, Re]], whose spectrum is that of H with each value doubled.
inline Eigen::VectorXd hermitian_eigenvalues(const CMat& H) {
  const int p = static_cast<int>(H.rows());
  Mat big(2 * p, 2 * p);
  big << H.real(), -H.imag(), H.imag(), H.real();
  Eigen::VectorXd ev = jacobi_eigenvalues(big);
  std::sort(ev.data(), ev.data() + ev.size());
  Eigen::VectorXd out(p);
  for (int i = 0; i < p; ++i) out(i) = ev(2 * i);
  return out;
}

inline double hermitian_opnorm(const CMat& H) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(H);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

/// min |b|_1 s.t. |G b - g|_inf <= lambda by enumerating every vertex of the
/// arrangement formed by the 2k constraint faces and the k coordinate planes.
/// The l1 norm is linear on each orthant, so the optimum sits on such a vertex.
struct L1Oracle {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd argmin;
};

inline L1Oracle l1_vertex_enumeration(const Mat& G, const Eigen::VectorXd& g, double lambda) {
  const int k = static_cast<int>(G.rows());
  // Hyperplanes a_i^T b = c_i.
  Mat H(3 * k, k);
  Eigen::VectorXd c(3 * k);
  H << G, G, Mat::Identity(k, k);
  c << g.array() + lambda, g.array() - lambda, Eigen::VectorXd::Zero(k);
  L1Oracle best;
  std::vector<int> pick(static_cast<std::size_t>(k));
  const int total = 3 * k;
  // Enumerate k-subsets of {0..3k-1}.
  std::vector<bool> mask(static_cast<std::size_t>(total), false);
  std::fill(mask.begin(), mask.begin() + k, true);
  do {
    Mat A(k, k);
    Eigen::VectorXd rhs(k);
    int r = 0;
    for (int i = 0; i < total; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      A.row(r) = H.row(i);
      rhs(r) = c(i);
      ++r;
    }
    Eigen::FullPivLU<Mat> lu(A);
    if (lu.rank() < k) continue;
    const Eigen::VectorXd b = lu.solve(rhs);
    const double viol = ((G * b - g).cwiseAbs().array() - lambda).maxCoeff();
    if (viol > 1e-9) continue;
    const double val = b.cwiseAbs().sum();
    if (val < best.value) {
      best.value = val;
      best.argmin = b;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

/// Population ACVs Gamma(l) = E(x_{t-l} x_t^T), l = 0..L, of a stable VAR(d)
/// with identity innovation covariance, via the companion Lyapunov equation.
inline std::vector<Mat> var_population_acv(const std::vector<Mat>& A, int L) {
  const int p = static_cast<int>(A.front().rows());
  const int d = static_cast<int>(A.size());
  const int s = p * d;
  Mat F = Mat::Zero(s, s);
  for (int l = 0; l < d; ++l) F.block(0, l * p, p, p) = A[static_cast<std::size_t>(l)];
  if (d > 1) F.block(p, 0, p * (d - 1), p * (d - 1)) = Mat::Identity(p * (d - 1), p * (d - 1));
  Mat Q = Mat::Zero(s, s);
  Q.topLeftCorner(p, p) = Mat::Identity(p, p);
  // vec(S) = (I - F kron F)^{-1} vec(Q)
  Mat K(s * s, s * s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) K.block(i * s, j * s, s, s) = F(i, j) * F;
  const Eigen::VectorXd vecS =
      (Mat::Identity(s * s, s * s) - K).fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(Q.data(), s * s));
  const Mat S = Eigen::Map<const Mat>(vecS.data(), s, s);
  // C(h) = E(x_t x_{t-h}^T): C(h) = sum_k A_k C(h-k), with C(-h) = C(h)^T.
  std::vector<Mat> C(static_cast<std::size_t>(std::max(L, d) + 1));
  for (int h = 0; h < d; ++h) C[static_cast<std::size_t>(h)] = S.block(0, h * p, p, p);
  for (int h = d; h <= std::max(L, d); ++h) {
    Mat acc = Mat::Zero(p, p);
    for (int k2 = 1; k2 <= d; ++k2) {
      const int lag = h - k2;
      const Mat Ck = lag >= 0 ? C[static_cast<std::size_t>(lag)] : Mat(C[static_cast<std::size_t>(-lag)].transpose());
      acc += A[static_cast<std::size_t>(k2 - 1)] * Ck;
    }
    C[static_cast<std::size_t>(h)] = acc;
  }
  // Gamma(l) = E(x_{t-l} x_t^T) = C(l)^T
  std::vector<Mat> out;
  for (int l = 0; l <= L; ++l) out.push_back(C[static_cast<std::size_t>(l)].transpose());
  return out;
}

}  // namespace oracle
