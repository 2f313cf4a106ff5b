#include "sepsim/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "sepsim/errors.hpp"

namespace sep::quad {

namespace {

// Nodes = eigenvalues of the Jacobi matrix, weights = mu0 * (first component)^2.
Rule golub_welsch(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                  double mu0) {
  int n = static_cast<int>(a.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = a(i);
    if (i + 1 < n) {
      J(i, i + 1) = b(i);
      J(i + 1, i) = b(i);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    double v0 = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v0 * v0;
  }
  return r;
}

}  // namespace

Rule gauss_laguerre(int n) {
  Eigen::VectorXd a(n), b(n - 1 > 0 ? n - 1 : 0);
  for (int k = 0; k < n; ++k) a(k) = 2.0 * k + 1.0;
  for (int k = 1; k < n; ++k) b(k - 1) = static_cast<double>(k);
  return golub_welsch(a, b, 1.0);
}

Rule gauss_hermite(int n) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n - 1 > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) b(k - 1) = std::sqrt(k / 2.0);
  return golub_welsch(a, b, std::sqrt(M_PI));
}

Rule gauss_legendre(int n) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n - 1 > 0 ? n - 1 : 0);
  for (int k = 1; k < n; ++k)
    b(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  return golub_welsch(a, b, 2.0);
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol, int max_depth) {
  if (!(b > a)) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace sep::quad
