#ifndef PATCHSIS_LINALG_HPP
#define PATCHSIS_LINALG_HPP

#include <array>
#include <complex>
#include <stdexcept>
#include <vector>

namespace patchsis {

/// Dense 4x4 real matrix, row major.
struct Mat4 {
  std::array<double, 16> a{};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(4 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(4 * i + j)]; }
  static Mat4 identity();
};

/// Solves A x = b in place for n <= 4 (row-major a, leading dimension n).
/// Returns false when a pivot vanishes.
bool lu_solve(double* a, double* b, int n);

/// 1-norm condition estimate via the explicit inverse (n <= 4).
/// Returns +inf for singular input.
double condition_1norm(const double* a, int n);

class EigenNoConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenvalues of a real dense n x n matrix (n <= 4): balancing,
/// Householder reduction to Hessenberg form, then Francis double-shift QR.
/// Throws EigenNoConvergence when the sweep cap is exhausted.
std::vector<std::complex<double>> dense_eigenvalues(const double* a, int n,
                                                    int max_sweeps = 500);

/// Monic characteristic polynomial of an n x n matrix via Faddeev-LeVerrier:
/// det(xI - A) = x^n + c[0] x^(n-1) + ... + c[n-1].
std::vector<double> characteristic_polynomial(const double* a, int n);

/// Roots of the monic cubic x^3 + a2 x^2 + a1 x + a0 (companion eigenvalues).
std::array<std::complex<double>, 3> cubic_roots(double a2, double a1, double a0);

}  // namespace patchsis

#endif
