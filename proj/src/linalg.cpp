#include "patchsis/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace patchsis {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sign_with(double magnitude, double sign_source) {
  return sign_source >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Iterative row/column norm equalization with radix-2 scaling (similarity
// transform, eigenvalues preserved).
void balance(double* a, int n) {
  const double radix = 2.0, sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a[j * n + i]);
        r += std::abs(a[i * n + j]);
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double ginv = 1.0 / f;
        for (int j = 0; j < n; ++j) a[i * n + j] *= ginv;
        for (int j = 0; j < n; ++j) a[j * n + i] *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form (eigenvalues only, no
// transform accumulation). Entries below the subdiagonal are zeroed.
void hessenberg(double* a, int n) {
  for (int m = 1; m < n - 1; ++m) {
    double scale = 0.0;
    for (int i = m; i < n; ++i) scale += std::abs(a[i * n + (m - 1)]);
    if (scale == 0.0) continue;

    double h = 0.0;
    std::array<double, 4> ort{};
    for (int i = n - 1; i >= m; --i) {
      ort[static_cast<std::size_t>(i)] = a[i * n + (m - 1)] / scale;
      h += ort[static_cast<std::size_t>(i)] * ort[static_cast<std::size_t>(i)];
    }
    double g = -sign_with(std::sqrt(h), ort[static_cast<std::size_t>(m)]);
    h -= ort[static_cast<std::size_t>(m)] * g;
    ort[static_cast<std::size_t>(m)] -= g;

    for (int j = m; j < n; ++j) {
      double f = 0.0;
      for (int i = n - 1; i >= m; --i) f += ort[static_cast<std::size_t>(i)] * a[i * n + j];
      f /= h;
      for (int i = m; i < n; ++i) a[i * n + j] -= f * ort[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
      double f = 0.0;
      for (int j = n - 1; j >= m; --j) f += ort[static_cast<std::size_t>(j)] * a[i * n + j];
      f /= h;
      for (int j = m; j < n; ++j) a[i * n + j] -= f * ort[static_cast<std::size_t>(j)];
    }
    a[m * n + (m - 1)] = scale * g;
    for (int i = m + 1; i < n; ++i) a[i * n + (m - 1)] = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix (EISPACK hqr,
// eigenvalues only). Destroys a.
std::vector<std::complex<double>> hqr(double* a, int n, int max_sweeps) {
  std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a[i * n + j]);
  if (anorm == 0.0) return w;

  int sweeps = 0;
  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    for (;;) {
      for (l = nn; l >= 1; --l) {
        double s = std::abs(a[(l - 1) * n + (l - 1)]) + std::abs(a[l * n + l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l * n + (l - 1)]) <= kEps * s) {
          a[l * n + (l - 1)] = 0.0;
          break;
        }
      }
      double x = a[nn * n + nn];
      if (l == nn) {
        w[static_cast<std::size_t>(nn--)] = x + t;
        break;
      }
      double y = a[(nn - 1) * n + (nn - 1)];
      double ww = a[nn * n + (nn - 1)] * a[(nn - 1) * n + nn];
      if (l == nn - 1) {
        double p = 0.5 * (y - x);
        double q = p * p + ww;
        double z = std::sqrt(std::abs(q));
        x += t;
        if (q >= 0.0) {
          z = p + sign_with(z, p);
          w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
          if (z != 0.0) w[static_cast<std::size_t>(nn)] = x - ww / z;
        } else {
          w[static_cast<std::size_t>(nn)] = std::complex<double>(x + p, -z);
          w[static_cast<std::size_t>(nn - 1)] = std::conj(w[static_cast<std::size_t>(nn)]);
        }
        nn -= 2;
        break;
      }
      if (++sweeps > max_sweeps)
        throw EigenNoConvergence("eigenvalue QR iteration did not converge");
      if (its == 10 || its == 20) {
        t += x;
        for (int i = 0; i <= nn; ++i) a[i * n + i] -= x;
        double s = std::abs(a[nn * n + (nn - 1)]) + std::abs(a[(nn - 1) * n + (nn - 2)]);
        y = x = 0.75 * s;
        ww = -0.4375 * s * s;
      }
      ++its;
      int m;
      double p = 0.0, q = 0.0, r = 0.0;
      for (m = nn - 2; m >= l; --m) {
        double z = a[m * n + m];
        double rr = x - z;
        double ss = y - z;
        p = (rr * ss - ww) / a[(m + 1) * n + m] + a[m * n + (m + 1)];
        q = a[(m + 1) * n + (m + 1)] - z - rr - ss;
        r = a[(m + 2) * n + (m + 1)];
        double sc = std::abs(p) + std::abs(q) + std::abs(r);
        p /= sc;
        q /= sc;
        r /= sc;
        if (m == l) break;
        double u = std::abs(a[m * n + (m - 1)]) * (std::abs(q) + std::abs(r));
        double v = std::abs(p) * (std::abs(a[(m - 1) * n + (m - 1)]) + std::abs(z) +
                                  std::abs(a[(m + 1) * n + (m + 1)]));
        if (u <= kEps * v) break;
      }
      for (int i = m + 2; i <= nn; ++i) {
        a[i * n + (i - 2)] = 0.0;
        if (i > m + 2) a[i * n + (i - 3)] = 0.0;
      }
      for (int k = m; k <= nn - 1; ++k) {
        double col_scale = 1.0;
        if (k != m) {
          p = a[k * n + (k - 1)];
          q = a[(k + 1) * n + (k - 1)];
          r = (k + 1 != nn) ? a[(k + 2) * n + (k - 1)] : 0.0;
          col_scale = std::abs(p) + std::abs(q) + std::abs(r);
          if (col_scale != 0.0) {
            p /= col_scale;
            q /= col_scale;
            r /= col_scale;
          }
        }
        double s = sign_with(std::sqrt(p * p + q * q + r * r), p);
        if (s == 0.0) continue;
        if (k == m) {
          if (l != m) a[k * n + (k - 1)] = -a[k * n + (k - 1)];
        } else {
          a[k * n + (k - 1)] = -s * col_scale;
        }
        p += s;
        double x2 = p / s, y2 = q / s, z2 = r / s;
        q /= p;
        r /= p;
        for (int j = k; j <= nn; ++j) {
          double pp = a[k * n + j] + q * a[(k + 1) * n + j];
          if (k + 1 != nn) {
            pp += r * a[(k + 2) * n + j];
            a[(k + 2) * n + j] -= pp * z2;
          }
          a[(k + 1) * n + j] -= pp * y2;
          a[k * n + j] -= pp * x2;
        }
        int mmin = std::min(nn, k + 3);
        for (int i = l; i <= mmin; ++i) {
          double pp = x2 * a[i * n + k] + y2 * a[i * n + (k + 1)];
          if (k + 1 != nn) {
            pp += z2 * a[i * n + (k + 2)];
            a[i * n + (k + 2)] -= pp * r;
          }
          a[i * n + (k + 1)] -= pp * q;
          a[i * n + k] -= pp;
        }
      }
    }
  }
  return w;
}

}  // namespace

Mat4 Mat4::identity() {
  Mat4 m;
  for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
  return m;
}

bool lu_solve(double* a, double* b, int n) {
  std::array<int, 4> piv{};
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[p * n + k])) p = i;
    if (a[p * n + k] == 0.0) return false;
    piv[static_cast<std::size_t>(k)] = p;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      std::swap(b[k], b[p]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a[i * n + k] / a[k * n + k];
      a[i * n + k] = f;
      for (int j = k + 1; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
    b[i] = s / a[i * n + i];
  }
  return true;
}

double condition_1norm(const double* a, int n) {
  // Explicit inverse by Gauss-Jordan; fine at n <= 4.
  std::array<double, 16> m{}, inv{};
  for (int i = 0; i < n * n; ++i) m[static_cast<std::size_t>(i)] = a[i];
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = 1.0;

  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m[static_cast<std::size_t>(i * n + k)]) >
          std::abs(m[static_cast<std::size_t>(p * n + k)]))
        p = i;
    if (m[static_cast<std::size_t>(p * n + k)] == 0.0)
      return std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      std::swap(m[static_cast<std::size_t>(k * n + j)], m[static_cast<std::size_t>(p * n + j)]);
      std::swap(inv[static_cast<std::size_t>(k * n + j)], inv[static_cast<std::size_t>(p * n + j)]);
    }
    const double d = m[static_cast<std::size_t>(k * n + k)];
    for (int j = 0; j < n; ++j) {
      m[static_cast<std::size_t>(k * n + j)] /= d;
      inv[static_cast<std::size_t>(k * n + j)] /= d;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      const double f = m[static_cast<std::size_t>(i * n + k)];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        m[static_cast<std::size_t>(i * n + j)] -= f * m[static_cast<std::size_t>(k * n + j)];
        inv[static_cast<std::size_t>(i * n + j)] -= f * inv[static_cast<std::size_t>(k * n + j)];
      }
    }
  }
  auto norm1 = [n](const double* x) {
    double best = 0.0;
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += std::abs(x[i * n + j]);
      best = std::max(best, s);
    }
    return best;
  };
  return norm1(a) * norm1(inv.data());
}

std::vector<std::complex<double>> dense_eigenvalues(const double* a, int n,
                                                    int max_sweeps) {
  std::array<double, 16> work{};
  for (int i = 0; i < n * n; ++i) work[static_cast<std::size_t>(i)] = a[i];
  balance(work.data(), n);
  hessenberg(work.data(), n);
  return hqr(work.data(), n, max_sweeps);
}

std::vector<double> characteristic_polynomial(const double* a, int n) {
  // Faddeev-LeVerrier: M_1 = A, c_k = -tr(M_k)/k, M_{k+1} = A (M_k + c_k I).
  std::array<double, 16> m{}, next{};
  std::vector<double> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n * n; ++i) m[static_cast<std::size_t>(i)] = a[i];
  for (int k = 1; k <= n; ++k) {
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += m[static_cast<std::size_t>(i * n + i)];
    const double ck = -tr / k;
    c[static_cast<std::size_t>(k - 1)] = ck;
    if (k == n) break;
    std::array<double, 16> shifted = m;
    for (int i = 0; i < n; ++i) shifted[static_cast<std::size_t>(i * n + i)] += ck;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += a[i * n + l] * shifted[static_cast<std::size_t>(l * n + j)];
        next[static_cast<std::size_t>(i * n + j)] = s;
      }
    m = next;
  }
  return c;
}

std::array<std::complex<double>, 3> cubic_roots(double a2, double a1, double a0) {
  const double companion[9] = {0.0, 0.0, -a0,   //
                               1.0, 0.0, -a1,   //
                               0.0, 1.0, -a2};
  const auto ev = dense_eigenvalues(companion, 3);
  return {ev[0], ev[1], ev[2]};
}

}  // namespace patchsis
