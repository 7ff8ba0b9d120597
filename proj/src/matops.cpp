#include "fbcap/matops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fbcap/errors.hpp"

namespace fbcap {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kCholeskyPivotFloor = 1e-12;

// Householder reduction of a symmetric matrix to tridiagonal form
// (diagonal d, subdiagonal e), accumulating the orthogonal similarity
// transformation in z. Classic Handbook/EISPACK tred2 scheme.
void tridiagonalize(Matrix& z, std::vector<double>& d, std::vector<double>& e) {
  const int n = z.rows();
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0;
    double scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::fabs(z(i, k));
      if (scale == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[j] = g / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z(i, j);
          e[j] = g = e[j] - hh * f;
          for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + g * z(i, k);
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (int j = 0; j < i; ++j) {
        double g = 0.0;
        for (int k = 0; k < i; ++k) g += z(i, k) * z(k, j);
        for (int k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j < i; ++j) z(j, i) = z(i, j) = 0.0;
  }
}

// Implicit-shift QL sweeps on the tridiagonal (d, e), rotating z along.
void ql_implicit(std::vector<double>& d, std::vector<double>& e, Matrix& z) {
  const int n = z.rows();
  if (n <= 1) return;
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= kEps * dd) break;
      }
      if (m != l) {
        if (iter++ == 50) throw NoConvergence("symmetric QL iteration stalled");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0;
        double c = 1.0;
        double p = 0.0;
        bool underflow = false;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

// Reduction to upper Hessenberg form by stabilized elementary similarity
// transformations (pivoted Gaussian elimination). Eigenvalues only, so the
// transformation is not accumulated.
void hessenberg(Matrix& a) {
  const int n = a.rows();
  for (int m = 1; m < n - 1; ++m) {
    double x = 0.0;
    int piv = m;
    for (int j = m; j < n; ++j) {
      if (std::fabs(a(j, m - 1)) > std::fabs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    }
    if (piv != m) {
      for (int j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
      for (int j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
    }
    if (x != 0.0) {
      for (int i = m + 1; i < n; ++i) {
        double y = a(i, m - 1);
        if (y != 0.0) {
          y /= x;
          a(i, m - 1) = 0.0;
          for (int j = m; j < n; ++j) a(i, j) -= y * a(m, j);
          for (int j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
      }
    }
  }
  for (int i = 2; i < n; ++i)
    for (int j = 0; j <= i - 2; ++j) a(i, j) = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix; returns the
// eigenvalues. Exceptional shifts every ten stalled iterations.
std::vector<std::complex<double>> hessenberg_qr(Matrix& a) {
  const int n = a.rows();
  std::vector<std::complex<double>> w(n);
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::fabs(a(i, j));
  if (anorm == 0.0) return w;
  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::fabs(a(l - 1, l - 1)) + std::fabs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::fabs(a(l, l - 1)) <= kEps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        w[nn--] = x + t;
      } else {
        double y = a(nn - 1, nn - 1);
        double ww = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          double p = 0.5 * (y - x);
          const double q = p * p + ww;
          double z = std::sqrt(std::fabs(q));
          x += t;
          if (q >= 0.0) {
            z = p + std::copysign(z, p);
            w[nn - 1] = w[nn] = x + z;
            if (z != 0.0) w[nn] = x - ww / z;
          } else {
            w[nn] = {x + p, -z};
            w[nn - 1] = {x + p, z};
          }
          nn -= 2;
        } else {
          if (its == 50) throw NoConvergence("QR eigenvalue iteration stalled");
          if (its != 0 && its % 10 == 0) {
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            const double s = std::fabs(a(nn, nn - 1)) + std::fabs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            ww = -0.4375 * s * s;
          }
          ++its;
          int m;
          double p = 0.0;
          double q = 0.0;
          double r = 0.0;
          for (m = nn - 2; m >= l; --m) {
            const double z = a(m, m);
            const double rr = x - z;
            const double ss = y - z;
            p = (rr * ss - ww) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - rr - ss;
            r = a(m + 2, m + 1);
            const double s = std::fabs(p) + std::fabs(q) + std::fabs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::fabs(a(m, m - 1)) * (std::fabs(q) + std::fabs(r));
            const double v =
                std::fabs(p) * (std::fabs(a(m - 1, m - 1)) + std::fabs(z) + std::fabs(a(m + 1, m + 1)));
            if (u <= kEps * v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            double xx = 0.0;
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = k != nn - 1 ? a(k + 2, k - 1) : 0.0;
              xx = std::fabs(p) + std::fabs(q) + std::fabs(r);
              if (xx != 0.0) {
                p /= xx;
                q /= xx;
                r /= xx;
              }
            }
            const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * xx;
              }
              p += s;
              x = p / s;
              y = q / s;
              const double z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                double pp = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                  pp += r * a(k + 2, j);
                  a(k + 2, j) -= pp * z;
                }
                a(k + 1, j) -= pp * y;
                a(k, j) -= pp * x;
              }
              const int mmin = std::min(nn, k + 3);
              for (int i = l; i <= mmin; ++i) {
                double pp = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                  pp += z * a(i, k + 2);
                  a(i, k + 2) -= pp * r;
                }
                a(i, k + 1) -= pp * q;
                a(i, k) -= pp;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return w;
}

void require_square(const Matrix& A, const char* op) {
  if (!A.square()) throw DimensionMismatch(std::string(op) + " requires a square matrix");
}

}  // namespace

bool try_cholesky(const Matrix& A, Matrix& L) {
  if (!A.square()) return false;
  const int n = A.rows();
  L = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    double d = A(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (d <= kCholeskyPivotFloor || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double v = 0.5 * (A(i, j) + A(j, i));
      for (int k = 0; k < j; ++k) v -= L(i, k) * L(j, k);
      L(i, j) = v / ljj;
    }
  }
  return true;
}

Matrix cholesky(const Matrix& A) {
  require_square(A, "cholesky");
  Matrix L;
  if (!try_cholesky(A, L)) throw NotPositiveDefinite("cholesky pivot below 1e-12");
  return L;
}

double logdet_pd(const Matrix& A) {
  const Matrix L = cholesky(A);
  double s = 0.0;
  for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

Matrix solve_spd(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw DimensionMismatch("solve_spd shape mismatch");
  const Matrix L = cholesky(A);
  const int n = A.rows();
  Matrix X = B;
  // forward substitution L Y = B
  for (int c = 0; c < X.cols(); ++c) {
    for (int i = 0; i < n; ++i) {
      double v = X(i, c);
      for (int k = 0; k < i; ++k) v -= L(i, k) * X(k, c);
      X(i, c) = v / L(i, i);
    }
    // back substitution L^T X = Y
    for (int i = n - 1; i >= 0; --i) {
      double v = X(i, c);
      for (int k = i + 1; k < n; ++k) v -= L(k, i) * X(k, c);
      X(i, c) = v / L(i, i);
    }
  }
  return X;
}

Matrix inverse_spd(const Matrix& A) { return solve_spd(A, Matrix::identity(A.rows())); }

SymmetricEig eig_symmetric(const Matrix& A) {
  require_square(A, "eig_symmetric");
  const int n = A.rows();
  SymmetricEig out;
  out.vectors = Matrix::identity(n);
  out.values.assign(n, 0.0);
  if (n == 0) return out;
  Matrix z = A.symmetrized();
  std::vector<double> d(n, 0.0);
  std::vector<double> e(n, 0.0);
  tridiagonalize(z, d, e);
  ql_implicit(d, e, z);
  // sort ascending, carrying eigenvectors along
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  SymmetricEig sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    sorted.values[j] = d[order[j]];
    for (int i = 0; i < n; ++i) sorted.vectors(i, j) = z(i, order[j]);
  }
  return sorted;
}

double min_eig_sym(const Matrix& A) {
  if (A.empty()) return 0.0;
  return eig_symmetric(A).values.front();
}

double max_eig_sym(const Matrix& A) {
  if (A.empty()) return 0.0;
  return eig_symmetric(A).values.back();
}

std::vector<std::complex<double>> eig_general(const Matrix& A) {
  require_square(A, "eig_general");
  if (A.rows() == 0) return {};
  Matrix h = A;
  hessenberg(h);
  return hessenberg_qr(h);
}

double spectral_radius(const Matrix& A) {
  double r = 0.0;
  for (const auto& lambda : eig_general(A)) r = std::max(r, std::abs(lambda));
  return r;
}

Svd svd(const Matrix& A) {
  const bool transposed = A.rows() < A.cols();
  Matrix U = transposed ? A.transpose() : A;
  const int rows = U.rows();
  const int cols = U.cols();
  Matrix V = Matrix::identity(cols);
  // One-sided Jacobi: rotate column pairs of U until mutually orthogonal.
  bool dirty = cols > 1;
  for (int sweep = 0; sweep < 100 && dirty; ++sweep) {
    dirty = false;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double alpha = 0.0;
        double beta = 0.0;
        double gamma = 0.0;
        for (int k = 0; k < rows; ++k) {
          alpha += U(k, p) * U(k, p);
          beta += U(k, q) * U(k, q);
          gamma += U(k, p) * U(k, q);
        }
        if (gamma == 0.0 || std::fabs(gamma) <= kEps * std::sqrt(alpha * beta)) continue;
        dirty = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int k = 0; k < rows; ++k) {
          const double up = U(k, p);
          U(k, p) = c * up - s * U(k, q);
          U(k, q) = s * up + c * U(k, q);
        }
        for (int k = 0; k < cols; ++k) {
          const double vp = V(k, p);
          V(k, p) = c * vp - s * V(k, q);
          V(k, q) = s * vp + c * V(k, q);
        }
      }
    }
  }
  if (dirty) throw NoConvergence("Jacobi SVD did not converge");
  Svd out;
  out.sigma.assign(cols, 0.0);
  for (int j = 0; j < cols; ++j) {
    double norm = 0.0;
    for (int k = 0; k < rows; ++k) norm += U(k, j) * U(k, j);
    out.sigma[j] = std::sqrt(norm);
    if (out.sigma[j] > 0.0)
      for (int k = 0; k < rows; ++k) U(k, j) /= out.sigma[j];
  }
  // order singular values descending
  std::vector<int> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return out.sigma[a] > out.sigma[b]; });
  Matrix Us(rows, cols);
  Matrix Vs(cols, cols);
  std::vector<double> sig(cols);
  for (int j = 0; j < cols; ++j) {
    sig[j] = out.sigma[order[j]];
    for (int k = 0; k < rows; ++k) Us(k, j) = U(k, order[j]);
    for (int k = 0; k < cols; ++k) Vs(k, j) = V(k, order[j]);
  }
  out.sigma = std::move(sig);
  if (transposed) {
    out.U = std::move(Vs);
    out.V = std::move(Us);
  } else {
    out.U = std::move(Us);
    out.V = std::move(Vs);
  }
  return out;
}

Matrix pinv(const Matrix& A, double tol) {
  if (A.empty()) return A.transpose();
  if (A.square() && A.asymmetry() <= 1e-12 * std::max(1.0, A.max_abs())) {
    // symmetric route keeps the pseudoinverse exactly symmetric
    const SymmetricEig eig = eig_symmetric(A);
    const int n = A.rows();
    double amax = 0.0;
    for (double v : eig.values) amax = std::max(amax, std::fabs(v));
    Matrix P(n, n);
    if (amax == 0.0) return P;
    for (int j = 0; j < n; ++j) {
      if (std::fabs(eig.values[j]) <= tol * amax) continue;
      const double w = 1.0 / eig.values[j];
      for (int i = 0; i < n; ++i)
        for (int k = i; k < n; ++k) {
          const double v = w * eig.vectors(i, j) * eig.vectors(k, j);
          P(i, k) += v;
          if (k != i) P(k, i) += v;
        }
    }
    return P;
  }
  const Svd s = svd(A);
  const int r = std::min(A.rows(), A.cols());
  Matrix P(A.cols(), A.rows());
  if (s.sigma.empty() || s.sigma[0] == 0.0) return P;
  for (int j = 0; j < r; ++j) {
    if (s.sigma[j] <= tol * s.sigma[0]) break;
    const double w = 1.0 / s.sigma[j];
    for (int i = 0; i < A.cols(); ++i)
      for (int k = 0; k < A.rows(); ++k) P(i, k) += w * s.V(i, j) * s.U(k, j);
  }
  return P;
}

int rank(const Matrix& A, double tol) {
  if (A.empty()) return 0;
  const Svd s = svd(A);
  if (s.sigma.empty() || s.sigma[0] == 0.0) return 0;
  int r = 0;
  for (double v : s.sigma)
    if (v > tol * s.sigma[0]) ++r;
  return r;
}

int rank_complex(const Matrix& re, const Matrix& im, double tol) {
  if (re.rows() != im.rows() || re.cols() != im.cols())
    throw DimensionMismatch("rank_complex parts mismatch");
  Matrix R(2 * re.rows(), 2 * re.cols());
  R.set_block(0, 0, re);
  R.set_block(0, re.cols(), -im);
  R.set_block(re.rows(), 0, im);
  R.set_block(re.rows(), re.cols(), re);
  return rank(R, tol) / 2;
}

Matrix psd_factor(const Matrix& A, double tol) {
  require_square(A, "psd_factor");
  const int n = A.rows();
  const Matrix W = A.symmetrized();
  std::vector<double> d(n);
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = W(i, i);
    dmax = std::max(dmax, d[i]);
  }
  const double threshold = tol * dmax;
  Matrix L(n, n);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int r = 0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (d[perm[i]] > d[perm[piv]]) piv = i;
    std::swap(perm[k], perm[piv]);
    const int pk = perm[k];
    if (d[pk] <= threshold || d[pk] <= 0.0) break;
    const double lkk = std::sqrt(d[pk]);
    L(pk, k) = lkk;
    for (int i = k + 1; i < n; ++i) {
      const int pi = perm[i];
      double v = W(pi, pk);
      for (int j = 0; j < k; ++j) v -= L(pi, j) * L(pk, j);
      L(pi, k) = v / lkk;
      d[pi] -= L(pi, k) * L(pi, k);
    }
    ++r;
  }
  return L.block(0, 0, n, r);
}

}  // namespace fbcap
