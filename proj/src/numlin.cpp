#include "nilflow/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nilflow {

// ---------------------------------------------------------------------------
// RatMat basics
// ---------------------------------------------------------------------------

RatMat RatMat::identity(int n) {
  RatMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

RatMat RatMat::unit(int n, int i, int j) {
  RatMat m(n, n);
  m(i, j) = 1;
  return m;
}

RatMat RatMat::from_int_rows(const std::vector<std::vector<long>>& rows) {
  if (rows.empty()) throw DimensionError("from_int_rows: empty");
  RatMat m(int(rows.size()), int(rows[0].size()));
  for (int i = 0; i < m.rows(); ++i) {
    if (int(rows[i].size()) != m.cols()) throw DimensionError("from_int_rows: ragged rows");
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

RatMat RatMat::diag(const std::vector<Rat>& d) {
  RatMat m(int(d.size()), int(d.size()));
  for (int i = 0; i < m.rows(); ++i) m(i, i) = d[i];
  return m;
}

static void check_same_shape(const RatMat& a, const RatMat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch");
}

RatMat RatMat::operator+(const RatMat& o) const {
  check_same_shape(*this, o, "add");
  RatMat m(rows_, cols_);
  for (size_t t = 0; t < a_.size(); ++t) m.a_[t] = a_[t] + o.a_[t];
  return m;
}

RatMat RatMat::operator-(const RatMat& o) const {
  check_same_shape(*this, o, "sub");
  RatMat m(rows_, cols_);
  for (size_t t = 0; t < a_.size(); ++t) m.a_[t] = a_[t] - o.a_[t];
  return m;
}

RatMat RatMat::operator-() const {
  RatMat m(rows_, cols_);
  for (size_t t = 0; t < a_.size(); ++t) m.a_[t] = -a_[t];
  return m;
}

RatMat RatMat::operator*(const RatMat& o) const {
  if (cols_ != o.rows_) throw DimensionError("mul: inner dimension mismatch");
  RatMat m(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int l = 0; l < cols_; ++l) {
      const Rat& x = (*this)(i, l);
      if (x == 0) continue;
      for (int j = 0; j < o.cols_; ++j) {
        const Rat& y = o(l, j);
        if (y != 0) m(i, j) += x * y;
      }
    }
  return m;
}

RatMat RatMat::operator*(const Rat& s) const {
  RatMat m(rows_, cols_);
  for (size_t t = 0; t < a_.size(); ++t) m.a_[t] = a_[t] * s;
  return m;
}

RatMat& RatMat::operator+=(const RatMat& o) {
  check_same_shape(*this, o, "add");
  for (size_t t = 0; t < a_.size(); ++t) a_[t] += o.a_[t];
  return *this;
}

RatMat& RatMat::operator-=(const RatMat& o) {
  check_same_shape(*this, o, "sub");
  for (size_t t = 0; t < a_.size(); ++t) a_[t] -= o.a_[t];
  return *this;
}

bool RatMat::operator==(const RatMat& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) return false;
  for (size_t t = 0; t < a_.size(); ++t)
    if (a_[t] != o.a_[t]) return false;
  return true;
}

RatMat RatMat::transpose() const {
  RatMat m(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
  return m;
}

Rat RatMat::trace() const {
  if (!square()) throw DimensionError("trace: non-square");
  Rat t = 0;
  for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

bool RatMat::is_zero() const {
  for (const auto& x : a_)
    if (x != 0) return false;
  return true;
}

bool RatMat::is_diagonal() const {
  if (!square()) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j)
      if (i != j && (*this)(i, j) != 0) return false;
  return true;
}

std::vector<Rat> RatMat::diagonal() const {
  if (!square()) throw DimensionError("diagonal: non-square");
  std::vector<Rat> d(rows_);
  for (int i = 0; i < rows_; ++i) d[i] = (*this)(i, i);
  return d;
}

RatMat comm(const RatMat& a, const RatMat& b) { return a * b - b * a; }

RatMat mat_pow(const RatMat& a, int e) {
  if (!a.square()) throw DimensionError("mat_pow: non-square");
  RatMat p = RatMat::identity(a.rows());
  for (int t = 0; t < e; ++t) p = p * a;
  return p;
}

bool is_nilpotent(const RatMat& a) {
  if (!a.square()) return false;
  return mat_pow(a, a.rows()).is_zero();
}

std::vector<Rat> vec(const RatMat& a) {
  std::vector<Rat> v;
  v.reserve(size_t(a.rows()) * a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) v.push_back(a(i, j));
  return v;
}

RatMat unvec(const std::vector<Rat>& v, int rows, int cols) {
  if (int(v.size()) != rows * cols) throw DimensionError("unvec: size mismatch");
  RatMat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[size_t(i) * cols + j];
  return m;
}

RatMat ad_matrix(const RatMat& n) {
  if (!n.square()) throw DimensionError("ad_matrix: non-square");
  const int r = n.rows();
  RatMat m(r * r, r * r);
  // [N, E_pq] = N E_pq - E_pq N; column index of E_pq is p*r + q.
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q) {
      const int col = p * r + q;
      for (int i = 0; i < r; ++i) m(i * r + q, col) += n(i, p);
      for (int j = 0; j < r; ++j) m(p * r + j, col) -= n(q, j);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Exact elimination
// ---------------------------------------------------------------------------

Rref rref(const RatMat& a) {
  Rref out;
  out.R = a;
  out.T = RatMat::identity(a.rows());
  RatMat& R = out.R;
  RatMat& T = out.T;
  int pr = 0;
  for (int c = 0; c < a.cols() && pr < a.rows(); ++c) {
    int sel = -1;
    for (int i = pr; i < a.rows(); ++i)
      if (R(i, c) != 0) {
        sel = i;
        break;
      }
    if (sel < 0) continue;
    if (sel != pr) {
      for (int j = 0; j < a.cols(); ++j) std::swap(R(sel, j), R(pr, j));
      for (int j = 0; j < a.rows(); ++j) std::swap(T(sel, j), T(pr, j));
    }
    const Rat piv = R(pr, c);
    for (int j = 0; j < a.cols(); ++j) R(pr, j) /= piv;
    for (int j = 0; j < a.rows(); ++j) T(pr, j) /= piv;
    for (int i = 0; i < a.rows(); ++i) {
      if (i == pr || R(i, c) == 0) continue;
      const Rat f = R(i, c);
      for (int j = 0; j < a.cols(); ++j) R(i, j) -= f * R(pr, j);
      for (int j = 0; j < a.rows(); ++j) T(i, j) -= f * T(pr, j);
    }
    out.pivot_cols.push_back(c);
    ++pr;
  }
  out.rank = pr;
  return out;
}

std::vector<std::vector<Rat>> nullspace_basis(const RatMat& a) {
  Rref f = rref(a);
  std::vector<bool> is_pivot(a.cols(), false);
  for (int c : f.pivot_cols) is_pivot[c] = true;
  std::vector<std::vector<Rat>> basis;
  for (int c = 0; c < a.cols(); ++c) {
    if (is_pivot[c]) continue;
    std::vector<Rat> v(a.cols());
    v[c] = 1;
    for (int pr = 0; pr < f.rank; ++pr) v[f.pivot_cols[pr]] = -f.R(pr, c);
    basis.push_back(std::move(v));
  }
  return basis;
}

LinearSolution solve_linear(const RatMat& a, const std::vector<Rat>& b) {
  if (int(b.size()) != a.rows()) throw DimensionError("solve_linear: rhs size mismatch");
  Rref f = rref(a);
  // c = T b
  std::vector<Rat> c(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    Rat s = 0;
    for (int j = 0; j < a.rows(); ++j)
      if (f.T(i, j) != 0 && b[j] != 0) s += f.T(i, j) * b[j];
    c[i] = s;
  }
  LinearSolution out;
  for (int i = f.rank; i < a.rows(); ++i) {
    if (c[i] != 0) {
      out.feasible = false;
      out.witness.assign(a.rows(), Rat(0));
      for (int j = 0; j < a.rows(); ++j) out.witness[j] = f.T(i, j);
      out.witness_residual = c[i];
      return out;
    }
  }
  out.feasible = true;
  out.particular.assign(a.cols(), Rat(0));
  for (int pr = 0; pr < f.rank; ++pr) out.particular[f.pivot_cols[pr]] = c[pr];
  out.nullspace = nullspace_basis(a);
  return out;
}

Rat det(const RatMat& a) {
  if (!a.square()) throw DimensionError("det: non-square");
  RatMat m = a;
  const int n = a.rows();
  Rat d = 1;
  for (int c = 0; c < n; ++c) {
    int sel = -1;
    for (int i = c; i < n; ++i)
      if (m(i, c) != 0) {
        sel = i;
        break;
      }
    if (sel < 0) return Rat(0);
    if (sel != c) {
      for (int j = 0; j < n; ++j) std::swap(m(sel, j), m(c, j));
      d = -d;
    }
    d *= m(c, c);
    const Rat piv = m(c, c);
    for (int i = c + 1; i < n; ++i) {
      if (m(i, c) == 0) continue;
      const Rat f = m(i, c) / piv;
      for (int j = c; j < n; ++j) m(i, j) -= f * m(c, j);
    }
  }
  return d;
}

RatMat inverse(const RatMat& a) {
  if (!a.square()) throw DimensionError("inverse: non-square");
  Rref f = rref(a);
  if (f.rank != a.rows()) throw SingularMatrixError("inverse: singular matrix");
  return f.T;
}

// ---------------------------------------------------------------------------
// Structured exp/log, exact mode
// ---------------------------------------------------------------------------

RatMat expm_nilpotent(const RatMat& n) {
  if (!n.square()) throw DimensionError("expm_nilpotent: non-square");
  const int r = n.rows();
  RatMat sum = RatMat::identity(r);
  RatMat term = RatMat::identity(r);
  for (int j = 1; j <= r; ++j) {
    term = term * n * rat(1, j);  // N^j / j!
    if (term.is_zero()) break;
    if (j == r) throw NotNilpotentError("expm_nilpotent: input is not nilpotent");
    sum += term;
  }
  return sum;
}

RatMat logm_unipotent(const RatMat& u) {
  if (!u.square()) throw DimensionError("logm_unipotent: non-square");
  const int r = u.rows();
  RatMat x = u - RatMat::identity(r);
  if (!mat_pow(x, r).is_zero())
    throw NotUnipotentError("logm_unipotent: (U - I) is not nilpotent");
  RatMat sum(r, r);
  RatMat p = RatMat::identity(r);
  for (int j = 1; j < r; ++j) {
    p = p * x;
    if (p.is_zero()) break;
    sum += p * rat((j % 2 == 1) ? 1 : -1, j);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Float kernels
// ---------------------------------------------------------------------------

CMat to_cmat(const RatMat& a) {
  CMat m(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = cplx(to_double(a(i, j)), 0.0);
  return m;
}

Eigen::MatrixXd to_dmat(const RatMat& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m(i, j) = to_double(a(i, j));
  return m;
}

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const CMat& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.adjoint()) <= tol * (1.0 + max_abs(m));
}

CMat hermitize(const CMat& m) { return 0.5 * (m + m.adjoint()); }

CMat hermitian_apply(const CMat& h, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(h));
  if (es.info() != Eigen::Success)
    throw Error("hermitian_apply: eigensolver failed");
  Eigen::VectorXd w = es.eigenvalues();
  for (int i = 0; i < w.size(); ++i) w[i] = f(w[i]);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

CMat expm_nilpotent(const CMat& n) {
  if (n.rows() != n.cols()) throw DimensionError("expm_nilpotent: non-square");
  const int r = int(n.rows());
  CMat sum = CMat::Identity(r, r);
  CMat term = CMat::Identity(r, r);
  for (int j = 1; j < r; ++j) {
    term = (term * n) / double(j);
    sum += term;
  }
  return sum;
}

static CMat expm_taylor_ss(const CMat& m) {
  const int r = int(m.rows());
  double nrm = m.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int s = 0;
  while (nrm > 0.25) {
    nrm *= 0.5;
    ++s;
  }
  const CMat a = m / std::pow(2.0, s);
  CMat sum = CMat::Identity(r, r);
  CMat term = CMat::Identity(r, r);
  for (int j = 1; j <= 30; ++j) {
    term = (term * a) / double(j);
    sum += term;
    if (max_abs(term) < 1e-18 * max_abs(sum)) break;
  }
  for (int t = 0; t < s; ++t) sum = sum * sum;
  return sum;
}

CMat expm(const CMat& m) {
  if (m.rows() != m.cols()) throw DimensionError("expm: non-square");
  if (is_hermitian(m))
    return hermitian_apply(m, [](double x) { return std::exp(x); });
  return expm_taylor_ss(m);
}

CMat logm_unipotent(const CMat& u, double tol) {
  if (u.rows() != u.cols()) throw DimensionError("logm_unipotent: non-square");
  const int r = int(u.rows());
  const CMat x = u - CMat::Identity(r, r);
  CMat p = x;
  for (int j = 1; j < r; ++j) p = p * x;
  const double scale = std::pow(1.0 + max_abs(x), r);
  if (max_abs(p) > tol * scale)
    throw NotUnipotentError("logm_unipotent: (U - I)^r does not vanish");
  CMat sum = CMat::Zero(r, r);
  CMat q = CMat::Identity(r, r);
  for (int j = 1; j < r; ++j) {
    q = q * x;
    sum += ((j % 2 == 1) ? 1.0 : -1.0) / double(j) * q;
  }
  return sum;
}

std::vector<double> hpd_geig(const CMat& h1, const CMat& h2) {
  if (h1.rows() != h1.cols() || h2.rows() != h2.cols() || h1.rows() != h2.rows())
    throw DimensionError("hpd_geig: shape mismatch");
  Eigen::LLT<CMat> llt(hermitize(h1));
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("hpd_geig: first argument not positive definite");
  const CMat l = llt.matrixL();
  const CMat linv = l.inverse();
  const CMat b = hermitize(linv * hermitize(h2) * linv.adjoint());
  Eigen::SelfAdjointEigenSolver<CMat> es(b);
  if (es.info() != Eigen::Success) throw Error("hpd_geig: eigensolver failed");
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  for (double v : out)
    if (!(v > 0))
      throw NotPositiveDefiniteError("hpd_geig: second argument not positive definite");
  return out;  // Eigen returns ascending order
}

}  // namespace nilflow
