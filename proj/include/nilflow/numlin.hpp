#pragma once

// Dense matrix kernel. Two arithmetic modes, realized as two types:
//   RatMat  — exact rational entries, used for all Lie-algebraic work;
//   CMat    — complex double (Eigen), used for the chart/solver numerics.

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <initializer_list>
#include <optional>
#include <vector>

#include "nilflow/errors.hpp"
#include "nilflow/rational.hpp"

namespace nilflow {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Exact rational dense matrix
// ---------------------------------------------------------------------------

class RatMat {
 public:
  RatMat() = default;
  RatMat(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols) {}

  static RatMat identity(int n);
  static RatMat zero(int rows, int cols) { return RatMat(rows, cols); }
  // Elementary matrix E_ij (1-based would be alien here; indices are 0-based).
  static RatMat unit(int n, int i, int j);
  static RatMat from_int_rows(const std::vector<std::vector<long>>& rows);
  static RatMat diag(const std::vector<Rat>& d);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  Rat& operator()(int i, int j) { return a_[size_t(i) * cols_ + j]; }
  const Rat& operator()(int i, int j) const { return a_[size_t(i) * cols_ + j]; }

  RatMat operator+(const RatMat& o) const;
  RatMat operator-(const RatMat& o) const;
  RatMat operator-() const;
  RatMat operator*(const RatMat& o) const;
  RatMat operator*(const Rat& s) const;
  RatMat& operator+=(const RatMat& o);
  RatMat& operator-=(const RatMat& o);
  bool operator==(const RatMat& o) const;
  bool operator!=(const RatMat& o) const { return !(*this == o); }

  RatMat transpose() const;
  Rat trace() const;
  bool is_zero() const;
  bool is_diagonal() const;

  std::vector<Rat> diagonal() const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<Rat> a_;
};

inline RatMat operator*(const Rat& s, const RatMat& m) { return m * s; }

RatMat comm(const RatMat& a, const RatMat& b);  // ab - ba
RatMat mat_pow(const RatMat& a, int e);
Rat det(const RatMat& a);
RatMat inverse(const RatMat& a);  // throws SingularMatrixError
bool is_nilpotent(const RatMat& a);

// vec(A) in row-major order; index (i,j) -> i*cols + j.
std::vector<Rat> vec(const RatMat& a);
RatMat unvec(const std::vector<Rat>& v, int rows, int cols);

// Matrix of ad(N): vec([N, X]) = ad_matrix(N) * vec(X).
RatMat ad_matrix(const RatMat& n);

// ---------------------------------------------------------------------------
// Exact linear solves
// ---------------------------------------------------------------------------

// Reduced row echelon form with a row-operation transcript: T * A = R.
struct Rref {
  RatMat R;
  RatMat T;
  std::vector<int> pivot_cols;
  int rank = 0;
};
Rref rref(const RatMat& a);

// Canonical nullspace basis (one vector per free column, leading entry 1).
std::vector<std::vector<Rat>> nullspace_basis(const RatMat& a);

// One particular solution plus nullspace basis, or an infeasibility
// certificate: a row vector y with y^T A = 0 and y^T b != 0.
struct LinearSolution {
  bool feasible = false;
  std::vector<Rat> particular;
  std::vector<std::vector<Rat>> nullspace;
  std::vector<Rat> witness;
  Rat witness_residual;
};
LinearSolution solve_linear(const RatMat& a, const std::vector<Rat>& b);

// ---------------------------------------------------------------------------
// Structured exponentials / logarithms (exact mode)
// ---------------------------------------------------------------------------

// Terminating exponential series; requires N nilpotent.
RatMat expm_nilpotent(const RatMat& n);

// Terminating log series sum (-1)^{j+1} (U-I)^j / j; requires (U-I)^r = 0.
RatMat logm_unipotent(const RatMat& u);

// ---------------------------------------------------------------------------
// Float kernels
// ---------------------------------------------------------------------------

CMat to_cmat(const RatMat& a);
Eigen::MatrixXd to_dmat(const RatMat& a);

bool is_hermitian(const CMat& m, double tol = 1e-12);
CMat hermitize(const CMat& m);  // (M + M^H)/2

// f applied through a Hermitian eigendecomposition.
CMat hermitian_apply(const CMat& h, const std::function<double(double)>& f);

// Matrix exponential: spectral route for Hermitian input, scaling-and-squaring
// Taylor otherwise (relative accuracy ~1e-13 at the sizes used here).
CMat expm(const CMat& m);

// Terminating series for (numerically) nilpotent input of known order.
CMat expm_nilpotent(const CMat& n);

CMat logm_unipotent(const CMat& u, double tol = 1e-10);

// Generalized eigenvalues of the pencil (H2, H1) for Hermitian positive
// definite H1, H2: the eigenvalues of H1^{-1} H2, all positive, ascending.
// Invariant under simultaneous congruence H_i -> g H_i g^H.
std::vector<double> hpd_geig(const CMat& h1, const CMat& h2);

double max_abs(const CMat& m);

}  // namespace nilflow
