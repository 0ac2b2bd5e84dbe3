#pragma once

// Geometry of the space of positive definite Hermitian matrices with
// determinant one: congruence action, invariant metric tr(H^{-1}A H^{-1}B),
// exponential/logarithm maps, geodesic distance, endomorphism and section
// norms.

#include "nilflow/numlin.hpp"

namespace nilflow::psym {

class PPoint {
 public:
  // Validates Hermitian positive definiteness and renormalizes to det 1.
  explicit PPoint(const CMat& h);
  // No validation; for internal kernels that maintain the invariants.
  static PPoint trusted(CMat h);

  const CMat& mat() const { return h_; }
  int r() const { return int(h_.rows()); }

 private:
  PPoint() = default;
  CMat h_;
};

struct PTangent {
  PTangent(const PPoint& base_, const CMat& a);  // Hermitian, tr(H^{-1}A) ~ 0
  PPoint base;
  CMat A;
};

// g H g^H, renormalized against determinant drift. Requires det g = 1.
PPoint act(const CMat& g, const PPoint& h);

double riem_inner(const PPoint& h, const PTangent& a, const PTangent& b);

PPoint exp_map(const PPoint& h, const PTangent& a);
PTangent log_map(const PPoint& h, const PPoint& k);

// sqrt(sum_i log^2 lambda_i) over the generalized eigenvalues of (h2, h1).
double dist(const PPoint& h1, const PPoint& h2);

// Hilbert-Schmidt norm of the endomorphism M in an H-orthonormal frame:
// sqrt(tr(H^{-1} M^H H M)).
double endo_norm(const PPoint& h, const CMat& m);

double section_norm(const PPoint& h, const CVec& v);

namespace detail {

// Raw kernels on plain matrices. Inputs are assumed Hermitian (positive
// definite where required); a closed-form 2x2 spectral path keeps the grid
// solvers fast.
void herm_sqrt_invsqrt(const CMat& h, CMat& s, CMat& si);
CMat herm_exp(const CMat& a);
CMat herm_log(const CMat& w);

CMat renorm_det(const CMat& h);
CMat act_raw(const CMat& g, const CMat& h);
CMat exp_map_raw(const CMat& h, const CMat& a);
CMat log_map_raw(const CMat& h, const CMat& k);
double dist_raw(const CMat& h1, const CMat& h2);
double riem_raw(const CMat& h, const CMat& a, const CMat& b);
double norm_at(const CMat& h, const CMat& a);
double endo_norm_raw(const CMat& h, const CMat& m);

}  // namespace detail

}  // namespace nilflow::psym
