#pragma once

// The model metric on a punctured polydisk chart and its diagnostics.
//
// In chart coordinates z_i = r_i e^{i theta_i}, L_i = -log r_i > 1, the model
// is
//     H0(theta, L) = U * diag_j( prod_i L_i^{a_i^j} ) * U^H,
//     U = exp( (1/(2 pi)) sum_i theta_i N_i ),
// where the N_i are the commuting nilpotents in the grading basis and a_i^j
// are the diagonal weights of Y_i. The Gram matrix carries the full exponents
// a_i^j; monodromy equivariance is H0(theta_i + 2 pi) = gamma_i o H0(theta_i)
// with gamma_i = exp(N_i).
//
// Flat transport around loop i acts on section coordinates by v -> gamma_i^{-T} v,
// so the section-level operator associated with N_i is Nsec_i = -N_i^T; it
// lowers Y_i-weights by two.

#include <vector>

#include "nilflow/lie.hpp"
#include "nilflow/numlin.hpp"
#include "nilflow/psym.hpp"

namespace nilflow::h0 {

struct ChartModel {
  int r = 0, k = 0;
  // exact data in the grading basis
  std::vector<RatMat> N_exact, Y_exact, gamma_exact;
  // float mirrors
  std::vector<CMat> N, Nsec, gamma;
  std::vector<Eigen::VectorXd> Yw;  // diagonal weights of Y_i

  static ChartModel from_grading(const lie::CommutingGrading& g);
  // Direct construction for experiments; light validation only.
  static ChartModel direct(const std::vector<RatMat>& n, const std::vector<RatMat>& y);
};

struct ChartPoint {
  std::vector<double> theta;
  std::vector<double> L;  // used entries must exceed 1

  // From raw chart coordinates z_i = r_i e^{i theta_i}; requires |z_i| < 1/e.
  static ChartPoint from_z(const std::vector<cplx>& z);
};

psym::PPoint eval_h0(const ChartModel& m, const ChartPoint& p);

// max over samples and loops of dist(H0(theta_i + 2 pi), gamma_i o H0(theta_i))
double equivariance_residual(const ChartModel& m, const std::vector<ChartPoint>& pts);

// Exact spot check of the twist identity exp((s+1)N_i) = gamma_i exp(s N_i).
bool exact_equivariance_check(const ChartModel& m, const std::vector<Rat>& svals);

// e_i(p) = L_i^2 (|d_theta_i H0|^2 + |d_L_i H0|^2) in the invariant metric,
// by Richardson-extrapolated central differences.
double transversal_energy_density(const ChartModel& m, int i, const ChartPoint& p,
                                  double step = 1e-4);

struct SweepStats {
  double mean = 0, stddev = 0, min = 0, max = 0;
};
SweepStats density_sweep(const ChartModel& m, int i, int n_theta = 20, int n_l = 20,
                         double l_lo = 10.0, double l_hi = 1000.0);

// Least-squares slope of log ||v||^2_{H0} against log L_i.
double asymptotic_exponent(const ChartModel& m, int i, const CVec& v, double l_lo = 10.0,
                           double l_hi = 1e4, int samples = 16);

// sup over samples of endo_norm(H0, Nsec_i)^2 * L_i^2 (the empirical decay
// constant).
double nilpotent_decay(const ChartModel& m, int i, const std::vector<ChartPoint>& pts);
std::vector<ChartPoint> decay_samples(const ChartModel& m, int i, int n_theta = 8, int n_l = 16,
                                      double l_lo = 10.0, double l_hi = 1e4);

// Radial (Y) and angular (N) summands of dH0 in direction i as 1-form norms
// under the cusp chart metric, plus the deviation of their recombination from
// central finite differences.
struct Dh0Parts {
  double y_part = 0, n_part = 0, recomb_residual = 0;
};
Dh0Parts dh0_parts(const ChartModel& m, int i, const ChartPoint& p, double step = 1e-4);

// For a Y_i-eigenvector v of weight a with Nsec_i v != 0, the fitted exponent
// of ||Nsec_i v||^2 must drop to a - 2.
struct NormLawVerdict {
  bool vacuous = false;
  bool pass = false;
  double slope = 0;
  double weight = 0;
};
NormLawVerdict section_norm_law(const ChartModel& m, int i, const CVec& v, double tol = 0.01);

}  // namespace nilflow::h0
