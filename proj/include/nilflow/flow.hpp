#pragma once

// Discrete equivariant harmonic-map relaxation on a monodromy-twisted half
// cylinder (the conformal model of a punctured disk), with Dirichlet rows at
// the bottom (y = alpha) and top (y = ymax), plus the scalar 5-point Laplace
// problems used for comparison: closed-form separable solutions, the discrete
// maximum principle, and the cut-off inequality.

#include <vector>

#include "nilflow/h0.hpp"
#include "nilflow/numlin.hpp"
#include "nilflow/psym.hpp"

namespace nilflow::flow {

struct HalfCylinderGrid {
  double alpha = 2.0;
  double ymax = 8.0;
  int nx = 64, ny = 64;

  HalfCylinderGrid(double alpha_, double ymax_, int nx_, int ny_);

  double hx() const;
  double hy() const { return (ymax - alpha) / (ny - 1); }
  double x(int ix) const { return hx() * ix; }
  double y(int iy) const { return alpha + hy() * iy; }
  int nodes() const { return nx * ny; }
};

// Positive definite values on the fundamental domain x in [0, 2 pi); the
// virtual +x neighbor of column nx-1 is the twisted read gamma o value(0, iy).
class EquivariantField {
 public:
  EquivariantField(const HalfCylinderGrid& g, CMat twist, int r);

  const HalfCylinderGrid& grid() const { return grid_; }
  int r() const { return r_; }

  CMat& value(int ix, int iy) { return v_[size_t(iy) * grid_.nx + ix]; }
  const CMat& value(int ix, int iy) const { return v_[size_t(iy) * grid_.nx + ix]; }

  CMat east(int ix, int iy) const;  // +x neighbor, twisted through the seam
  CMat west(int ix, int iy) const;  // -x neighbor

  const CMat& twist() const { return twist_; }
  const CMat& twist_inv() const { return twist_inv_; }

 private:
  HalfCylinderGrid grid_;
  CMat twist_, twist_inv_;
  int r_;
  std::vector<CMat> v_;
};

enum class SweepOrder { RedBlack, Lexicographic, ReverseLexicographic };

struct RelaxOptions {
  double omega = 0.8;       // damping of the nodal step
  double tol = 1e-8;        // max nodal geodesic movement per sweep
  long max_sweeps = 100000;
  SweepOrder order = SweepOrder::RedBlack;
  int threads = 1;          // >1 only valid with RedBlack ordering
  int energy_every = 0;     // 0: record first/last only
};

struct RelaxResult {
  bool converged = false;
  long sweeps = 0;
  double final_movement = 0;
  std::vector<double> energy_history;
};

// Harmonic gauge of a one-puncture model at (theta, L): the chart model with
// its vertical Gram factor rescaled to (L/2pi)^Y. This is the unique
// gamma-equivariant representative that is harmonic on the flat cylinder; it
// sits at the constant geodesic distance log(2pi) sqrt(tr Y^2) from the chart
// gauge, so every boundedness statement transfers verbatim. All solver
// comparisons (init_field, seam_residual, sup_dist_to_model) use this gauge.
CMat model_value(const h0::ChartModel& m, double theta, double l);

// Samples the model's harmonic gauge: node (ix, iy) holds the value at
// (theta = x, L = y).
EquivariantField init_field(const h0::ChartModel& model, const HalfCylinderGrid& g);

// Damped nodal Karcher-mean sweeps (weights 1/hx^2, 1/hy^2); rows 0 and ny-1
// stay fixed. Non-convergence is reported, not thrown: the best iterate
// remains in the field.
RelaxResult relax(EquivariantField& f, const RelaxOptions& opt);

// (1/2) sum over edges of dist^2 with the dual weights hy/hx resp. hx/hy.
double discrete_energy(const EquivariantField& f);
double discrete_energy_band(const EquivariantField& f, double y0, double y1);

// Max interior norm of the weighted neighbor log-mean (the relax step field).
double tension_residual(const EquivariantField& f);

// Replaces the bottom Dirichlet row by geodesic bumps of size eps * |sin x|
// (vanishing at the seam, so the twisted contract is undisturbed).
void bump_bottom_row(EquivariantField& f, const h0::ChartModel& model, double eps);

// max_iy dist(H0(2 pi, y), gamma o field(0, iy)) — zero for sampled fields.
double seam_residual(const EquivariantField& f, const h0::ChartModel& model);

struct SupDistReport {
  double interior_sup = 0;
  int arg_ix = -1, arg_iy = -1;
  double boundary_sup = 0;
  bool max_principle = false;  // interior <= boundary * (1 + slack) + abs_tol
};
SupDistReport sup_dist_to_model(const EquivariantField& f, const h0::ChartModel& model,
                                double slack = 0.02, double abs_tol = 1e-6);

struct ExhaustionOptions {
  double alpha = 2.0;
  int nx = 24;
  double hy = 0.25;
  double band = 4.0;  // comparison band [alpha, alpha + band]
  RelaxOptions relax;
};

struct ExhaustionStage {
  double ymax = 0;
  int ny = 0;
  RelaxResult result;
  double energy = 0;       // of the relaxed field
  double init_energy = 0;  // of the sampled model on the same truncation
  double gap_prev_band = 0;  // sup dist to the previous stage on the band
};

// Dirichlet problems on growing truncations, top row clamped to the model,
// each stage warm-started from the previous one.
std::vector<ExhaustionStage> exhaustion_solve(const h0::ChartModel& model,
                                              const std::vector<double>& ymax_schedule,
                                              const ExhaustionOptions& opt);

// ---------------------------------------------------------------------------
// Scalar problems
// ---------------------------------------------------------------------------

struct ScalarField {
  HalfCylinderGrid grid;
  std::vector<double> u;

  explicit ScalarField(const HalfCylinderGrid& g) : grid(g), u(size_t(g.nodes()), 0.0) {}
  double& at(int ix, int iy) { return u[size_t(iy) * grid.nx + ix]; }
  double at(int ix, int iy) const { return u[size_t(iy) * grid.nx + ix]; }
};

// 5-point discrete Laplace solve with Dirichlet rows g0 (y = alpha) and
// g1 (y = ymax), periodic in x.
ScalarField scalar_harmonic_solve(const HalfCylinderGrid& g, const std::vector<double>& g0,
                                  const std::vector<double>& g1);

double scalar_laplace_residual(const ScalarField& f);
double scalar_band_sup(const ScalarField& f, double y0, double y1);

struct CutoffReport {
  double lhs = 0, rhs = 0, ratio = 0;
};

// Both integrals of the cut-off estimate with the piecewise-linear profile
// psi = 1 for y <= r, 0 for y >= r + rho. Requires u discrete-harmonic with
// vanishing bottom row and r + rho <= ymax.
CutoffReport cutoff_inequality_check(const ScalarField& f, double r, double rho);

}  // namespace nilflow::flow
