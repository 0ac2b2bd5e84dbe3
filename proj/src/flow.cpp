#include "nilflow/flow.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <thread>

namespace nilflow::flow {

using psym::detail::act_raw;
using psym::detail::dist_raw;
using psym::detail::exp_map_raw;
using psym::detail::herm_exp;
using psym::detail::herm_log;
using psym::detail::herm_sqrt_invsqrt;
using psym::detail::renorm_det;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

CMat model_value(const h0::ChartModel& m, double theta, double l) {
  // Harmonic gauge of the one-puncture model: the vertical Gram factor is
  // (L/2pi)^Y instead of L^Y. This is the unique gamma-equivariant
  // representative that is harmonic on the flat (theta, L) cylinder; it sits
  // at constant geodesic distance log(2pi) ||Y|| from the chart-gauge model,
  // which keeps every "same asymptotic behavior" statement intact while
  // making the sampled field an asymptotic fixed point of the relaxation.
  const CMat u = expm_nilpotent(CMat((theta / kTwoPi) * m.N[0]));
  Eigen::VectorXd d(m.r);
  for (int j = 0; j < m.r; ++j) d[j] = std::pow(l / kTwoPi, m.Yw[0][j]);
  return renorm_det(hermitize(u * d.asDiagonal() * u.adjoint()));
}

HalfCylinderGrid::HalfCylinderGrid(double alpha_, double ymax_, int nx_, int ny_)
    : alpha(alpha_), ymax(ymax_), nx(nx_), ny(ny_) {
  if (!(alpha > 0) || !(ymax > alpha)) throw ValidationError("grid: need 0 < alpha < ymax");
  if (nx < 8 || ny < 8) throw ValidationError("grid: need nx >= 8 and ny >= 8");
}

double HalfCylinderGrid::hx() const { return kTwoPi / nx; }

EquivariantField::EquivariantField(const HalfCylinderGrid& g, CMat twist, int r)
    : grid_(g), twist_(std::move(twist)), r_(r) {
  if (twist_.rows() != r || twist_.cols() != r)
    throw DimensionError("EquivariantField: twist shape mismatch");
  twist_inv_ = twist_.inverse();
  v_.assign(size_t(g.nodes()), CMat::Identity(r, r));
}

CMat EquivariantField::east(int ix, int iy) const {
  if (ix + 1 < grid_.nx) return value(ix + 1, iy);
  return act_raw(twist_, value(0, iy));
}

CMat EquivariantField::west(int ix, int iy) const {
  if (ix > 0) return value(ix - 1, iy);
  return act_raw(twist_inv_, value(grid_.nx - 1, iy));
}

EquivariantField init_field(const h0::ChartModel& model, const HalfCylinderGrid& g) {
  if (model.k != 1)
    throw ModelArityMismatchError("init_field: needs a one-puncture (transversal disk) model");
  if (!(g.alpha > 1.0))
    throw ValidationError("init_field: grid must sit inside the model neighborhood (alpha > 1)");
  EquivariantField f(g, model.gamma[0], model.r);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) f.value(ix, iy) = model_value(model, g.x(ix), g.y(iy));
  return f;
}

namespace {

struct NodeUpdate {
  double movement = 0;
};

NodeUpdate update_node(EquivariantField& f, int ix, int iy, double wx, double wy, double omega) {
  CMat s, si;
  herm_sqrt_invsqrt(f.value(ix, iy), s, si);
  auto lg = [&](const CMat& k) { return herm_log(hermitize(si * k * si)); };
  CMat acc = wx * (lg(f.east(ix, iy)) + lg(f.west(ix, iy))) +
             wy * (lg(f.value(ix, iy + 1)) + lg(f.value(ix, iy - 1)));
  acc /= 2.0 * (wx + wy);
  // acc is the step expressed at the identity frame: T = S acc S, and
  // |omega T|_H = omega |acc|_F.
  NodeUpdate out;
  out.movement = omega * acc.norm();
  f.value(ix, iy) = renorm_det(hermitize(s * herm_exp(omega * acc) * s));
  return out;
}

double sweep_serial(EquivariantField& f, const RelaxOptions& opt, double wx, double wy) {
  const auto& g = f.grid();
  double movement = 0;
  auto run_node = [&](int ix, int iy) {
    movement = std::max(movement, update_node(f, ix, iy, wx, wy, opt.omega).movement);
  };
  switch (opt.order) {
    case SweepOrder::RedBlack:
      for (int color = 0; color < 2; ++color)
        for (int iy = 1; iy + 1 < g.ny; ++iy)
          for (int ix = (iy + color) % 2; ix < g.nx; ix += 2) run_node(ix, iy);
      break;
    case SweepOrder::Lexicographic:
      for (int iy = 1; iy + 1 < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) run_node(ix, iy);
      break;
    case SweepOrder::ReverseLexicographic:
      for (int iy = g.ny - 2; iy >= 1; --iy)
        for (int ix = g.nx - 1; ix >= 0; --ix) run_node(ix, iy);
      break;
  }
  return movement;
}

double sweep_parallel_redblack(EquivariantField& f, const RelaxOptions& opt, double wx,
                               double wy) {
  const auto& g = f.grid();
  const int nthreads = opt.threads;
  std::vector<double> moves(nthreads, 0.0);
  for (int color = 0; color < 2; ++color) {
    std::vector<std::thread> pool;
    const int rows = g.ny - 2;
    const int chunk = (rows + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t]() {
        const int lo = 1 + t * chunk;
        const int hi = std::min(g.ny - 1, lo + chunk);
        double mv = moves[t];
        for (int iy = lo; iy < hi; ++iy)
          for (int ix = (iy + color) % 2; ix < g.nx; ix += 2)
            mv = std::max(mv, update_node(f, ix, iy, wx, wy, opt.omega).movement);
        moves[t] = mv;
      });
    }
    for (auto& th : pool) th.join();
  }
  double movement = 0;
  for (double m : moves) movement = std::max(movement, m);
  return movement;
}

}  // namespace

RelaxResult relax(EquivariantField& f, const RelaxOptions& opt) {
  if (opt.threads > 1 && opt.order != SweepOrder::RedBlack)
    throw ValidationError("relax: parallel sweeps require red-black ordering");
  if (!(opt.omega > 0.0) || opt.omega > 1.0)
    throw ValidationError("relax: damping must lie in (0, 1]");
  if (!(opt.tol > 0.0)) throw ValidationError("relax: tolerance must be positive");
  const auto& g = f.grid();
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  RelaxResult res;
  res.energy_history.push_back(discrete_energy(f));
  for (long sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double movement = (opt.threads > 1) ? sweep_parallel_redblack(f, opt, wx, wy)
                                              : sweep_serial(f, opt, wx, wy);
    res.sweeps = sweep + 1;
    res.final_movement = movement;
    if (opt.energy_every > 0 && (sweep + 1) % opt.energy_every == 0)
      res.energy_history.push_back(discrete_energy(f));
    if (movement < opt.tol) {
      res.converged = true;
      break;
    }
  }
  if (opt.energy_every == 0 ||
      (res.sweeps % std::max(opt.energy_every, 1)) != 0)
    res.energy_history.push_back(discrete_energy(f));
  return res;
}

double discrete_energy(const EquivariantField& f) {
  const auto& g = f.grid();
  return discrete_energy_band(f, g.alpha - 1.0, g.ymax + 1.0);
}

double discrete_energy_band(const EquivariantField& f, double y0, double y1) {
  const auto& g = f.grid();
  const double cx = g.hy() / g.hx();
  const double cy = g.hx() / g.hy();
  double e = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    if (g.y(iy) < y0 || g.y(iy) > y1) continue;
    for (int ix = 0; ix < g.nx; ++ix) {
      const double d = dist_raw(f.value(ix, iy), f.east(ix, iy));
      e += cx * d * d;
    }
  }
  for (int iy = 0; iy + 1 < g.ny; ++iy) {
    if (g.y(iy) < y0 || g.y(iy + 1) > y1) continue;
    for (int ix = 0; ix < g.nx; ++ix) {
      const double d = dist_raw(f.value(ix, iy), f.value(ix, iy + 1));
      e += cy * d * d;
    }
  }
  return 0.5 * e;
}

double tension_residual(const EquivariantField& f) {
  const auto& g = f.grid();
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  double worst = 0;
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      CMat s, si;
      herm_sqrt_invsqrt(f.value(ix, iy), s, si);
      auto lg = [&](const CMat& k) { return herm_log(hermitize(si * k * si)); };
      CMat acc = wx * (lg(f.east(ix, iy)) + lg(f.west(ix, iy))) +
                 wy * (lg(f.value(ix, iy + 1)) + lg(f.value(ix, iy - 1)));
      acc /= 2.0 * (wx + wy);
      worst = std::max(worst, acc.norm());
    }
  return worst;
}

void bump_bottom_row(EquivariantField& f, const h0::ChartModel& model, double eps) {
  const auto& g = f.grid();
  const int r = f.r();
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(r);
  dir[0] = 1.0 / std::sqrt(2.0);
  dir[1] = -1.0 / std::sqrt(2.0);
  for (int ix = 0; ix < g.nx; ++ix) {
    const CMat h = model_value(model, g.x(ix), g.y(0));
    CMat s, si;
    herm_sqrt_invsqrt(h, s, si);
    const CMat w = hermitize(s * dir.asDiagonal() * s);  // |w|_H = 1
    f.value(ix, 0) = exp_map_raw(h, eps * std::sin(g.x(ix)) * w);
  }
}

double seam_residual(const EquivariantField& f, const h0::ChartModel& model) {
  const auto& g = f.grid();
  double worst = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    const CMat wrapped = model_value(model, kTwoPi, g.y(iy));
    worst = std::max(worst, dist_raw(wrapped, act_raw(f.twist(), f.value(0, iy))));
  }
  return worst;
}

SupDistReport sup_dist_to_model(const EquivariantField& f, const h0::ChartModel& model,
                                double slack, double abs_tol) {
  if (model.k != 1) throw ModelArityMismatchError("sup_dist_to_model: needs a one-puncture model");
  const auto& g = f.grid();
  SupDistReport rep;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double d = dist_raw(f.value(ix, iy), model_value(model, g.x(ix), g.y(iy)));
      if (iy == 0 || iy == g.ny - 1) {
        rep.boundary_sup = std::max(rep.boundary_sup, d);
      } else if (d > rep.interior_sup) {
        rep.interior_sup = d;
        rep.arg_ix = ix;
        rep.arg_iy = iy;
      }
    }
  rep.max_principle = rep.interior_sup <= rep.boundary_sup * (1.0 + slack) + abs_tol;
  return rep;
}

std::vector<ExhaustionStage> exhaustion_solve(const h0::ChartModel& model,
                                              const std::vector<double>& ymax_schedule,
                                              const ExhaustionOptions& opt) {
  std::vector<ExhaustionStage> stages;
  const EquivariantField* prev = nullptr;
  std::vector<EquivariantField> kept;
  kept.reserve(ymax_schedule.size());
  for (double ym : ymax_schedule) {
    const int ny = int(std::lround((ym - opt.alpha) / opt.hy)) + 1;
    HalfCylinderGrid g(opt.alpha, opt.alpha + (ny - 1) * opt.hy, opt.nx, ny);
    EquivariantField f = init_field(model, g);
    ExhaustionStage st;
    st.ymax = g.ymax;
    st.ny = ny;
    st.init_energy = discrete_energy(f);
    if (prev) {
      for (int iy = 1; iy + 1 < prev->grid().ny && iy + 1 < ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) f.value(ix, iy) = prev->value(ix, iy);
    }
    st.result = relax(f, opt.relax);
    st.energy = discrete_energy(f);
    if (prev) {
      double gap = 0;
      for (int iy = 0; iy < prev->grid().ny && iy < ny; ++iy) {
        if (g.y(iy) > opt.alpha + opt.band) break;
        for (int ix = 0; ix < g.nx; ++ix)
          gap = std::max(gap, dist_raw(f.value(ix, iy), prev->value(ix, iy)));
      }
      st.gap_prev_band = gap;
    }
    kept.push_back(std::move(f));
    prev = &kept.back();
    stages.push_back(std::move(st));
  }
  return stages;
}

// ---------------------------------------------------------------------------
// Scalar problems
// ---------------------------------------------------------------------------

ScalarField scalar_harmonic_solve(const HalfCylinderGrid& g, const std::vector<double>& g0,
                                  const std::vector<double>& g1) {
  if (int(g0.size()) != g.nx || int(g1.size()) != g.nx)
    throw DimensionError("scalar_harmonic_solve: boundary rows must have nx entries");
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  const int rows = g.ny - 2;
  const int n = rows * g.nx;
  auto unknown = [&](int ix, int iy) { return (iy - 1) * g.nx + ix; };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(n) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const int row = unknown(ix, iy);
      trip.emplace_back(row, row, 2.0 * (wx + wy));
      const int ixe = (ix + 1) % g.nx;
      const int ixw = (ix + g.nx - 1) % g.nx;
      trip.emplace_back(row, unknown(ixe, iy), -wx);
      trip.emplace_back(row, unknown(ixw, iy), -wx);
      if (iy - 1 >= 1)
        trip.emplace_back(row, unknown(ix, iy - 1), -wy);
      else
        rhs[row] += wy * g0[ix];
      if (iy + 1 <= g.ny - 2)
        trip.emplace_back(row, unknown(ix, iy + 1), -wy);
      else
        rhs[row] += wy * g1[ix];
    }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw Error("scalar_harmonic_solve: factorization failed");
  Eigen::VectorXd u = solver.solve(rhs);
  if (solver.info() != Eigen::Success) throw Error("scalar_harmonic_solve: solve failed");

  ScalarField f(g);
  for (int ix = 0; ix < g.nx; ++ix) {
    f.at(ix, 0) = g0[ix];
    f.at(ix, g.ny - 1) = g1[ix];
  }
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) f.at(ix, iy) = u[unknown(ix, iy)];
  return f;
}

double scalar_laplace_residual(const ScalarField& f) {
  const auto& g = f.grid;
  const double wx = 1.0 / (g.hx() * g.hx());
  const double wy = 1.0 / (g.hy() * g.hy());
  double worst = 0;
  for (int iy = 1; iy + 1 < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double r = 2.0 * (wx + wy) * f.at(ix, iy) -
                       wx * (f.at((ix + 1) % g.nx, iy) + f.at((ix + g.nx - 1) % g.nx, iy)) -
                       wy * (f.at(ix, iy - 1) + f.at(ix, iy + 1));
      worst = std::max(worst, std::abs(r));
    }
  return worst;
}

double scalar_band_sup(const ScalarField& f, double y0, double y1) {
  const auto& g = f.grid;
  double sup = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    if (g.y(iy) < y0 || g.y(iy) > y1) continue;
    for (int ix = 0; ix < g.nx; ++ix) sup = std::max(sup, std::abs(f.at(ix, iy)));
  }
  return sup;
}

CutoffReport cutoff_inequality_check(const ScalarField& f, double r, double rho) {
  const auto& g = f.grid;
  if (!(rho > 0) || r < g.alpha || r + rho > g.ymax + 1e-12)
    throw ValidationError("cutoff_inequality_check: need alpha <= r and r + rho <= ymax");
  double bottom = 0;
  for (int ix = 0; ix < g.nx; ++ix) bottom = std::max(bottom, std::abs(f.at(ix, 0)));
  double scale = 0;
  for (double v : f.u) scale = std::max(scale, std::abs(v));
  if (bottom > 1e-9 * (1.0 + scale))
    throw ValidationError("cutoff_inequality_check: bottom row must vanish");
  if (scalar_laplace_residual(f) > 1e-6 * (1.0 + scale))
    throw ValidationError("cutoff_inequality_check: field is not discrete-harmonic");

  auto psi = [&](double y) {
    if (y <= r) return 1.0;
    if (y >= r + rho) return 0.0;
    return 1.0 - (y - r) / rho;
  };
  const double area = g.hx() * g.hy();
  CutoffReport rep;
  // |grad u|^2 psi^2 over x- and y-edges
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double du = (f.at((ix + 1) % g.nx, iy) - f.at(ix, iy)) / g.hx();
      const double p = psi(g.y(iy));
      rep.lhs += du * du * p * p * area;
    }
  for (int iy = 0; iy + 1 < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double du = (f.at(ix, iy + 1) - f.at(ix, iy)) / g.hy();
      const double p = psi(g.y(iy) + 0.5 * g.hy());
      rep.lhs += du * du * p * p * area;
      // 4 |grad psi|^2 u^2 lives on the same y-edges
      const double dpsi = (psi(g.y(iy + 1)) - psi(g.y(iy))) / g.hy();
      const double umid2 =
          0.5 * (f.at(ix, iy) * f.at(ix, iy) + f.at(ix, iy + 1) * f.at(ix, iy + 1));
      rep.rhs += 4.0 * dpsi * dpsi * umid2 * area;
    }
  rep.ratio = (rep.lhs == 0.0) ? 0.0 : rep.lhs / rep.rhs;
  return rep;
}

}  // namespace nilflow::flow
