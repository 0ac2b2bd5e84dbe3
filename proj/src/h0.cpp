#include "nilflow/h0.hpp"

#include <cmath>
#include <numbers>

namespace nilflow::h0 {

using psym::detail::act_raw;
using psym::detail::dist_raw;
using psym::detail::endo_norm_raw;
using psym::detail::norm_at;
using psym::detail::renorm_det;
using psym::detail::riem_raw;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_point(const ChartModel& m, const ChartPoint& p) {
  if (int(p.theta.size()) < m.k || int(p.L.size()) < m.k)
    throw ValidationError("chart point: need theta and L for every puncture");
  for (int i = 0; i < m.k; ++i)
    if (!(p.L[i] > 1.0))
      throw ValidationError("chart point: L must exceed 1 inside the model neighborhood");
}

CMat twist_factor(const ChartModel& m, const ChartPoint& p) {
  CMat a = CMat::Zero(m.r, m.r);
  for (int i = 0; i < m.k; ++i) a += (p.theta[i] / kTwoPi) * m.N[i];
  return expm_nilpotent(a);
}

CMat eval_raw(const ChartModel& m, const ChartPoint& p) {
  check_point(m, p);
  const CMat u = twist_factor(m, p);
  Eigen::VectorXd d(m.r);
  for (int j = 0; j < m.r; ++j) {
    double e = 0;
    for (int i = 0; i < m.k; ++i) e += m.Yw[i][j] * std::log(p.L[i]);
    d[j] = std::exp(e);
  }
  CMat h = u * d.asDiagonal() * u.adjoint();
  return renorm_det(hermitize(h));
}

// Richardson-extrapolated central difference of coordinate -> matrix maps.
template <class F>
CMat richardson(F&& f, double h) {
  const CMat d1 = (f(h) - f(-h)) / (2.0 * h);
  const CMat d2 = (f(h / 2) - f(-h / 2)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

}  // namespace

ChartModel ChartModel::from_grading(const lie::CommutingGrading& g) {
  ChartModel m;
  m.k = int(g.N.size());
  m.r = g.N.empty() ? 0 : g.N[0].rows();
  for (int i = 0; i < m.k; ++i) {
    m.N_exact.push_back(g.N[i]);
    m.Y_exact.push_back(g.Y[i]);
    m.gamma_exact.push_back(expm_nilpotent(g.N[i]));
    m.N.push_back(to_cmat(g.N[i]));
    m.Nsec.push_back(-to_cmat(g.N[i]).transpose());
    m.gamma.push_back(to_cmat(m.gamma_exact.back()));
    Eigen::VectorXd w(m.r);
    for (int j = 0; j < m.r; ++j) w[j] = to_double(g.Y[i](j, j));
    m.Yw.push_back(std::move(w));
  }
  return m;
}

ChartModel ChartModel::direct(const std::vector<RatMat>& n, const std::vector<RatMat>& y) {
  if (n.empty() || n.size() != y.size()) throw ValidationError("ChartModel: malformed data");
  ChartModel m;
  m.k = int(n.size());
  m.r = n[0].rows();
  for (int i = 0; i < m.k; ++i) {
    if (!is_nilpotent(n[i])) throw NotNilpotentError("ChartModel: N must be nilpotent");
    if (!y[i].is_diagonal()) throw ValidationError("ChartModel: Y must be diagonal");
    if (!n[i].is_zero() && comm(y[i], n[i]) != n[i] * rat(2))
      throw NotATripleError("ChartModel: [Y, N] != 2N");
    m.N_exact.push_back(n[i]);
    m.Y_exact.push_back(y[i]);
    m.gamma_exact.push_back(expm_nilpotent(n[i]));
    m.N.push_back(to_cmat(n[i]));
    m.Nsec.push_back(-to_cmat(n[i]).transpose());
    m.gamma.push_back(to_cmat(m.gamma_exact.back()));
    Eigen::VectorXd w(m.r);
    for (int j = 0; j < m.r; ++j) w[j] = to_double(y[i](j, j));
    m.Yw.push_back(std::move(w));
  }
  return m;
}

ChartPoint ChartPoint::from_z(const std::vector<cplx>& z) {
  ChartPoint p;
  for (const cplx& zi : z) {
    const double r = std::abs(zi);
    if (!(r > 0) || !(r < std::exp(-1.0)))
      throw ValidationError("ChartPoint: need 0 < |z| < 1/e inside the model neighborhood");
    p.theta.push_back(std::arg(zi));
    p.L.push_back(-std::log(r));
  }
  return p;
}

psym::PPoint eval_h0(const ChartModel& m, const ChartPoint& p) {
  return psym::PPoint::trusted(eval_raw(m, p));
}

double equivariance_residual(const ChartModel& m, const std::vector<ChartPoint>& pts) {
  // Both sides are congruences of the same diagonal Gram matrix D, so the
  // residual equals dist(D, V D V^H) with V = U(theta + 2 pi e_i)^{-1} gamma_i
  // U(theta). Evaluating D^{-1/2} V D V^H D^{-1/2} entrywise avoids the
  // cancellation that a direct distance between the two large-entry Gram
  // matrices would suffer.
  double worst = 0;
  for (const auto& p : pts) {
    check_point(m, p);
    const CMat u1 = twist_factor(m, p);
    Eigen::VectorXd d(m.r);
    for (int j = 0; j < m.r; ++j) {
      double e = 0;
      for (int i = 0; i < m.k; ++i) e += m.Yw[i][j] * std::log(p.L[i]);
      d[j] = std::exp(e);
    }
    for (int i = 0; i < m.k; ++i) {
      ChartPoint q = p;
      q.theta[i] += kTwoPi;
      // U(q)^{-1} = exp(-A(q)) exactly (nilpotent argument)
      CMat a2 = CMat::Zero(m.r, m.r);
      for (int t = 0; t < m.k; ++t) a2 -= (q.theta[t] / kTwoPi) * m.N[t];
      const CMat v = expm_nilpotent(a2) * m.gamma[i] * u1;
      CMat w(m.r, m.r);
      for (int aa = 0; aa < m.r; ++aa)
        for (int bb = 0; bb < m.r; ++bb) {
          cplx s = 0;
          for (int c = 0; c < m.r; ++c) s += v(aa, c) * d[c] * std::conj(v(bb, c));
          w(aa, bb) = s / std::sqrt(d[aa] * d[bb]);
        }
      Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(w));
      if (es.info() != Eigen::Success) throw Error("equivariance_residual: eigensolver failed");
      double acc = 0;
      for (int j = 0; j < m.r; ++j) {
        const double lg = std::log(es.eigenvalues()[j]);
        acc += lg * lg;
      }
      worst = std::max(worst, std::sqrt(acc));
    }
  }
  return worst;
}

bool exact_equivariance_check(const ChartModel& m, const std::vector<Rat>& svals) {
  for (int i = 0; i < m.k; ++i)
    for (const Rat& s : svals) {
      const RatMat lhs = expm_nilpotent(m.N_exact[i] * (s + 1));
      const RatMat rhs = m.gamma_exact[i] * expm_nilpotent(m.N_exact[i] * s);
      if (lhs != rhs) return false;
    }
  return true;
}

double transversal_energy_density(const ChartModel& m, int i, const ChartPoint& p, double step) {
  check_point(m, p);
  const CMat h = eval_raw(m, p);
  auto eval_theta = [&](double dh) {
    ChartPoint q = p;
    q.theta[i] += dh;
    return eval_raw(m, q);
  };
  auto eval_l = [&](double dh) {
    ChartPoint q = p;
    q.L[i] += dh;
    return eval_raw(m, q);
  };
  const double li = p.L[i];
  const CMat t_theta = richardson(eval_theta, step);
  const CMat t_l = richardson(eval_l, step * li);
  return li * li * (riem_raw(h, t_theta, t_theta) + riem_raw(h, t_l, t_l));
}

SweepStats density_sweep(const ChartModel& m, int i, int n_theta, int n_l, double l_lo,
                         double l_hi) {
  std::vector<double> vals;
  vals.reserve(size_t(n_theta) * n_l);
  for (int a = 0; a < n_theta; ++a)
    for (int b = 0; b < n_l; ++b) {
      ChartPoint p;
      p.theta.assign(m.k, 0.4);
      p.L.assign(m.k, 12.0);
      p.theta[i] = kTwoPi * a / n_theta;
      p.L[i] = l_lo * std::pow(l_hi / l_lo, n_l == 1 ? 0.0 : double(b) / (n_l - 1));
      vals.push_back(transversal_energy_density(m, i, p));
    }
  SweepStats s;
  s.min = s.max = vals[0];
  for (double v : vals) {
    s.mean += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean /= double(vals.size());
  for (double v : vals) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / double(vals.size()));
  return s;
}

double asymptotic_exponent(const ChartModel& m, int i, const CVec& v, double l_lo, double l_hi,
                           int samples) {
  if (v.size() != m.r || max_abs(v) == 0.0)
    throw ZeroVectorError("asymptotic_exponent: need a nonzero fiber vector");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int t = 0; t < samples; ++t) {
    ChartPoint p;
    p.theta.assign(m.k, 0.0);
    p.L.assign(m.k, 10.0);
    p.L[i] = l_lo * std::pow(l_hi / l_lo, double(t) / (samples - 1));
    const CMat h = eval_raw(m, p);
    const double n2 = (v.adjoint() * h * v)(0, 0).real();
    const double x = std::log(p.L[i]);
    const double y = std::log(n2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = double(samples);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double nilpotent_decay(const ChartModel& m, int i, const std::vector<ChartPoint>& pts) {
  double sup = 0;
  for (const auto& p : pts) {
    const CMat h = eval_raw(m, p);
    const double e = endo_norm_raw(h, m.Nsec[i]);
    sup = std::max(sup, e * e * p.L[i] * p.L[i]);
  }
  return sup;
}

std::vector<ChartPoint> decay_samples(const ChartModel& m, int i, int n_theta, int n_l,
                                      double l_lo, double l_hi) {
  std::vector<ChartPoint> pts;
  for (int a = 0; a < n_theta; ++a)
    for (int b = 0; b < n_l; ++b) {
      ChartPoint p;
      p.theta.assign(m.k, 0.0);
      p.L.assign(m.k, 10.0);
      p.theta[i] = kTwoPi * a / n_theta;
      p.L[i] = l_lo * std::pow(l_hi / l_lo, n_l == 1 ? 0.0 : double(b) / (n_l - 1));
      pts.push_back(std::move(p));
    }
  return pts;
}

Dh0Parts dh0_parts(const ChartModel& m, int i, const ChartPoint& p, double step) {
  check_point(m, p);
  const double li = p.L[i];
  const CMat u = twist_factor(m, p);
  Eigen::VectorXd d(m.r);
  for (int j = 0; j < m.r; ++j) {
    double e = 0;
    for (int t = 0; t < m.k; ++t) e += m.Yw[t][j] * std::log(p.L[t]);
    d[j] = std::exp(e);
  }
  const CMat h = hermitize(u * d.asDiagonal() * u.adjoint());

  // radial summand: d_L H0 = U (Y_i D) U^H / L_i
  Eigen::VectorXd yd(m.r);
  for (int j = 0; j < m.r; ++j) yd[j] = m.Yw[i][j] * d[j];
  const CMat t_l_an = hermitize(u * yd.asDiagonal() * u.adjoint()) / li;
  // angular summand: d_theta H0 = (N_i H0 + H0 N_i^H) / (2 pi)
  const CMat t_th_an = hermitize(m.N[i] * h + h * m.N[i].adjoint()) / kTwoPi;

  auto eval_theta = [&](double dh) {
    ChartPoint q = p;
    q.theta[i] += dh;
    return eval_raw(m, q);
  };
  auto eval_l = [&](double dh) {
    ChartPoint q = p;
    q.L[i] += dh;
    return eval_raw(m, q);
  };
  const CMat t_th_fd = (eval_theta(step) - eval_theta(-step)) / (2.0 * step);
  const CMat t_l_fd = (eval_l(step * li) - eval_l(-step * li)) / (2.0 * step * li);

  Dh0Parts out;
  out.y_part = li * norm_at(h, t_l_an);
  out.n_part = li * norm_at(h, t_th_an);
  out.recomb_residual =
      std::max(norm_at(h, t_th_an - t_th_fd), norm_at(h, t_l_an - t_l_fd));
  return out;
}

NormLawVerdict section_norm_law(const ChartModel& m, int i, const CVec& v, double tol) {
  if (v.size() != m.r || max_abs(v) == 0.0)
    throw ZeroVectorError("section_norm_law: need a nonzero fiber vector");
  // v must live in a single Y_i eigenspace
  double weight = 0;
  bool found = false;
  const double scale = max_abs(v);
  for (int j = 0; j < m.r; ++j) {
    if (std::abs(v[j]) <= 1e-12 * scale) continue;
    if (!found) {
      weight = m.Yw[i][j];
      found = true;
    } else if (std::abs(m.Yw[i][j] - weight) > 1e-12) {
      throw ValidationError("section_norm_law: vector spans several weight spaces");
    }
  }
  NormLawVerdict out;
  out.weight = weight;
  const CVec w = m.Nsec[i] * v;
  if (max_abs(w) <= 1e-13 * scale) {
    out.vacuous = true;
    out.pass = true;
    return out;
  }
  out.slope = asymptotic_exponent(m, i, w);
  out.pass = out.slope <= weight - 2.0 + tol;
  return out;
}

}  // namespace nilflow::h0
