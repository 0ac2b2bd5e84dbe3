#include "nilflow/psym.hpp"

#include <cmath>

namespace nilflow::psym {

namespace detail {

namespace {

// f and f' for the nearly-degenerate 2x2 branch.
struct ScalarFn {
  double (*f)(double);
  double (*df)(double);
  bool needs_positive;
};

inline double d_exp(double x) { return std::exp(x); }
inline double d_log(double x) { return std::log(x); }
inline double d_dlog(double x) { return 1.0 / x; }
inline double d_sqrt(double x) { return std::sqrt(x); }
inline double d_dsqrt(double x) { return 0.5 / std::sqrt(x); }
inline double d_invsqrt(double x) { return 1.0 / std::sqrt(x); }
inline double d_dinvsqrt(double x) { return -0.5 / (x * std::sqrt(x)); }

CMat apply2(const CMat& h, const ScalarFn& fn) {
  const double a = h(0, 0).real();
  const double d = h(1, 1).real();
  const cplx b = h(0, 1);
  const double mid = 0.5 * (a + d);
  const double delta = 0.5 * (a - d);
  const double s = std::sqrt(delta * delta + std::norm(b));
  CMat out(2, 2);
  if (s <= 1e-14 * (1.0 + std::abs(mid))) {
    if (fn.needs_positive && mid <= 0.0)
      throw NotPositiveDefiniteError("spectral function of non-positive matrix");
    const double f0 = fn.f(mid), f1 = fn.df(mid);
    out(0, 0) = f0 + f1 * (a - mid);
    out(1, 1) = f0 + f1 * (d - mid);
    out(0, 1) = f1 * b;
    out(1, 0) = std::conj(out(0, 1));
    return out;
  }
  const double lp = mid + s, lm = mid - s;
  if (fn.needs_positive && lm <= 0.0)
    throw NotPositiveDefiniteError("spectral function of non-positive matrix");
  const double fp = fn.f(lp), fm = fn.f(lm);
  // f(H) = fm I + (fp - fm)/(lp - lm) (H - lm I)
  const double slope = (fp - fm) / (lp - lm);
  out(0, 0) = fm + slope * (a - lm);
  out(1, 1) = fm + slope * (d - lm);
  out(0, 1) = slope * b;
  out(1, 0) = std::conj(out(0, 1));
  return out;
}

CMat applyn(const CMat& h, const ScalarFn& fn) {
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  if (es.info() != Eigen::Success) throw Error("hermitian eigensolver failed");
  Eigen::VectorXd w = es.eigenvalues();
  for (int i = 0; i < w.size(); ++i) {
    if (fn.needs_positive && w[i] <= 0.0)
      throw NotPositiveDefiniteError("spectral function of non-positive matrix");
    w[i] = fn.f(w[i]);
  }
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

CMat apply(const CMat& h, const ScalarFn& fn) {
  return h.rows() == 2 ? apply2(h, fn) : applyn(h, fn);
}

const ScalarFn kExp{d_exp, d_exp, false};
const ScalarFn kLog{d_log, d_dlog, true};
const ScalarFn kSqrt{d_sqrt, d_dsqrt, true};
const ScalarFn kInvSqrt{d_invsqrt, d_dinvsqrt, true};

}  // namespace

void herm_sqrt_invsqrt(const CMat& h, CMat& s, CMat& si) {
  if (h.rows() == 2) {
    s = apply2(h, kSqrt);
    si = apply2(h, kInvSqrt);
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  if (es.info() != Eigen::Success) throw Error("hermitian eigensolver failed");
  Eigen::VectorXd w = es.eigenvalues();
  Eigen::VectorXd ws(w.size()), wi(w.size());
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) throw NotPositiveDefiniteError("sqrt of non-positive matrix");
    ws[i] = std::sqrt(w[i]);
    wi[i] = 1.0 / ws[i];
  }
  s = es.eigenvectors() * ws.asDiagonal() * es.eigenvectors().adjoint();
  si = es.eigenvectors() * wi.asDiagonal() * es.eigenvectors().adjoint();
}

CMat herm_exp(const CMat& a) { return apply(a, kExp); }
CMat herm_log(const CMat& w) { return apply(w, kLog); }

CMat renorm_det(const CMat& h) {
  const int r = int(h.rows());
  const double d = h.determinant().real();
  if (!(d > 0)) throw NotPositiveDefiniteError("renorm_det: non-positive determinant");
  return h / std::pow(d, 1.0 / r);
}

CMat act_raw(const CMat& g, const CMat& h) {
  return renorm_det(hermitize(g * h * g.adjoint()));
}

CMat exp_map_raw(const CMat& h, const CMat& a) {
  CMat s, si;
  herm_sqrt_invsqrt(h, s, si);
  return renorm_det(hermitize(s * herm_exp(hermitize(si * a * si)) * s));
}

CMat log_map_raw(const CMat& h, const CMat& k) {
  CMat s, si;
  herm_sqrt_invsqrt(h, s, si);
  return hermitize(s * herm_log(hermitize(si * k * si)) * s);
}

double dist_raw(const CMat& h1, const CMat& h2) {
  if (h1.rows() == 2) {
    // Work with G = H1^{-1}(H2 - H1); forming the difference first keeps the
    // distance accurate for nearly equal points. The pencil eigenvalues are
    // 1 + eig(G).
    const double a = h1(0, 0).real(), d = h1(1, 1).real();
    const cplx b = h1(0, 1);
    const double det1 = a * d - std::norm(b);
    const cplx d00 = h2(0, 0) - h1(0, 0), d01 = h2(0, 1) - h1(0, 1);
    const cplx d10 = h2(1, 0) - h1(1, 0), d11 = h2(1, 1) - h1(1, 1);
    // G = adj(H1) * delta / det1
    const cplx g00 = (d * d00 - b * d10) / det1;
    const cplx g01 = (d * d01 - b * d11) / det1;
    const cplx g10 = (-std::conj(b) * d00 + a * d10) / det1;
    const cplx g11 = (-std::conj(b) * d01 + a * d11) / det1;
    const double tau = (g00 + g11).real();
    const double detg = (g00 * g11 - g01 * g10).real();
    const double disc = std::sqrt(std::max(tau * tau - 4.0 * detg, 0.0));
    const double g_lo = (tau - disc) / 2.0;
    if (g_lo <= -1.0)
      throw NotPositiveDefiniteError("dist: pencil has a non-positive eigenvalue");
    const double l0 = std::log1p((tau + disc) / 2.0);
    const double l1 = std::log1p(g_lo);
    return std::sqrt(l0 * l0 + l1 * l1);
  }
  auto ev = hpd_geig(h1, h2);
  double s = 0;
  for (double v : ev) {
    const double lg = std::log(v);
    s += lg * lg;
  }
  return std::sqrt(s);
}

double riem_raw(const CMat& h, const CMat& a, const CMat& b) {
  Eigen::PartialPivLU<CMat> lu(h);
  const CMat ha = lu.solve(a);
  const CMat hb = lu.solve(b);
  return (ha * hb).trace().real();
}

double norm_at(const CMat& h, const CMat& a) {
  const double v = riem_raw(h, a, a);
  return std::sqrt(std::max(v, 0.0));
}

double endo_norm_raw(const CMat& h, const CMat& m) {
  Eigen::PartialPivLU<CMat> lu(h);
  const CMat t = lu.solve(m.adjoint() * h * m);
  return std::sqrt(std::max(t.trace().real(), 0.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------

PPoint::PPoint(const CMat& h) {
  if (h.rows() != h.cols()) throw DimensionError("PPoint: non-square");
  if (!is_hermitian(h, 1e-10)) throw ValidationError("PPoint: not Hermitian");
  CMat hh = hermitize(h);
  Eigen::SelfAdjointEigenSolver<CMat> es(hh);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NotPositiveDefiniteError("PPoint: not positive definite");
  h_ = detail::renorm_det(hh);
}

PPoint PPoint::trusted(CMat h) {
  PPoint p;
  p.h_ = std::move(h);
  return p;
}

PTangent::PTangent(const PPoint& base_, const CMat& a) : base(base_), A(hermitize(a)) {
  if (a.rows() != base.mat().rows() || a.cols() != base.mat().cols())
    throw DimensionError("PTangent: shape mismatch");
  if (!is_hermitian(a, 1e-10)) throw ValidationError("PTangent: not Hermitian");
  Eigen::PartialPivLU<CMat> lu(base.mat());
  const CMat ha = lu.solve(A);
  const double tr = std::abs(ha.trace().real());
  if (tr > 1e-10 * (1.0 + max_abs(ha)) * a.rows())
    throw ValidationError("PTangent: tr(H^{-1}A) does not vanish");
}

PPoint act(const CMat& g, const PPoint& h) {
  if (std::abs(g.determinant() - cplx(1.0, 0.0)) > 1e-8)
    throw DetNotOneError("act: group element must have determinant one");
  return PPoint::trusted(detail::act_raw(g, h.mat()));
}

double riem_inner(const PPoint& h, const PTangent& a, const PTangent& b) {
  if (max_abs(a.base.mat() - h.mat()) > 1e-10 * (1.0 + max_abs(h.mat())) ||
      max_abs(b.base.mat() - h.mat()) > 1e-10 * (1.0 + max_abs(h.mat())))
    throw ValidationError("riem_inner: tangent base mismatch");
  return detail::riem_raw(h.mat(), a.A, b.A);
}

PPoint exp_map(const PPoint& h, const PTangent& a) {
  if (max_abs(a.base.mat() - h.mat()) > 1e-10 * (1.0 + max_abs(h.mat())))
    throw ValidationError("exp_map: tangent base mismatch");
  return PPoint::trusted(detail::exp_map_raw(h.mat(), a.A));
}

PTangent log_map(const PPoint& h, const PPoint& k) {
  return PTangent(h, detail::log_map_raw(h.mat(), k.mat()));
}

double dist(const PPoint& h1, const PPoint& h2) {
  return detail::dist_raw(h1.mat(), h2.mat());
}

double endo_norm(const PPoint& h, const CMat& m) {
  if (m.rows() != h.mat().rows() || m.cols() != h.mat().cols())
    throw DimensionError("endo_norm: shape mismatch");
  return detail::endo_norm_raw(h.mat(), m);
}

double section_norm(const PPoint& h, const CVec& v) {
  if (v.size() != h.mat().rows()) throw DimensionError("section_norm: shape mismatch");
  const double q = (v.adjoint() * h.mat() * v)(0, 0).real();
  return std::sqrt(std::max(q, 0.0));
}

}  // namespace nilflow::psym
