#include "nilflow/lie.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace nilflow::lie {

namespace {

// Incremental echelon structure for exact rank / membership tests.
class IncrementalSpan {
 public:
  explicit IncrementalSpan(int dim) : dim_(dim) {}

  // Reduces v against the current rows; returns the remainder.
  std::vector<Rat> reduce(std::vector<Rat> v) const {
    for (size_t t = 0; t < rows_.size(); ++t) {
      const Rat& c = v[lead_[t]];
      if (c != 0) {
        const Rat f = c;  // rows are normalized to leading 1
        for (int j = 0; j < dim_; ++j) v[j] -= f * rows_[t][j];
      }
    }
    return v;
  }

  bool contains(const std::vector<Rat>& v) const {
    auto r = reduce(v);
    return std::all_of(r.begin(), r.end(), [](const Rat& x) { return x == 0; });
  }

  // Inserts v if independent; returns whether the rank grew.
  bool insert(const std::vector<Rat>& v) {
    auto r = reduce(v);
    int lead = -1;
    for (int j = 0; j < dim_; ++j)
      if (r[j] != 0) {
        lead = j;
        break;
      }
    if (lead < 0) return false;
    const Rat piv = r[lead];
    for (int j = 0; j < dim_; ++j) r[j] /= piv;
    rows_.push_back(std::move(r));
    lead_.push_back(lead);
    return true;
  }

  int rank() const { return int(rows_.size()); }

 private:
  int dim_;
  std::vector<std::vector<Rat>> rows_;
  std::vector<int> lead_;
};

int first_nonzero_index(const std::vector<Rat>& v) {
  for (size_t j = 0; j < v.size(); ++j)
    if (v[j] != 0) return int(j);
  return -1;
}

std::vector<Rat> mat_vec(const RatMat& m, const std::vector<Rat>& v) {
  std::vector<Rat> w(m.rows(), Rat(0));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0 && v[j] != 0) w[i] += m(i, j) * v[j];
  return w;
}

RatMat columns_to_matrix(const std::vector<std::vector<Rat>>& cols) {
  const int r = int(cols[0].size());
  RatMat g(r, int(cols.size()));
  for (int j = 0; j < int(cols.size()); ++j)
    for (int i = 0; i < r; ++i) g(i, j) = cols[j][i];
  return g;
}

bool strictly_upper(const RatMat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j <= i && j < m.cols(); ++j)
      if (m(i, j) != 0) return false;
  return true;
}

// Jordan normal form data of a nilpotent matrix: adapted basis g (columns),
// chain lengths in column order (one entry per chain, longest first).
struct JordanData {
  RatMat g, ginv;
  std::vector<int> chain_lengths;
};

JordanData jordan_data(const RatMat& n) {
  const int r = n.rows();
  // kernel chain K_j = ker N^j
  int q = 0;
  std::vector<std::vector<std::vector<Rat>>> kbasis(r + 1);
  for (int j = 1; j <= r; ++j) {
    kbasis[j] = nullspace_basis(mat_pow(n, j));
    if (int(kbasis[j].size()) == r) {
      q = j;
      break;
    }
  }
  if (q == 0) throw NotNilpotentError("jordan_data: input is not nilpotent");

  struct ChainRec {
    int length;
    std::vector<std::vector<Rat>> down;  // u, Nu, ..., N^{len-1}u
  };
  std::vector<ChainRec> chains;
  std::vector<std::pair<int, std::vector<Rat>>> active;  // (chain id, vector)

  for (int j = q; j >= 1; --j) {
    IncrementalSpan span(r);
    if (j >= 2)
      for (const auto& b : kbasis[j - 1]) span.insert(b);
    std::vector<std::pair<int, std::vector<Rat>>> next;
    for (auto& [ci, v] : active) {
      auto w = mat_vec(n, v);
      chains[ci].down.push_back(w);
      if (!span.insert(w)) throw Error("jordan_data: dependent chain image");
      next.emplace_back(ci, std::move(w));
    }
    for (const auto& w : kbasis[j]) {
      if (span.insert(w)) {
        const int ci = int(chains.size());
        chains.push_back({j, {w}});
        next.emplace_back(ci, w);
      }
    }
    active = std::move(next);
  }

  std::stable_sort(chains.begin(), chains.end(),
                   [](const ChainRec& a, const ChainRec& b) { return a.length > b.length; });

  std::vector<std::vector<Rat>> cols;
  std::vector<int> lengths;
  for (const auto& ch : chains) {
    lengths.push_back(ch.length);
    for (int t = ch.length - 1; t >= 0; --t) cols.push_back(ch.down[t]);
  }
  JordanData out;
  out.g = columns_to_matrix(cols);
  out.ginv = inverse(out.g);
  out.chain_lengths = std::move(lengths);
  return out;
}

// Block-form Y and N- for given chain lengths, in the Jordan-adapted basis.
void block_triple_parts(const std::vector<int>& lengths, int r, RatMat& y, RatMat& nm) {
  y = RatMat::zero(r, r);
  nm = RatMat::zero(r, r);
  int off = 0;
  for (int m : lengths) {
    for (int t = 0; t < m; ++t) y(off + t, off + t) = m - 1 - 2 * t;
    for (int t = 1; t < m; ++t) nm(off + t, off + t - 1) = Rat(t) * Rat(m - t);
    off += m;
  }
}

// Unique lowering element for a valid pair: { [N,M] = Y, [Y,M] = -2M }.
// Returns nullopt when the joint system is infeasible (the pair does not
// complete to a triple).
std::optional<RatMat> solve_lowering(const RatMat& n, const RatMat& y) {
  const int r = n.rows();
  const int rr = r * r;
  RatMat adn = ad_matrix(n);
  RatMat ady = ad_matrix(y);
  RatMat a(2 * rr, rr);
  std::vector<Rat> b(2 * rr, Rat(0));
  auto yv = vec(y);
  for (int i = 0; i < rr; ++i) {
    for (int j = 0; j < rr; ++j) {
      a(i, j) = adn(i, j);
      a(rr + i, j) = ady(i, j);
    }
    a(rr + i, i) += 2;
    b[i] = yv[i];
  }
  auto s = solve_linear(a, b);
  if (!s.feasible) return std::nullopt;
  if (!s.nullspace.empty())
    throw Error("solve_lowering: lowering element is not unique (invalid pair)");
  return unvec(s.particular, r, r);
}

bool trace_orthogonal_to_centralizer(const RatMat& y, const std::vector<RatMat>& cz) {
  for (const auto& z : cz)
    if ((y * z).trace() != 0) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------

bool triple_brackets_exact(const Sl2Triple& t) {
  return comm(t.Y, t.N) == t.N * rat(2) && comm(t.Y, t.Nminus) == t.Nminus * rat(-2) &&
         comm(t.N, t.Nminus) == t.Y;
}

std::vector<RatMat> centralizer_basis(const RatMat& n) {
  const int r = n.rows();
  auto ns = nullspace_basis(ad_matrix(n));
  std::vector<RatMat> out;
  out.reserve(ns.size());
  for (auto& v : ns) out.push_back(unvec(v, r, r));
  return out;
}

ValidatedFamily validate_family(const std::vector<RatMat>& gammas) {
  if (gammas.empty()) throw ValidationError("validate_family: empty family");
  const int r = gammas[0].rows();
  const int k = int(gammas.size());
  for (int i = 0; i < k; ++i) {
    if (!gammas[i].square() || gammas[i].rows() != r)
      throw ValidationError("validate_family: generators must be square of equal size");
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        if (!is_integer(gammas[i](a, b)))
          throw ValidationError("validate_family: generator entries must be integers");
  }
  for (int i = 0; i < k; ++i) {
    if (det(gammas[i]) != 1) {
      std::ostringstream os;
      os << "validate_family: det(generator " << i << ") != 1";
      throw DetNotOneError(os.str());
    }
  }
  for (int i = 0; i < k; ++i) {
    if (!mat_pow(gammas[i] - RatMat::identity(r), r).is_zero()) {
      std::ostringstream os;
      os << "validate_family: generator " << i << " is not unipotent";
      throw NotUnipotentError(os.str());
    }
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (gammas[i] * gammas[j] != gammas[j] * gammas[i]) {
        std::ostringstream os;
        os << "validate_family: generators " << i << " and " << j << " do not commute";
        throw NonCommutingError(i, j, os.str());
      }

  ValidatedFamily out;
  out.monodromy = {r, k, gammas};
  out.nilpotents.r = r;
  out.nilpotents.k = k;
  for (int i = 0; i < k; ++i) out.nilpotents.N.push_back(logm_unipotent(gammas[i]));
  // logs of commuting unipotents commute and are trace free; cheap to confirm
  for (int i = 0; i < k; ++i) {
    if (out.nilpotents.N[i].trace() != 0) throw Error("validate_family: log has nonzero trace");
    for (int j = i + 1; j < k; ++j)
      if (!comm(out.nilpotents.N[i], out.nilpotents.N[j]).is_zero())
        throw Error("validate_family: logs do not commute");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engel flag
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<Rat>> engel_columns(const std::vector<RatMat>& mats, int d) {
  if (d == 0) return {};
  const int k = int(mats.size());
  RatMat stacked(k * d, d);
  for (int t = 0; t < k; ++t)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) stacked(t * d + i, j) = mats[t](i, j);
  auto ker = nullspace_basis(stacked);
  if (ker.empty())
    throw NotNilpotentFamilyError("engel_flag: no common kernel vector (family not nilpotent)");

  // deterministic choice: smallest leading index among canonical basis vectors
  int best = 0, best_lead = first_nonzero_index(ker[0]);
  for (int t = 1; t < int(ker.size()); ++t) {
    int l = first_nonzero_index(ker[t]);
    if (l < best_lead) {
      best = t;
      best_lead = l;
    }
  }
  std::vector<Rat> v = ker[best];
  const int p = best_lead;
  {
    const Rat piv = v[p];
    for (auto& x : v) x /= piv;
  }

  // complement coordinates are all j != p; induced maps act on the quotient
  std::vector<int> comp;
  for (int j = 0; j < d; ++j)
    if (j != p) comp.push_back(j);

  std::vector<RatMat> induced(mats.size(), RatMat(d - 1, d - 1));
  for (int t = 0; t < k; ++t)
    for (int cj = 0; cj < d - 1; ++cj) {
      std::vector<Rat> w(d);
      for (int i = 0; i < d; ++i) w[i] = mats[t](i, comp[cj]);
      const Rat f = w[p];
      if (f != 0)
        for (int i = 0; i < d; ++i) w[i] -= f * v[i];
      for (int ci = 0; ci < d - 1; ++ci) induced[t](ci, cj) = w[comp[ci]];
    }

  auto sub = engel_columns(induced, d - 1);
  std::vector<std::vector<Rat>> cols;
  cols.push_back(std::move(v));
  for (auto& sc : sub) {
    std::vector<Rat> lifted(d, Rat(0));
    for (int ci = 0; ci < d - 1; ++ci) lifted[comp[ci]] = sc[ci];
    cols.push_back(std::move(lifted));
  }
  return cols;
}

}  // namespace

RatMat engel_flag(const NilpotentFamily& family) {
  for (const auto& n : family.N)
    if (!n.square() || n.rows() != family.r)
      throw ValidationError("engel_flag: malformed family");
  auto cols = engel_columns(family.N, family.r);
  RatMat g = columns_to_matrix(cols);
  RatMat ginv = inverse(g);
  for (const auto& n : family.N)
    if (!strictly_upper(ginv * n * g))
      throw Error("engel_flag: produced basis is not triangularizing");
  return g;
}

// ---------------------------------------------------------------------------
// sl2 triples
// ---------------------------------------------------------------------------

Sl2Triple jm_triple(const RatMat& n) {
  if (!n.square()) throw DimensionError("jm_triple: non-square");
  if (n.is_zero()) throw ZeroNilpotentError("jm_triple: zero matrix has no sl2 embedding");
  if (!is_nilpotent(n)) throw NotNilpotentError("jm_triple: input is not nilpotent");
  const int r = n.rows();
  JordanData jd = jordan_data(n);
  RatMat yb, nmb;
  block_triple_parts(jd.chain_lengths, r, yb, nmb);
  Sl2Triple t;
  t.N = n;
  t.Y = jd.g * yb * jd.ginv;
  t.Nminus = jd.g * nmb * jd.ginv;
  if (!triple_brackets_exact(t)) throw Error("jm_triple: bracket verification failed");
  return t;
}

std::vector<RatMat> diagonal_tracefree_basis(int r) {
  std::vector<RatMat> b;
  for (int i = 0; i + 1 < r; ++i) {
    RatMat m(r, r);
    m(i, i) = 1;
    m(i + 1, i + 1) = -1;
    b.push_back(std::move(m));
  }
  return b;
}

ConstrainedTriple jm_triple_constrained(const RatMat& n,
                                        const std::vector<RatMat>& constraint_basis) {
  if (!n.square()) throw DimensionError("jm_triple_constrained: non-square");
  if (n.is_zero()) throw ZeroNilpotentError("jm_triple_constrained: zero nilpotent");
  if (!is_nilpotent(n)) throw NotNilpotentError("jm_triple_constrained: not nilpotent");
  const int r = n.rows();
  const int rr = r * r;
  const int m = int(constraint_basis.size());
  auto cz = centralizer_basis(n);

  RatMat a(rr + int(cz.size()), m);
  std::vector<Rat> b(rr + cz.size(), Rat(0));
  for (int t = 0; t < m; ++t) {
    auto bt = vec(comm(constraint_basis[t], n));
    for (int i = 0; i < rr; ++i) a(i, t) = bt[i];
    for (size_t s = 0; s < cz.size(); ++s) a(rr + int(s), t) = (constraint_basis[t] * cz[s]).trace();
  }
  auto tn = vec(n * rat(2));
  for (int i = 0; i < rr; ++i) b[i] = tn[i];

  auto sol = solve_linear(a, b);
  ConstrainedTriple out;
  if (!sol.feasible) {
    out.feasible = false;
    out.witness = sol.witness;
    out.witness_residual = sol.witness_residual;
    return out;
  }
  RatMat y = RatMat::zero(r, r);
  for (int t = 0; t < m; ++t)
    if (sol.particular[t] != 0) y += constraint_basis[t] * sol.particular[t];

  auto nm = solve_lowering(n, y);
  if (!nm) throw Error("jm_triple_constrained: completable Y has no lowering element");
  out.feasible = true;
  out.triple = {n, y, *nm};
  if (!triple_brackets_exact(out.triple))
    throw Error("jm_triple_constrained: bracket verification failed");
  return out;
}

// ---------------------------------------------------------------------------
// Commuting gradings
// ---------------------------------------------------------------------------

namespace {

std::vector<int> support_indices(const RatMat& n) {
  std::vector<bool> used(n.rows(), false);
  for (int i = 0; i < n.rows(); ++i)
    for (int j = 0; j < n.cols(); ++j)
      if (n(i, j) != 0) used[i] = used[j] = true;
  std::vector<int> s;
  for (int i = 0; i < n.rows(); ++i)
    if (used[i]) s.push_back(i);
  return s;
}

RatMat restrict_to(const RatMat& n, const std::vector<int>& idx) {
  RatMat m(int(idx.size()), int(idx.size()));
  for (size_t a = 0; a < idx.size(); ++a)
    for (size_t b = 0; b < idx.size(); ++b) m(int(a), int(b)) = n(idx[a], idx[b]);
  return m;
}

// Exact Frobenius-closest point of an affine solution set to a target.
std::vector<Rat> closest_solution(const LinearSolution& sol, const std::vector<Rat>& target) {
  const auto& B = sol.nullspace;
  if (B.empty()) return sol.particular;
  const int m = int(B.size());
  const int dim = int(sol.particular.size());
  RatMat gram(m, m);
  std::vector<Rat> rhs(m, Rat(0));
  for (int s = 0; s < m; ++s) {
    for (int t = 0; t < m; ++t) {
      Rat g = 0;
      for (int j = 0; j < dim; ++j)
        if (B[s][j] != 0 && B[t][j] != 0) g += B[s][j] * B[t][j];
      gram(s, t) = g;
    }
    Rat rv = 0;
    for (int j = 0; j < dim; ++j)
      if (B[s][j] != 0) rv += B[s][j] * (target[j] - sol.particular[j]);
    rhs[s] = rv;
  }
  auto cs = solve_linear(gram, rhs);
  if (!cs.feasible) throw Error("closest_solution: singular Gram matrix");
  std::vector<Rat> out = sol.particular;
  for (int s = 0; s < m; ++s)
    if (cs.particular[s] != 0)
      for (int j = 0; j < dim; ++j) out[j] += cs.particular[s] * B[s][j];
  return out;
}

struct JointEigenbasis {
  RatMat u, uinv;
  // weight vector per output column, one entry per grading index
  std::vector<std::vector<long>> col_weights;
};

// Exact simultaneous diagonalization of commuting semisimple matrices with
// integer eigenvalues in [-(r-1), r-1].
JointEigenbasis joint_diagonalize(const std::vector<RatMat>& ws, int r) {
  struct Sub {
    std::vector<std::vector<Rat>> basis;
    std::vector<long> weights;
  };
  std::vector<Sub> subs;
  {
    Sub whole;
    for (int i = 0; i < r; ++i) {
      std::vector<Rat> e(r, Rat(0));
      e[i] = 1;
      whole.basis.push_back(std::move(e));
    }
    subs.push_back(std::move(whole));
  }

  for (const auto& w : ws) {
    std::vector<Sub> next;
    for (auto& sub : subs) {
      const int d = int(sub.basis.size());
      RatMat bmat(r, d);
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < r; ++i) bmat(i, j) = sub.basis[j][i];
      // restriction R with W B = B R
      RatMat rmat(d, d);
      for (int j = 0; j < d; ++j) {
        auto img = mat_vec(w, sub.basis[j]);
        auto s = solve_linear(bmat, img);
        if (!s.feasible || !s.nullspace.empty())
          throw GradingNotFoundError("joint_diagonalize: subspace not invariant");
        for (int i = 0; i < d; ++i) rmat(i, j) = s.particular[i];
      }
      int found = 0;
      for (long lam = -(r - 1); lam <= r - 1; ++lam) {
        RatMat shifted = rmat;
        for (int i = 0; i < d; ++i) shifted(i, i) -= Rat(lam);
        auto ker = nullspace_basis(shifted);
        if (ker.empty()) continue;
        Sub piece;
        piece.weights = sub.weights;
        piece.weights.push_back(lam);
        for (const auto& c : ker) {
          std::vector<Rat> gv(r, Rat(0));
          for (int j = 0; j < d; ++j)
            if (c[j] != 0)
              for (int i = 0; i < r; ++i) gv[i] += c[j] * sub.basis[j][i];
          piece.basis.push_back(std::move(gv));
        }
        found += int(piece.basis.size());
        next.push_back(std::move(piece));
      }
      if (found != d)
        throw GradingNotFoundError("joint_diagonalize: matrix not semisimple over the rationals");
    }
    subs = std::move(next);
  }

  // canonicalize each subspace basis, then order by weight vector (desc lex)
  for (auto& sub : subs) {
    RatMat rows(int(sub.basis.size()), r);
    for (int i = 0; i < int(sub.basis.size()); ++i)
      for (int j = 0; j < r; ++j) rows(i, j) = sub.basis[i][j];
    Rref f = rref(rows);
    sub.basis.clear();
    for (int i = 0; i < f.rank; ++i) {
      std::vector<Rat> v(r);
      for (int j = 0; j < r; ++j) v[j] = f.R(i, j);
      sub.basis.push_back(std::move(v));
    }
  }
  std::stable_sort(subs.begin(), subs.end(),
                   [](const Sub& a, const Sub& b) { return a.weights > b.weights; });

  JointEigenbasis out;
  std::vector<std::vector<Rat>> cols;
  for (const auto& sub : subs)
    for (const auto& v : sub.basis) {
      cols.push_back(v);
      out.col_weights.push_back(sub.weights);
    }
  if (int(cols.size()) != r) throw GradingNotFoundError("joint_diagonalize: dimension mismatch");
  out.u = columns_to_matrix(cols);
  out.uinv = inverse(out.u);
  return out;
}

CommutingGrading finish_grading(const RatMat& basis, const std::vector<RatMat>& n_new,
                                const std::vector<RatMat>& y_new, int tier) {
  CommutingGrading g;
  g.basis = basis;
  g.basis_inv = inverse(basis);
  g.N = n_new;
  g.Y = y_new;
  g.tier = tier;
  const int k = int(n_new.size());
  for (int i = 0; i < k; ++i) {
    if (!g.Y[i].is_diagonal()) throw Error("grading: Y not diagonal");
    if (g.Y[i].trace() != 0) throw Error("grading: Y not trace-free");
    g.weights.push_back(g.Y[i].diagonal());
    if (g.N[i].is_zero()) {
      if (!g.Y[i].is_zero()) throw Error("grading: zero N with nonzero Y");
      g.Nminus.push_back(RatMat::zero(g.N[i].rows(), g.N[i].cols()));
      continue;
    }
    auto nm = solve_lowering(g.N[i], g.Y[i]);
    if (!nm) throw GradingNotFoundError("grading: pair does not complete to a triple");
    g.Nminus.push_back(*nm);
    Sl2Triple t{g.N[i], g.Y[i], g.Nminus[i]};
    if (!triple_brackets_exact(t)) throw Error("grading: bracket verification failed");
  }
  return g;
}

}  // namespace

CommutingGrading commuting_grading(const NilpotentFamily& family, int max_passes) {
  const int r = family.r;
  const int k = family.k;
  if (int(family.N.size()) != k) throw ValidationError("commuting_grading: malformed family");
  for (const auto& n : family.N)
    if (!is_nilpotent(n)) throw NotNilpotentFamilyError("commuting_grading: non-nilpotent member");
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (!comm(family.N[i], family.N[j]).is_zero())
        throw NonCommutingError(i, j, "commuting_grading: family does not commute");

  std::vector<int> nz;
  for (int i = 0; i < k; ++i)
    if (!family.N[i].is_zero()) nz.push_back(i);

  // All-zero family: trivial grading.
  if (nz.empty()) {
    std::vector<RatMat> zero(k, RatMat::zero(r, r));
    return finish_grading(RatMat::identity(r), zero, zero, 1);
  }

  // Tier 1: single nilpotent, Jordan route.
  if (nz.size() == 1) {
    const int i0 = nz[0];
    JordanData jd = jordan_data(family.N[i0]);
    RatMat yb, nmb;
    block_triple_parts(jd.chain_lengths, r, yb, nmb);
    std::vector<RatMat> n_new(k, RatMat::zero(r, r)), y_new(k, RatMat::zero(r, r));
    n_new[i0] = jd.ginv * family.N[i0] * jd.g;
    y_new[i0] = yb;
    return finish_grading(jd.g, n_new, y_new, 1);
  }

  // Tier 2: members supported on pairwise disjoint diagonal blocks.
  {
    std::vector<std::vector<int>> sup(k);
    bool disjoint = true;
    std::vector<bool> seen(r, false);
    for (int i : nz) {
      sup[i] = support_indices(family.N[i]);
      for (int t : sup[i]) {
        if (seen[t]) {
          disjoint = false;
          break;
        }
        seen[t] = true;
      }
      if (!disjoint) break;
    }
    if (disjoint) {
      RatMat g = RatMat::identity(r);
      std::vector<RatMat> n_new(k, RatMat::zero(r, r)), y_new(k, RatMat::zero(r, r));
      for (int i : nz) {
        JordanData jd = jordan_data(restrict_to(family.N[i], sup[i]));
        RatMat yb, nmb;
        block_triple_parts(jd.chain_lengths, int(sup[i].size()), yb, nmb);
        RatMat jform = jd.ginv * restrict_to(family.N[i], sup[i]) * jd.g;
        for (size_t a = 0; a < sup[i].size(); ++a)
          for (size_t b = 0; b < sup[i].size(); ++b) {
            g(sup[i][a], sup[i][b]) = jd.g(int(a), int(b));
            n_new[i](sup[i][a], sup[i][b]) = jform(int(a), int(b));
            y_new[i](sup[i][a], sup[i][b]) = yb(int(a), int(b));
          }
      }
      return finish_grading(g, n_new, y_new, 2);
    }
  }

  // Tier 3: general search. Work in an Engel flag basis; look for completable
  // grading candidates W_i of each N_i that commute pairwise, by alternating
  // exact linear solves over the per-N solution sets; then diagonalize them
  // simultaneously.
  RatMat g0 = engel_flag(family);
  RatMat g0inv = inverse(g0);
  std::vector<RatMat> m_i(k);
  for (int i = 0; i < k; ++i) m_i[i] = g0inv * family.N[i] * g0;

  {
    // fast path: every member already admits a completable diagonal grading
    auto diag = diagonal_tracefree_basis(r);
    std::vector<RatMat> n_new(k, RatMat::zero(r, r)), y_new(k, RatMat::zero(r, r));
    bool all_ok = true;
    for (int i : nz) {
      auto ct = jm_triple_constrained(m_i[i], diag);
      if (!ct.feasible) {
        all_ok = false;
        break;
      }
      n_new[i] = m_i[i];
      y_new[i] = ct.triple.Y;
    }
    if (all_ok) {
      for (int i = 0; i < k; ++i)
        if (family.N[i].is_zero()) n_new[i] = RatMat::zero(r, r);
      return finish_grading(g0, n_new, y_new, 3);
    }
  }

  const int rr = r * r;
  std::vector<RatMat> w(k);

  auto pairwise_commuting = [&]() {
    for (size_t a = 0; a < nz.size(); ++a)
      for (size_t b = a + 1; b < nz.size(); ++b)
        if (!comm(w[nz[a]], w[nz[b]]).is_zero()) return false;
    return true;
  };

  // One alternating pass re-solves W_i exactly over its affine set of
  // completable gradings subject to commutation with the frozen others;
  // infeasible solves keep the incumbent. Returns whether anything moved.
  auto alternating_pass = [&](const std::vector<int>& order) {
    bool changed = false;
    for (int i : order) {
      auto cz = centralizer_basis(m_i[i]);
      const int extra = int(nz.size()) - 1;
      RatMat a(rr + int(cz.size()) + extra * rr, rr);
      std::vector<Rat> b(size_t(a.rows()), Rat(0));
      // rows encode [M_i, W] = -2 M_i, i.e. [W, M_i] = 2 M_i
      RatMat adn = ad_matrix(m_i[i]);
      auto tn = vec(m_i[i] * rat(-2));
      for (int p = 0; p < rr; ++p) {
        for (int q = 0; q < rr; ++q) a(p, q) = adn(p, q);
        b[p] = tn[p];
      }
      for (size_t s = 0; s < cz.size(); ++s) {
        auto zv = vec(cz[s].transpose());
        // tr(W Z) = sum_{p,q} W_pq Z_qp
        for (int q = 0; q < rr; ++q) a(rr + int(s), q) = zv[q];
      }
      int row = rr + int(cz.size());
      for (int j : nz) {
        if (j == i) continue;
        RatMat adwj = ad_matrix(w[j]);
        // [W, W_j] = 0  <=>  ad(W_j) vec(W) = 0, up to sign
        for (int p = 0; p < rr; ++p)
          for (int q = 0; q < rr; ++q) a(row + p, q) = adwj(p, q);
        row += rr;
      }
      auto sol = solve_linear(a, b);
      if (!sol.feasible) continue;
      auto wv = closest_solution(sol, vec(w[i]));
      RatMat wnew = unvec(wv, r, r);
      if (wnew != w[i]) {
        w[i] = std::move(wnew);
        changed = true;
      }
    }
    return changed;
  };

  // Solve W in S_i with the extra linear constraint [W, anchor] = 0; keeps
  // the incumbent when infeasible.
  auto anchored_solve = [&](int i, const RatMat& anchor) {
    auto cz = centralizer_basis(m_i[i]);
    RatMat a(rr + int(cz.size()) + rr, rr);
    std::vector<Rat> b(size_t(a.rows()), Rat(0));
    RatMat adn = ad_matrix(m_i[i]);
    auto tn = vec(m_i[i] * rat(-2));
    for (int p = 0; p < rr; ++p) {
      for (int q = 0; q < rr; ++q) a(p, q) = adn(p, q);
      b[p] = tn[p];
    }
    for (size_t s = 0; s < cz.size(); ++s) {
      auto zv = vec(cz[s].transpose());
      for (int q = 0; q < rr; ++q) a(rr + int(s), q) = zv[q];
    }
    RatMat ada = ad_matrix(anchor);
    for (int p = 0; p < rr; ++p)
      for (int q = 0; q < rr; ++q) a(rr + int(cz.size()) + p, q) = ada(p, q);
    auto sol = solve_linear(a, b);
    if (sol.feasible) w[i] = unvec(closest_solution(sol, vec(w[i])), r, r);
  };

  bool ok = false;
  for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
    for (int i : nz) w[i] = jm_triple(m_i[i]).Y;
    std::vector<int> order = nz;
    if (attempt == 1) std::reverse(order.begin(), order.end());
    if (attempt == 2) {
      // anchor to the grading of the summed nilpotent: for families with a
      // joint grading the sum is graded by the same element, so its Jordan
      // grading points at the right chamber
      RatMat total = RatMat::zero(r, r);
      for (int i : nz) total += m_i[i];
      if (!total.is_zero() && is_nilpotent(total)) {
        const RatMat anchor = jm_triple(total).Y;
        for (int i : nz) anchored_solve(i, anchor);
      }
    }
    ok = pairwise_commuting();
    for (int pass = 0; pass < max_passes && !ok; ++pass) {
      const bool changed = alternating_pass(order);
      ok = pairwise_commuting();
      if (ok || !changed) break;
    }
  }
  if (!ok)
    throw GradingNotFoundError(
        "commuting_grading: alternating search found no commuting grading set");

  std::vector<RatMat> w_nz;
  for (int i : nz) w_nz.push_back(w[i]);
  JointEigenbasis je = joint_diagonalize(w_nz, r);

  std::vector<RatMat> n_new(k, RatMat::zero(r, r)), y_new(k, RatMat::zero(r, r));
  for (size_t t = 0; t < nz.size(); ++t) {
    const int i = nz[t];
    n_new[i] = je.uinv * m_i[i] * je.u;
    for (int j = 0; j < r; ++j) y_new[i](j, j) = je.col_weights[j][t];
  }
  return finish_grading(g0 * je.u, n_new, y_new, 3);
}

// ---------------------------------------------------------------------------
// Weight filtrations, Kostant certificates
// ---------------------------------------------------------------------------

std::vector<int> WeightFiltration::filtration_indices(long kk) const {
  std::vector<int> idx;
  for (int j = 0; j < int(weight_of_index.size()); ++j)
    if (weight_of_index[j] <= kk) idx.push_back(j);
  return idx;
}

WeightFiltration weight_filtration(const RatMat& y_diag, const RatMat& n) {
  if (!y_diag.square() || !n.square() || y_diag.rows() != n.rows())
    throw DimensionError("weight_filtration: shape mismatch");
  if (!y_diag.is_diagonal()) throw NotATripleError("weight_filtration: Y must be diagonal");
  const int r = n.rows();
  if (comm(y_diag, n) != n * rat(2))
    throw NotATripleError("weight_filtration: [Y, N] != 2N");
  if (!n.is_zero()) {
    if (!solve_lowering(n, y_diag))
      throw NotATripleError("weight_filtration: pair does not complete to a triple");
  } else if (!y_diag.is_zero()) {
    throw NotATripleError("weight_filtration: zero N with nonzero Y");
  }
  WeightFiltration out;
  for (int j = 0; j < r; ++j) {
    const Rat& wj = y_diag(j, j);
    if (!is_integer(wj)) throw NotATripleError("weight_filtration: non-integer weight");
    out.weight_of_index.push_back(num_long(wj));
  }
  out.weights_sorted = out.weight_of_index;
  std::sort(out.weights_sorted.begin(), out.weights_sorted.end());
  out.weights_sorted.erase(std::unique(out.weights_sorted.begin(), out.weights_sorted.end()),
                           out.weights_sorted.end());
  // the transposed operator lowers weight by exactly two
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (n(j, i) != 0 && out.weight_of_index[i] != out.weight_of_index[j] - 2)
        throw NotATripleError("weight_filtration: transpose does not lower weight by 2");
  return out;
}

KostantCertificate kostant_check(const RatMat& n, const RatMat& y1, const RatMat& y2) {
  if (comm(y1, n) != n * rat(2) || comm(y2, n) != n * rat(2))
    throw ValidationError("kostant_check: inputs do not satisfy [Y, N] = 2N");
  const int r = n.rows();
  KostantCertificate c;
  RatMat d = y1 - y2;
  c.in_kernel = comm(n, d).is_zero();
  c.in_image = solve_linear(ad_matrix(n), vec(d)).feasible;
  c.nilpotent = mat_pow(d, r).is_zero();
  std::ostringstream os;
  if (y1.is_diagonal() && y2.is_diagonal()) {
    auto cz = centralizer_basis(n);
    if (trace_orthogonal_to_centralizer(y1, cz) && trace_orthogonal_to_centralizer(y2, cz)) {
      c.diag_equal = d.is_zero();
      if (!c.diag_equal) os << "completable diagonal gradings differ; ";
    }
  }
  if (!c.in_kernel) os << "difference not in ker(ad N); ";
  if (!c.in_image) os << "difference not in im(ad N); ";
  if (!c.nilpotent) os << "difference not nilpotent; ";
  c.pass = c.in_kernel && c.in_image && c.nilpotent && c.diag_equal;
  c.detail = os.str();
  return c;
}

}  // namespace nilflow::lie
