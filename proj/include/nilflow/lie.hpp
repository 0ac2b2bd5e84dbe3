#pragma once

// Commuting unipotent families and their graded structure: validation,
// common triangularizing flags, sl2-triples, joint diagonal semisimple
// elements, weight filtrations, and uniqueness certificates.
//
// Orientation convention used throughout the project: [Y, N] = 2N,
// [Y, N-] = -2 N-, [N, N-] = Y. The grading element Y raises weights along N
// and the transposed (section-level) operator lowers them by 2.

#include <optional>
#include <string>
#include <vector>

#include "nilflow/numlin.hpp"

namespace nilflow::lie {

struct MonodromyFamily {
  int r = 0, k = 0;
  std::vector<RatMat> gammas;  // integer entries, det 1, unipotent, commuting
};

struct NilpotentFamily {
  int r = 0, k = 0;
  std::vector<RatMat> N;  // exact logs of the monodromies
  std::optional<RatMat> flag_basis;
};

struct ValidatedFamily {
  MonodromyFamily monodromy;
  NilpotentFamily nilpotents;
};

struct Sl2Triple {
  RatMat N, Y, Nminus;
};

// All three bracket relations, checked exactly.
bool triple_brackets_exact(const Sl2Triple& t);

struct CommutingGrading {
  RatMat basis;      // g: columns form the adapted basis
  RatMat basis_inv;  // g^{-1}
  std::vector<RatMat> N;        // g^{-1} N_i g
  std::vector<RatMat> Y;        // diagonal, [Y_i, Y_j] = 0, tr Y_i = 0
  std::vector<RatMat> Nminus;   // zero matrix where N_i = 0
  std::vector<std::vector<Rat>> weights;  // a_i^j = (Y_i)_jj
  int tier = 0;  // 1: single-N Jordan, 2: disjoint blocks, 3: general search
};

struct WeightFiltration {
  std::vector<long> weight_of_index;  // integer Y-eigenvalue per basis index
  std::vector<long> weights_sorted;   // distinct weights, ascending
  // Indices spanning W_k = sum of eigenspaces with weight <= k.
  std::vector<int> filtration_indices(long k) const;
};

struct KostantCertificate {
  bool pass = false;
  bool in_kernel = false;    // [N, Y1 - Y2] = 0
  bool in_image = false;     // Y1 - Y2 = [N, X] solvable
  bool nilpotent = false;    // (Y1 - Y2)^r = 0
  bool diag_equal = true;    // when both diagonal and completable: Y1 == Y2
  std::string detail;
};

struct ConstrainedTriple {
  bool feasible = false;
  Sl2Triple triple;            // valid when feasible
  std::vector<Rat> witness;    // y with y^T A = 0, y^T b != 0 on the stacked system
  Rat witness_residual;
};

// ---------------------------------------------------------------------------

// Checks det = 1, unipotency, pairwise commutation (errors carry a witness
// pair) and integrality, then takes exact logs.
ValidatedFamily validate_family(const std::vector<RatMat>& gammas);

// Invertible g with every g^{-1} N_i g strictly upper triangular, built by
// peeling common kernel vectors. The kernel vector at each stage is the
// canonical nullspace basis vector with the smallest leading index, so a
// family that is already strictly upper triangular yields g = I.
RatMat engel_flag(const NilpotentFamily& family);

// Jacobson-Morozov triple through the Jordan normal form of N, conjugated
// back to the input basis. Per Jordan block of size m the weights are
// m-1, m-3, ..., -(m-1) and the lowering entries are i(m-i).
Sl2Triple jm_triple(const RatMat& n);

// Solves { [Y,N] = 2N, tr(Y Z) = 0 for Z in the centralizer of N } for Y in
// the span of constraint_basis; orthogonality to the centralizer is exactly
// completability (Y in Im ad N). The lowering element is then the unique
// solution of { [N,M] = Y, [Y,M] = -2M }.
ConstrainedTriple jm_triple_constrained(const RatMat& n,
                                        const std::vector<RatMat>& constraint_basis);

std::vector<RatMat> diagonal_tracefree_basis(int r);

// Basis g and diagonal Y_i completing each N_i, via a tiered strategy:
// single-N Jordan, blockwise Jordan for disjoint-support families, otherwise
// an alternating-solve search over the per-N completable grading sets
// followed by exact joint diagonalization. Throws GradingNotFoundError when
// the search budget is exhausted.
CommutingGrading commuting_grading(const NilpotentFamily& family, int max_passes = 32);

WeightFiltration weight_filtration(const RatMat& y_diag, const RatMat& n);

// Kostant uniqueness certificate for two grading candidates of the same N.
KostantCertificate kostant_check(const RatMat& n, const RatMat& y1, const RatMat& y2);

// Basis of { Z : [N, Z] = 0 } in gl(r).
std::vector<RatMat> centralizer_basis(const RatMat& n);

}  // namespace nilflow::lie
