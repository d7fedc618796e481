#pragma once

// Semidefinite programming backend.
//
// The problem is exchanged as plain data so that the backend can be swapped:
//
//   maximize    b' y
//   subject to  C_k - sum_i y_i A_{i,k}  >= 0   (PSD, one per block k)
//               c   - D y                >= 0   (elementwise)
//
// Block matrices are passed in svec form: the upper triangle stored column by
// column with off-diagonal entries scaled by sqrt(2), so that
// <S, T> = svec(S)' svec(T).

#include <string>
#include <vector>

#include "sncert/plant.hpp"

namespace sncert::sdp {

int svec_size(int n);
Vector svec(const Matrix& s);
Matrix smat(const Vector& v, int n);

struct BlockTerm {
  int variable = 0;
  int block = 0;
  Vector coefficients;  // svec of A_{variable, block}
};

struct Problem {
  int num_variables = 0;
  std::vector<int> block_sizes;
  std::vector<Vector> block_constants;  // svec of C_k, one per block
  std::vector<BlockTerm> terms;
  Vector lp_constant;  // c
  Matrix lp_matrix;    // D, lp_constant.size() x num_variables
  Vector objective;    // b

  // Throws ContractViolation on inconsistent shapes.
  void validate() const;
};

enum class Status {
  Solved,
  Infeasible,  // no y satisfies the constraints (Farkas certificate found)
  Unbounded,
  IterationLimit,
  NumericalFailure,
};

std::string to_string(Status status);

struct Options {
  double gap_tol = 1e-9;
  double feasibility_tol = 1e-9;
  double infeasibility_tol = 1e-9;
  int max_iterations = 120;
  double step_fraction = 0.98;
};

struct Result {
  Status status = Status::NumericalFailure;
  Vector y;
  std::vector<Matrix> slack;  // Z_k = C_k - sum_i y_i A_{i,k}
  Vector lp_slack;
  std::vector<Matrix> dual;   // X_k
  Vector lp_dual;
  double primal_objective = 0.0;  // b'y
  double dual_objective = 0.0;    // <C, X>
  double relative_gap = 0.0;
  double feasibility_residual = 0.0;  // of the y-problem
  int iterations = 0;
  std::string message;
};

// Mehrotra predictor-corrector, HKM search direction, infeasible start.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace sncert::sdp
