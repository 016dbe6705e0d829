#pragma once

// Integer least-squares ambiguity resolution (LAMBDA decorrelation and
// search-and-shrink enumeration) plus the fixed-solution update.

#include <cstddef>
#include <optional>
#include <vector>

#include "lar/types.hpp"

namespace lar {

struct FloatSolution;

// Q = L^T diag(D) L with L unit lower triangular (LAMBDA convention, the
// factorization runs from the last index backwards).
struct LtdlFactor {
  MatrixXd L;
  VectorXd D;
};

LtdlFactor ltdl_decompose(const MatrixXd& Q);

struct Decorrelation {
  MatrixXd Z;         // integer valued, |det Z| = 1
  MatrixXd Zinv_t;    // Z^-T, integer valued
  MatrixXd Qzz;       // Z^T Q Z
  LtdlFactor factor;  // of Qzz
};

Decorrelation decorrelate(const MatrixXd& Q);

struct IlsResult {
  std::vector<IntVector> candidates;  // ascending squared norm
  std::vector<double> squared_norms;
};

inline constexpr std::size_t kDefaultNodeLimit = 50'000'000;

IlsResult ils_search(const VectorXd& a_float, const MatrixXd& Q, int num_candidates = 2,
                     std::size_t node_limit = kDefaultNodeLimit);

// Bootstrapped success rate on the decorrelated ambiguities.
double bootstrapped_success_rate(const MatrixXd& Q);

struct AmbiguityProblem {
  VectorXd a;    // float ambiguities, cycles
  MatrixXd Qaa;
  VectorXd g;    // remaining unknowns
  MatrixXd Qgg;
  MatrixXd Qga;  // rows of g, columns of a

  static AmbiguityProblem from_float(const FloatSolution& solution);
  void validate() const;
};

struct FixedRest {
  VectorXd g;
  MatrixXd Qgg;
};

FixedRest fix_and_backsubstitute(const AmbiguityProblem& problem, const IntVector& a_fixed);

bool acceptance_test(double success_rate, double threshold, bool full_resolution = false);

struct ResolveOptions {
  double threshold = 0.999;
  bool full_resolution = false;  // bypass the success-rate test
  int candidates = 2;
  std::size_t node_limit = kDefaultNodeLimit;
};

struct AmbiguityOutcome {
  IntVector fixed;
  double success_rate = 0.0;
  bool accepted = false;
  std::optional<FixedRest> rest;  // present when accepted
  std::vector<double> squared_norms;
};

AmbiguityOutcome resolve(const AmbiguityProblem& problem, const ResolveOptions& options = {});

}  // namespace lar
