#include "lar/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lar/errors.hpp"
#include "lar/fusion_estimator.hpp"

namespace lar {

namespace {

void require_symmetric(const MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw ArgumentError("covariance must be square and non-empty");
  if (!Q.allFinite()) throw ArgumentError("covariance has non-finite entries");
  const double scale = Q.cwiseAbs().maxCoeff();
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ArgumentError("covariance is not symmetric");
  }
}

double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

bool lex_less(const IntVector& x, const IntVector& y) {
  return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

}  // namespace

LtdlFactor ltdl_decompose(const MatrixXd& Qin) {
  require_symmetric(Qin);
  const int n = static_cast<int>(Qin.rows());
  MatrixXd Q = Qin;
  LtdlFactor f;
  f.L = MatrixXd::Zero(n, n);
  f.D = VectorXd::Zero(n);
  for (int i = n - 1; i >= 0; --i) {
    f.D(i) = Q(i, i);
    if (!(f.D(i) > 0.0)) throw ArgumentError("covariance matrix is not positive definite");
    const double root = std::sqrt(Q(i, i));
    f.L.row(i).head(i + 1) = Q.row(i).head(i + 1) / root;
    for (int j = 0; j < i; ++j) {
      Q.row(j).head(j + 1) -= f.L.row(i).head(j + 1) * f.L(i, j);
    }
    f.L.row(i).head(i + 1) /= f.L(i, i);
  }
  return f;
}

Decorrelation decorrelate(const MatrixXd& Q) {
  const int n = static_cast<int>(Q.rows());
  Decorrelation out;
  out.factor = ltdl_decompose(Q);
  MatrixXd& L = out.factor.L;
  VectorXd& D = out.factor.D;
  out.Z = MatrixXd::Identity(n, n);
  out.Zinv_t = MatrixXd::Identity(n, n);

  int i1 = n - 2;
  bool swapped = true;
  while (swapped) {
    int i = n - 1;
    swapped = false;
    while (!swapped && i > 0) {
      --i;
      if (i <= i1) {
        for (int j = i + 1; j < n; ++j) {
          const double mu = std::round(L(j, i));
          if (mu != 0.0) {
            L.col(i).tail(n - j) -= mu * L.col(j).tail(n - j);
            out.Zinv_t.col(j) += mu * out.Zinv_t.col(i);
            out.Z.col(i) -= mu * out.Z.col(j);
          }
        }
      }
      const double delta = D(i) + L(i + 1, i) * L(i + 1, i) * D(i + 1);
      if (delta < D(i + 1) * (1.0 - 1e-12)) {
        const double lambda = D(i + 1) * L(i + 1, i) / delta;
        const double eta = D(i) / delta;
        D(i) = eta * D(i + 1);
        D(i + 1) = delta;
        if (i > 0) {
          Eigen::Matrix2d t;
          t << -L(i + 1, i), 1.0, eta, lambda;
          const MatrixXd rows = t * L.block(i, 0, 2, i);
          L.block(i, 0, 2, i) = rows;
        }
        L(i + 1, i) = lambda;
        if (i + 2 < n) L.col(i).tail(n - i - 2).swap(L.col(i + 1).tail(n - i - 2));
        out.Zinv_t.col(i).swap(out.Zinv_t.col(i + 1));
        out.Z.col(i).swap(out.Z.col(i + 1));
        i1 = i;
        swapped = true;
      }
    }
  }
  out.Qzz = out.Z.transpose() * Q * out.Z;
  out.Qzz = (0.5 * (out.Qzz + out.Qzz.transpose())).eval();
  return out;
}

IlsResult ils_search(const VectorXd& a_float, const MatrixXd& Q, int num_candidates,
                     std::size_t node_limit) {
  if (num_candidates < 1) throw ArgumentError("need at least one candidate");
  if (a_float.size() != Q.rows()) throw ArgumentError("float ambiguities and covariance disagree in size");
  if (!a_float.allFinite()) throw ArgumentError("float ambiguities are not finite");
  const int n = static_cast<int>(Q.rows());
  const Decorrelation dec = decorrelate(Q);
  const MatrixXd& L = dec.factor.L;
  const VectorXd& D = dec.factor.D;

  const VectorXd z_full = dec.Z.transpose() * a_float;
  const VectorXd shift = z_full.array().floor().matrix();
  const VectorXd zhat = z_full - shift;

  const int nc = num_candidates;
  std::vector<VectorXd> found(nc, VectorXd::Zero(n));
  std::vector<double> norms(nc, std::numeric_limits<double>::infinity());
  double chi2 = std::numeric_limits<double>::infinity();
  int stored = 0;
  int imax = nc - 1;

  VectorXd dist = VectorXd::Zero(n), acond(n), zcond(n), step(n);
  MatrixXd S = MatrixXd::Zero(n, n);
  int k = n - 1;
  acond(k) = zhat(k);
  zcond(k) = std::round(acond(k));
  double left = acond(k) - zcond(k);
  step(k) = sign_or_one(left);

  std::size_t nodes = 0;
  for (;;) {
    if (++nodes > node_limit) throw ResourceError("integer search exceeded its node limit");
    const double newdist = dist(k) + left * left / D(k);
    if (newdist < chi2) {
      if (k != 0) {
        --k;
        dist(k) = newdist;
        S.row(k).head(k + 1) =
            S.row(k + 1).head(k + 1) + (zcond(k + 1) - acond(k + 1)) * L.row(k + 1).head(k + 1);
        acond(k) = zhat(k) + S(k, k);
        zcond(k) = std::round(acond(k));
        left = acond(k) - zcond(k);
        step(k) = sign_or_one(left);
      } else {
        if (stored < nc - 1) {
          found[stored] = zcond;
          norms[stored] = newdist;
          ++stored;
        } else {
          found[imax] = zcond;
          norms[imax] = newdist;
          imax = static_cast<int>(std::max_element(norms.begin(), norms.end()) - norms.begin());
          chi2 = norms[imax];
        }
        zcond(0) += step(0);
        left = acond(0) - zcond(0);
        step(0) = -step(0) - sign_or_one(step(0));
      }
    } else {
      if (k == n - 1) break;
      ++k;
      zcond(k) += step(k);
      left = acond(k) - zcond(k);
      step(k) = -step(k) - sign_or_one(step(k));
    }
  }

  struct Entry {
    IntVector a;
    double norm;
  };
  std::vector<Entry> entries;
  for (int c = 0; c < nc; ++c) {
    if (!std::isfinite(norms[c])) continue;
    const VectorXd a = dec.Zinv_t * (found[c] + shift);
    entries.push_back({a.array().round().cast<std::int64_t>().matrix(), norms[c]});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) { return x.norm < y.norm; });
  // Equal norms: lexicographically smallest first.
  for (std::size_t c = 0; c + 1 < entries.size(); ++c) {
    const double tol = 1e-12 * std::max(1.0, entries[c].norm);
    if (entries[c + 1].norm - entries[c].norm <= tol && lex_less(entries[c + 1].a, entries[c].a)) {
      std::swap(entries[c], entries[c + 1]);
    }
  }

  IlsResult result;
  for (auto& e : entries) {
    result.candidates.push_back(std::move(e.a));
    result.squared_norms.push_back(e.norm);
  }
  return result;
}

double bootstrapped_success_rate(const MatrixXd& Q) {
  const Decorrelation dec = decorrelate(Q);
  double ps = 1.0;
  for (int i = 0; i < dec.factor.D.size(); ++i) {
    ps *= std::erf(1.0 / (2.0 * std::sqrt(2.0 * dec.factor.D(i))));
  }
  return std::clamp(ps, 0.0, 1.0);
}

AmbiguityProblem AmbiguityProblem::from_float(const FloatSolution& solution) {
  AmbiguityProblem p;
  p.a = solution.ambiguities();
  p.Qaa = solution.Qaa();
  p.g = solution.rest();
  p.Qgg = solution.Qgg();
  p.Qga = solution.Qga();
  return p;
}

void AmbiguityProblem::validate() const {
  const auto k = a.size();
  const auto r = g.size();
  if (Qaa.rows() != k || Qaa.cols() != k || Qgg.rows() != r || Qgg.cols() != r ||
      Qga.rows() != r || Qga.cols() != k) {
    throw ArgumentError("ambiguity problem blocks have inconsistent dimensions");
  }
}

FixedRest fix_and_backsubstitute(const AmbiguityProblem& problem, const IntVector& a_fixed) {
  problem.validate();
  if (a_fixed.size() != problem.a.size()) throw ArgumentError("fixed ambiguity vector has the wrong length");
  Eigen::LLT<MatrixXd> llt(problem.Qaa);
  if (llt.info() != Eigen::Success) throw ArgumentError("ambiguity covariance is singular");
  const VectorXd diff = problem.a - a_fixed.cast<double>();
  FixedRest out;
  out.g = problem.g - problem.Qga * llt.solve(diff);
  out.Qgg = problem.Qgg - problem.Qga * llt.solve(problem.Qga.transpose());
  out.Qgg = (0.5 * (out.Qgg + out.Qgg.transpose())).eval();
  return out;
}

bool acceptance_test(double success_rate, double threshold, bool full_resolution) {
  return full_resolution || success_rate >= threshold;
}

AmbiguityOutcome resolve(const AmbiguityProblem& problem, const ResolveOptions& options) {
  problem.validate();
  AmbiguityOutcome out;
  const IlsResult ils = ils_search(problem.a, problem.Qaa, std::max(1, options.candidates),
                                   options.node_limit);
  out.fixed = ils.candidates.front();
  out.squared_norms = ils.squared_norms;
  out.success_rate = bootstrapped_success_rate(problem.Qaa);
  out.accepted = acceptance_test(out.success_rate, options.threshold, options.full_resolution);
  if (out.accepted) out.rest = fix_and_backsubstitute(problem, out.fixed);
  return out;
}

}  // namespace lar
