#include "hmmop/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hmmop {

namespace {

constexpr double kSingularRcond = 1e-13;

void check_keep(double p, const char* name) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in (0, 1]");
}

void check_square(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw std::invalid_argument("matrix must be square and non-empty");
}

Eigen::PartialPivLU<Matrix> factor(const Matrix& a, const char* what) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const double rc = lu.rcond();
  if (!(rc > kSingularRcond)) {
    throw std::runtime_error(std::string(what) + " is singular (rcond " + std::to_string(rc) + ")");
  }
  return lu;
}

Matrix inverse(const Matrix& a, const char* what) {
  return factor(a, what).solve(Matrix::Identity(a.rows(), a.cols()));
}

Eigen::RowVectorXd project_to_simplex(const Eigen::RowVectorXd& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

}  // namespace

Matrix omit_transform(const Matrix& T, double p_c) {
  check_square(T);
  check_keep(p_c, "p_c");
  const Eigen::Index n = T.rows();
  const Matrix a = Matrix::Identity(n, n) - (1.0 - p_c) * T;
  // T commutes with [I - (1 - p_c) T]^{-1}.
  return p_c * factor(a, "I - (1 - p_c) T").solve(T);
}

Matrix omit_transform_truncated(const Matrix& T, double p_c, int order) {
  check_square(T);
  check_keep(p_c, "p_c");
  if (order < 0) throw std::invalid_argument("truncation order must be non-negative");
  const Eigen::Index n = T.rows();
  const Matrix step = (1.0 - p_c) * T;
  Matrix power = Matrix::Identity(n, n);
  Matrix sum = power;
  for (int k = 1; k <= order; ++k) {
    power = power * step;
    sum += power;
  }
  const double norm = p_c / (1.0 - std::pow(1.0 - p_c, order + 1));
  return norm * T * sum;
}

InversionResult invert_omit_transform(const Matrix& T_r, double p_c, bool project) {
  check_square(T_r);
  check_keep(p_c, "p_c");
  const Eigen::Index n = T_r.rows();
  const Matrix a = p_c * Matrix::Identity(n, n) + (1.0 - p_c) * T_r;
  InversionResult out;
  out.transition = factor(a, "p_c I + (1 - p_c) T_r").solve(T_r);
  out.most_negative = std::min(0.0, out.transition.minCoeff());
  if (project && out.has_negative()) {
    out.transition = project_rows_to_simplex(out.transition);
    out.projected = true;
  }
  return out;
}

Matrix composed_mismatch(const Matrix& T, double p_q, double p_c) {
  check_square(T);
  check_keep(p_q, "p_q");
  check_keep(p_c, "p_c");
  const Eigen::Index n = T.rows();
  const double ratio = p_c / p_q;
  const Matrix t_inv = inverse(T, "T");
  return inverse(ratio * t_inv + (1.0 - ratio) * Matrix::Identity(n, n), "composed system");
}

double estimate_keep_prob(const Matrix& T, const std::function<Matrix(double)>& mismatch_fn) {
  check_square(T);
  const Eigen::Index n = T.rows();
  const Matrix target = inverse(T, "T") - Matrix::Identity(n, n);

  constexpr double kStep = 1e-4;
  Matrix derivative = Matrix::Zero(n, n);
  for (double p : {0.5, 0.8}) {
    const Matrix hi = inverse(mismatch_fn(p + kStep), "composed matrix");
    const Matrix lo = inverse(mismatch_fn(p - kStep), "composed matrix");
    derivative += (hi - lo) / (2.0 * kStep);
  }
  derivative /= 2.0;

  // p_q * D = T^{-1} - I in the least-squares sense.
  const double dd = derivative.squaredNorm();
  if (!(dd > 1e-18) || target.squaredNorm() < 1e-18) {
    throw std::domain_error("keep probability unidentifiable: derivative vanishes (T close to identity)");
  }
  return derivative.cwiseProduct(target).sum() / dd;
}

Matrix naive_limit_markov_omission(const Matrix& T, double p_c, double eps) {
  check_square(T);
  if (!(p_c + eps > 0.0 && p_c + eps <= 1.0) || !((1.0 - p_c) + eps >= 0.0 && (1.0 - p_c) + eps < 1.0) ||
      !(p_c - eps >= 0.0)) {
    throw std::invalid_argument("invalid Markov omission parameters");
  }
  const Eigen::Index n = T.rows();
  const Matrix I = Matrix::Identity(n, n);
  const double stay_missing = 1.0 - p_c + eps;
  const double ratio = ((p_c - eps) / (p_c + eps)) * ((1.0 - p_c - eps) / stay_missing);
  const Matrix resolvent = inverse(I - stay_missing * T, "I - (1 - p_c + eps) T");
  Matrix out = (p_c + eps) * T * (I + ratio * (resolvent - I));
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) /= out.row(i).sum();
  return out;
}

Matrix project_rows_to_simplex(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = project_to_simplex(m.row(i));
  return out;
}

SemiAnalyticResult semi_analytic_reconstruct(const Dataset& data, double p_c,
                                             const std::function<HmmModel(const Dataset&)>& hmm_fit, bool project) {
  check_keep(p_c, "p_c");
  HmmModel naive = hmm_fit(data);
  InversionResult inversion = invert_omit_transform(naive.T(), p_c, project);
  std::optional<HmmModel> model;
  if (inversion.stochastic()) {
    model = HmmModel(TransitionMatrix(inversion.transition), naive.emission(), naive.initial());
  }
  return {std::move(naive), std::move(inversion), std::move(model)};
}

}  // namespace hmmop
