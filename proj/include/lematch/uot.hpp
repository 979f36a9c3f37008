#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lematch/errors.hpp"

// Entropic unbalanced optimal transport:
//
//   min_{G >= 0}  <G, C> + lambda KL(G 1 || a) + mu KL(G^T 1 || b) - eps H(G)
//
// with H(G) = -sum G (log G - 1) and generalized KL(p||q) = sum p log(p/q) - p + q.
// Solved by generalized Sinkhorn scaling on K = exp(-C/eps) with damped exponents
// lambda/(lambda+eps) and mu/(mu+eps). A log-domain path takes over automatically
// when eps is sharp or the scaling vectors drift out of floating-point range.

namespace lematch {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct TransportPlanT {
  MatrixX<Scalar> gamma;
  int iterations = 0;
  bool converged = false;
  Scalar final_residual = std::numeric_limits<Scalar>::infinity();
  Scalar objective = Scalar(0);
  std::vector<Scalar> objective_trace;  // filled when SolveOptions::trace_every > 0
};

using TransportPlan = TransportPlanT<double>;

enum class SolveMode { Auto, Plain, Log };

struct SolveOptions {
  int max_iters = 2000;
  double tol = 1e-8;       // max-norm change of log-scaling vectors per sweep
  SolveMode mode = SolveMode::Auto;
  int trace_every = 0;     // record the objective every k sweeps (0 = off)
};

// Generalized KL divergence, defined for unnormalized p; 0 log 0 := 0.
template <typename DerP, typename DerQ>
typename DerP::Scalar generalized_kl(const Eigen::MatrixBase<DerP>& p_expr,
                                     const Eigen::MatrixBase<DerQ>& q_expr) {
  using Scalar = typename DerP::Scalar;
  const VectorX<Scalar> p = p_expr.derived();
  const VectorX<Scalar> q = q_expr.derived();
  if (p.size() != q.size()) throw InputError("generalized_kl: size mismatch");
  Scalar total = Scalar(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(q[i] > Scalar(0))) throw InputError("generalized_kl: reference entries must be positive");
    if (p[i] > Scalar(0)) total += p[i] * std::log(p[i] / q[i]);
    total += q[i] - p[i];
  }
  return total;
}

// H(G) = -sum G (log G - 1), zero entries contributing nothing.
template <typename Derived>
typename Derived::Scalar plan_entropy(const Eigen::MatrixBase<Derived>& gamma_expr) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> gamma = gamma_expr.derived();
  Scalar total = Scalar(0);
  for (Eigen::Index j = 0; j < gamma.cols(); ++j)
    for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
      const Scalar g = gamma(i, j);
      if (g > Scalar(0)) total -= g * (std::log(g) - Scalar(1));
    }
  return total;
}

template <typename DerG, typename DerC, typename DerA, typename DerB>
typename DerG::Scalar uot_objective(const Eigen::MatrixBase<DerG>& gamma_expr,
                                    const Eigen::MatrixBase<DerC>& cost_expr,
                                    const Eigen::MatrixBase<DerA>& a_expr,
                                    const Eigen::MatrixBase<DerB>& b_expr,
                                    typename DerG::Scalar lambda, typename DerG::Scalar mu,
                                    typename DerG::Scalar epsilon) {
  using Scalar = typename DerG::Scalar;
  const MatrixX<Scalar> gamma = gamma_expr.derived();
  const MatrixX<Scalar> cost = cost_expr.derived();
  if (gamma.rows() != cost.rows() || gamma.cols() != cost.cols())
    throw InputError("uot_objective: plan/cost shape mismatch");
  if ((gamma.array() < Scalar(0)).any())
    throw InputError("uot_objective: plan entries must be nonnegative");
  const Scalar transport = (gamma.array() * cost.array()).sum();
  const Scalar kl_rows = generalized_kl(gamma.rowwise().sum(), a_expr);
  const Scalar kl_cols = generalized_kl(gamma.colwise().sum().transpose(), b_expr);
  return transport + lambda * kl_rows + mu * kl_cols - epsilon * plan_entropy(gamma);
}

namespace detail {

// r_i = log sum_j exp(M(i,j) + w(j))
template <typename Scalar>
VectorX<Scalar> log_sum_exp_rows(const MatrixX<Scalar>& m, const VectorX<Scalar>& w) {
  VectorX<Scalar> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Scalar peak = (m.row(i).transpose() + w).maxCoeff();
    out[i] = peak + std::log(((m.row(i).transpose() + w).array() - peak).exp().sum());
  }
  return out;
}

// r_j = log sum_i exp(M(i,j) + w(i))
template <typename Scalar>
VectorX<Scalar> log_sum_exp_cols(const MatrixX<Scalar>& m, const VectorX<Scalar>& w) {
  VectorX<Scalar> out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Scalar peak = (m.col(j) + w).maxCoeff();
    out[j] = peak + std::log(((m.col(j) + w).array() - peak).exp().sum());
  }
  return out;
}

}  // namespace detail

template <typename DerC, typename DerA, typename DerB>
TransportPlanT<typename DerC::Scalar> solve_uot(const Eigen::MatrixBase<DerC>& cost_expr,
                                                const Eigen::MatrixBase<DerA>& a_expr,
                                                const Eigen::MatrixBase<DerB>& b_expr,
                                                typename DerC::Scalar lambda,
                                                typename DerC::Scalar mu,
                                                typename DerC::Scalar epsilon,
                                                const SolveOptions& opts = {}) {
  using Scalar = typename DerC::Scalar;
  const MatrixX<Scalar> cost = cost_expr.derived();
  const VectorX<Scalar> a = a_expr.derived();
  const VectorX<Scalar> b = b_expr.derived();

  if (!(epsilon > Scalar(0))) throw ConfigError("epsilon must be > 0");
  if (!(lambda > Scalar(0)) || !(mu > Scalar(0)))
    throw ConfigError("marginal penalties lambda and mu must be > 0");
  if (opts.max_iters < 1) throw ConfigError("max_iters must be a positive integer");
  if (!(opts.tol > 0)) throw ConfigError("tol must be > 0");
  if (a.size() != cost.rows() || b.size() != cost.cols())
    throw InputError("mass vectors must match the cost matrix dimensions");
  if (a.size() == 0 || b.size() == 0)
    throw InputError("solve_uot requires a non-empty problem on both sides");
  if (!cost.allFinite() || cost.minCoeff() < Scalar(0))
    throw InputError("cost matrix must be finite and nonnegative");
  if (a.minCoeff() <= Scalar(0) || b.minCoeff() <= Scalar(0))
    throw InputError("mass vectors must be strictly positive");

  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  const Scalar exp_u = lambda / (lambda + epsilon);
  const Scalar exp_v = mu / (mu + epsilon);
  const VectorX<Scalar> log_a = a.array().log();
  const VectorX<Scalar> log_b = b.array().log();
  const MatrixX<Scalar> log_kernel = -cost / epsilon;

  bool log_mode = opts.mode == SolveMode::Log ||
                  (opts.mode == SolveMode::Auto && epsilon < Scalar(0.01));

  MatrixX<Scalar> kernel;
  if (!log_mode) kernel = log_kernel.array().exp();

  VectorX<Scalar> u = VectorX<Scalar>::Ones(n);
  VectorX<Scalar> v = VectorX<Scalar>::Ones(m);
  VectorX<Scalar> alpha = VectorX<Scalar>::Zero(n);  // log u
  VectorX<Scalar> beta = VectorX<Scalar>::Zero(m);   // log v

  TransportPlanT<Scalar> plan;

  auto current_gamma = [&]() -> MatrixX<Scalar> {
    if (log_mode)
      return ((log_kernel.colwise() + alpha).rowwise() + beta.transpose()).array().exp();
    return u.asDiagonal() * kernel * v.asDiagonal();
  };

  const Scalar range_lo = Scalar(1e-30);
  const Scalar range_hi = Scalar(1e30);

  Scalar residual = std::numeric_limits<Scalar>::infinity();
  int sweeps_done = 0;
  for (int sweep = 1; sweep <= opts.max_iters; ++sweep) {
    sweeps_done = sweep;
    const VectorX<Scalar> alpha_prev = log_mode ? alpha : VectorX<Scalar>(u.array().log());
    const VectorX<Scalar> beta_prev = log_mode ? beta : VectorX<Scalar>(v.array().log());

    if (!log_mode) {
      const VectorX<Scalar> kv = kernel * v;
      u = (a.array() / kv.array()).pow(exp_u);
      const VectorX<Scalar> ktu = kernel.transpose() * u;
      v = (b.array() / ktu.array()).pow(exp_v);

      const bool finite = u.allFinite() && v.allFinite();
      const bool in_range = finite && u.minCoeff() >= range_lo && u.maxCoeff() <= range_hi &&
                            v.minCoeff() >= range_lo && v.maxCoeff() <= range_hi;
      if (!in_range) {
        if (opts.mode == SolveMode::Plain) {
          if (!finite)
            throw NumericalError("solve_uot: non-finite scaling vector at iteration " +
                                 std::to_string(sweep));
          // forced plain mode keeps going while values remain finite
        } else {
          // redo this sweep in the log domain, starting from the pre-sweep state
          log_mode = true;
          alpha = alpha_prev;
          beta = beta_prev;
        }
      }
    }
    if (log_mode) {
      alpha = exp_u * (log_a - detail::log_sum_exp_rows(log_kernel, beta));
      beta = exp_v * (log_b - detail::log_sum_exp_cols(log_kernel, alpha));
      if (!alpha.allFinite() || !beta.allFinite())
        throw NumericalError("solve_uot: non-finite scaling vector at iteration " +
                             std::to_string(sweep));
    }

    const VectorX<Scalar> alpha_now = log_mode ? alpha : VectorX<Scalar>(u.array().log());
    const VectorX<Scalar> beta_now = log_mode ? beta : VectorX<Scalar>(v.array().log());
    residual = std::max((alpha_now - alpha_prev).cwiseAbs().maxCoeff(),
                        (beta_now - beta_prev).cwiseAbs().maxCoeff());

    if (opts.trace_every > 0 && sweep % opts.trace_every == 0)
      plan.objective_trace.push_back(
          uot_objective(current_gamma(), cost, a, b, lambda, mu, epsilon));

    if (residual <= Scalar(opts.tol)) break;
  }

  plan.iterations = sweeps_done;
  plan.converged = residual <= Scalar(opts.tol);
  plan.final_residual = residual;
  plan.gamma = current_gamma();
  if (!plan.gamma.allFinite())
    throw NumericalError("solve_uot: non-finite transport plan after " +
                         std::to_string(sweeps_done) + " iterations");
  plan.objective = uot_objective(plan.gamma, cost, a, b, lambda, mu, epsilon);
  return plan;
}

}  // namespace lematch
