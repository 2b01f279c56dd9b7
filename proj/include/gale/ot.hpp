#pragma once

#include "gale/common.hpp"

#include <cmath>
#include <vector>

namespace gale {

// cost[i][j] = 1 - cos(a_i, b_j), in [0, 2].
inline Matrix cosine_cost(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols())
    throw config_error(strf("cosine cost needs matching widths, got %d and %d",
                            static_cast<int>(a.cols()), static_cast<int>(b.cols())));
  Vector na = a.rowwise().norm();
  Vector nb = b.rowwise().norm();
  for (int i = 0; i < na.size(); ++i)
    if (na(i) == 0.0) throw numeric_error(strf("cosine distance undefined: row %d of the left "
                                               "matrix has zero norm", i));
  for (int j = 0; j < nb.size(); ++j)
    if (nb(j) == 0.0) throw numeric_error(strf("cosine distance undefined: row %d of the right "
                                               "matrix has zero norm", j));
  Matrix cost = Matrix::Ones(a.rows(), b.rows()) -
                (na.cwiseInverse().asDiagonal() * (a * b.transpose()) *
                 nb.cwiseInverse().asDiagonal());
  return cost.cwiseMax(0.0).cwiseMin(2.0);
}

inline Matrix cosine_self_cost(const Matrix& x) { return cosine_cost(x, x); }

struct TransportPlan {
  Matrix values;  // k x n, nonnegative
  Vector mu;      // row marginals
  Vector nu;      // column marginals
};

inline double marginal_residual(const Matrix& plan, const Vector& mu, const Vector& nu) {
  double row = (plan.rowwise().sum() - mu).cwiseAbs().maxCoeff();
  double col = (plan.colwise().sum().transpose() - nu).cwiseAbs().maxCoeff();
  return std::max(row, col);
}

struct SinkhornResult {
  TransportPlan plan;
  Vector f;  // row dual potential
  Vector g;  // column dual potential
  double residual = 0.0;          // max marginal deviation of the returned plan
  int iterations = 0;
  std::vector<double> dual_curve;  // dual objective after each full iteration
};

namespace detail {

inline void check_marginal(const Vector& m, const char* name) {
  for (int i = 0; i < m.size(); ++i)
    if (m(i) <= 0.0) throw config_error(strf("%s(%d) must be strictly positive", name, i));
  if (std::abs(m.sum() - 1.0) > 1e-9)
    throw config_error(strf("%s must sum to 1, got %.12g", name, m.sum()));
}

}  // namespace detail

// Entropic OT by alternating log-domain scaling. One iteration updates the
// row potential then the column potential, so the returned plan satisfies the
// column marginals exactly and carries the row deviation as `residual`.
inline SinkhornResult sinkhorn(const Matrix& c, const Vector& mu, const Vector& nu,
                               double epsilon, int iters) {
  if (epsilon <= 0.0) throw config_error(strf("epsilon must be positive, got %.12g", epsilon));
  if (iters < 1) throw config_error("sinkhorn needs at least one iteration");
  if (c.rows() != mu.size() || c.cols() != nu.size())
    throw config_error(strf("cost is %dx%d but marginals have %d and %d entries",
                            static_cast<int>(c.rows()), static_cast<int>(c.cols()),
                            static_cast<int>(mu.size()), static_cast<int>(nu.size())));
  detail::check_marginal(mu, "mu");
  detail::check_marginal(nu, "nu");
  check_finite(c, "sinkhorn cost");

  int k = static_cast<int>(c.rows());
  int n = static_cast<int>(c.cols());
  Vector log_mu = mu.array().log();
  Vector log_nu = nu.array().log();
  Vector f = Vector::Zero(k);
  Vector g = Vector::Zero(n);

  // log-sum-exp of ((f_i + g_j - c_ij) / eps) over the given axis
  auto lse_rows = [&](Vector& out) {
    for (int i = 0; i < k; ++i) {
      RowVector t = (g.transpose() - c.row(i)).array() / epsilon;
      double mx = t.maxCoeff();
      out(i) = mx + std::log((t.array() - mx).exp().sum());
    }
  };
  auto lse_cols = [&](Vector& out) {
    for (int j = 0; j < n; ++j) {
      Vector t = (f - c.col(j)).array() / epsilon;
      double mx = t.maxCoeff();
      out(j) = mx + std::log((t.array() - mx).exp().sum());
    }
  };

  SinkhornResult res;
  res.dual_curve.reserve(iters);
  for (int it = 0; it < iters; ++it) {
    Vector lr(k);
    lse_rows(lr);
    f = epsilon * (log_mu - lr);
    Vector lc(n);
    lse_cols(lc);
    g = epsilon * (log_nu - lc);
    // Unconstrained dual: <f,mu> + <g,nu> - eps * sum exp((f+g-c)/eps); the
    // mass term is exactly 1 right after a column update.
    res.dual_curve.push_back(f.dot(mu) + g.dot(nu) - epsilon);
  }

  Matrix plan(k, n);
  for (int i = 0; i < k; ++i)
    plan.row(i) = ((f(i) + g.transpose().array() - c.row(i).array()) / epsilon).exp();
  check_finite(plan, "sinkhorn plan");

  res.plan = TransportPlan{std::move(plan), mu, nu};
  res.f = std::move(f);
  res.g = std::move(g);
  res.iterations = iters;
  res.residual = marginal_residual(res.plan.values, mu, nu);
  return res;
}

// Edge-restricted pseudo-cost linearizing the quadratic edge objective at a
// plan: pseudo[i][j] = sum over adjacent pairs (i,i') x (j,j') of
// |c_intra_a(i,i') - c_intra_b(j,j')| * plan[i'][j'].
inline Matrix gw_pseudo_cost(const Matrix& plan, const Matrix& c_intra_a,
                             const Matrix& c_intra_b, const IntMatrix& adj_a,
                             const IntMatrix& adj_b) {
  int k = static_cast<int>(plan.rows());
  int n = static_cast<int>(plan.cols());
  if (c_intra_a.rows() != k || c_intra_a.cols() != k || adj_a.rows() != k)
    throw config_error("intra-cost/adjacency of the left graph disagree with the plan rows");
  if (c_intra_b.rows() != n || c_intra_b.cols() != n || adj_b.rows() != n)
    throw config_error("intra-cost/adjacency of the right graph disagree with the plan columns");

  // Neighbor lists once, so the quadruple loop only touches admissible pairs.
  std::vector<std::vector<int>> nbr_a(k), nbr_b(n);
  for (int i = 0; i < k; ++i)
    for (int i2 = 0; i2 < k; ++i2)
      if (adj_a(i, i2)) nbr_a[i].push_back(i2);
  for (int j = 0; j < n; ++j)
    for (int j2 = 0; j2 < n; ++j2)
      if (adj_b(j, j2)) nbr_b[j].push_back(j2);

  Matrix pseudo = Matrix::Zero(k, n);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i2 : nbr_a[i]) {
        double ca = c_intra_a(i, i2);
        for (int j2 : nbr_b[j]) acc += std::abs(ca - c_intra_b(j, j2)) * plan(i2, j2);
      }
      pseudo(i, j) = acc;
    }
  }
  return pseudo;
}

struct AlignmentResult {
  TransportPlan plan;
  double wd_cost = 0.0;    // <plan, node cost>
  double gwd_cost = 0.0;   // <plan, edge pseudo-cost at the final plan>
  double loss_graph = 0.0; // alpha * wd + (1 - alpha) * gwd
  double residual = 0.0;
  int iterations_run = 0;
};

struct AlignOptions {
  double alpha = 0.4;
  double epsilon = 0.1;
  int outer_iters = 5;
  int inner_iters = 20;
};

// Alternating fused-cost alignment. Each outer round linearizes the edge term
// at the current plan, blends it with the node cost, and re-solves with a
// cold-started Sinkhorn pass. alpha = 1 short-circuits to plain node-cost
// Sinkhorn; alpha = 0 aligns on edges alone.
inline AlignmentResult fused_align(const Matrix& h_a, const Matrix& h_b, const IntMatrix& adj_a,
                                   const IntMatrix& adj_b, const AlignOptions& opt) {
  if (opt.alpha < 0.0 || opt.alpha > 1.0)
    throw config_error(strf("alpha must lie in [0, 1], got %.12g", opt.alpha));
  if (opt.outer_iters < 1) throw config_error("fused alignment needs at least one outer round");

  int k = static_cast<int>(h_a.rows());
  int n = static_cast<int>(h_b.rows());
  Vector mu = Vector::Constant(k, 1.0 / k);
  Vector nu = Vector::Constant(n, 1.0 / n);
  Matrix c_node = cosine_cost(h_a, h_b);

  AlignmentResult res;
  if (opt.alpha == 1.0) {
    SinkhornResult s = sinkhorn(c_node, mu, nu, opt.epsilon, opt.inner_iters);
    res.plan = std::move(s.plan);
    res.residual = s.residual;
    res.iterations_run = s.iterations;
    res.wd_cost = (res.plan.values.array() * c_node.array()).sum();
    res.gwd_cost = 0.0;  // edge term carries no weight; not computed
    res.loss_graph = res.wd_cost;
    return res;
  }

  Matrix c_intra_a = cosine_self_cost(h_a);
  Matrix c_intra_b = cosine_self_cost(h_b);
  Matrix plan = mu * nu.transpose();
  double residual = marginal_residual(plan, mu, nu);
  int total_iters = 0;
  for (int round = 0; round < opt.outer_iters; ++round) {
    Matrix pseudo = gw_pseudo_cost(plan, c_intra_a, c_intra_b, adj_a, adj_b);
    Matrix c_fused = opt.alpha * c_node + (1.0 - opt.alpha) * pseudo;
    SinkhornResult s = sinkhorn(c_fused, mu, nu, opt.epsilon, opt.inner_iters);
    plan = std::move(s.plan.values);
    residual = s.residual;
    total_iters += s.iterations;
  }

  Matrix pseudo_final = gw_pseudo_cost(plan, c_intra_a, c_intra_b, adj_a, adj_b);
  res.wd_cost = (plan.array() * c_node.array()).sum();
  res.gwd_cost = (plan.array() * pseudo_final.array()).sum();
  res.loss_graph = opt.alpha * res.wd_cost + (1.0 - opt.alpha) * res.gwd_cost;
  res.plan = TransportPlan{std::move(plan), std::move(mu), std::move(nu)};
  res.residual = residual;
  res.iterations_run = total_iters;
  return res;
}

}  // namespace gale
