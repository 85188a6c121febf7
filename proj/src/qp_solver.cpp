#include "mareforge/qp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mareforge/error.hpp"

namespace mareforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ActiveSet {
  Eigen::MatrixXd J;  // L^-T, rotated as constraints enter and leave
  Eigen::MatrixXd R;  // upper triangular, first `size` columns in use
  std::vector<Eigen::Index> rows;
  std::vector<double> u;
  double r_norm = 1.0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(rows.size()); }

  // Returns false if the constraint is linearly dependent on the active set.
  bool add(Eigen::VectorXd d, Eigen::Index row, double multiplier) {
    const Eigen::Index n = J.rows();
    const Eigen::Index q = size();
    for (Eigen::Index j = n - 1; j >= q + 1; --j) {
      double cc = d(j - 1), ss = d(j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(j) = 0.0;
      cc /= h;
      ss /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(j - 1) = -h;
      } else {
        d(j - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < n; ++k) {
        const double t1 = J(k, j - 1), t2 = J(k, j);
        J(k, j - 1) = t1 * cc + t2 * ss;
        J(k, j) = xny * (t1 + J(k, j - 1)) - t2;
      }
    }
    if (std::abs(d(q)) <= std::numeric_limits<double>::epsilon() * r_norm) return false;
    for (Eigen::Index i = 0; i <= q; ++i) R(i, q) = d(i);
    r_norm = std::max(r_norm, std::abs(d(q)));
    rows.push_back(row);
    u.push_back(multiplier);
    return true;
  }

  void drop(Eigen::Index position) {
    const Eigen::Index n = J.rows();
    const Eigen::Index q = size();
    for (Eigen::Index j = position; j + 1 < q; ++j) R.col(j) = R.col(j + 1);
    R.col(q - 1).setZero();
    rows.erase(rows.begin() + position);
    u.erase(u.begin() + position);
    const Eigen::Index nq = q - 1;
    for (Eigen::Index j = position; j < nq; ++j) {
      double cc = R(j, j), ss = R(j + 1, j);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      R(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R(j, j) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        R(j, j) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < nq; ++k) {
        const double t1 = R(j, k), t2 = R(j + 1, k);
        R(j, k) = t1 * cc + t2 * ss;
        R(j + 1, k) = xny * (t1 + R(j, k)) - t2;
      }
      for (Eigen::Index k = 0; k < n; ++k) {
        const double t1 = J(k, j), t2 = J(k, j + 1);
        J(k, j) = t1 * cc + t2 * ss;
        J(k, j + 1) = xny * (J(k, j) + t1) - t2;
      }
    }
  }
};

}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Eigen::Index n = G.rows();
  const Eigen::Index m = A.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw SolverError("QP Hessian is not positive definite");

  ActiveSet act;
  act.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));  // U^-1 = L^-T
  act.R = Eigen::MatrixXd::Zero(n, n);

  QpResult res;
  Eigen::VectorXd x = -llt.solve(g);
  const Eigen::VectorXd row_norm = A.rowwise().norm();
  const int max_iter = static_cast<int>(50 * (n + m) + 100);

  while (res.iterations++ < max_iter) {
    // Most violated constraint, scaled by its row norm.
    Eigen::Index p = -1;
    double worst = 0.0;
    const double tol = 1e-11 * (1.0 + x.lpNorm<Eigen::Infinity>());
    for (Eigen::Index i = 0; i < m; ++i) {
      if (row_norm(i) == 0.0) continue;
      const double s = (A.row(i).dot(x) - b(i)) / row_norm(i);
      if (s < -tol && s < worst) {
        bool active = false;
        for (auto r : act.rows) active = active || r == i;
        if (active) continue;
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      res.feasible = true;
      res.x = x;
      res.objective = 0.5 * x.dot(G * x) + g.dot(x);
      return res;
    }

    const Eigen::VectorXd np = A.row(p).transpose();
    double u_plus = 0.0;
    while (true) {
      if (res.iterations++ > max_iter) throw SolverError("QP iteration limit reached");
      const Eigen::Index q = act.size();
      const Eigen::VectorXd d = act.J.transpose() * np;
      const Eigen::VectorXd z = act.J.rightCols(n - q) * d.tail(n - q);
      Eigen::VectorXd r(q);
      for (Eigen::Index i = q - 1; i >= 0; --i) {
        double v = d(i);
        for (Eigen::Index j = i + 1; j < q; ++j) v -= act.R(i, j) * r(j);
        r(i) = v / act.R(i, i);
      }

      double t1 = kInf;
      Eigen::Index drop_at = -1;
      for (Eigen::Index k = 0; k < q; ++k) {
        if (r(k) > 0.0) {
          const double ratio = act.u[static_cast<std::size_t>(k)] / r(k);
          if (ratio < t1) {
            t1 = ratio;
            drop_at = k;
          }
        }
      }
      const double slack = np.dot(x) - b(p);
      const double zn = z.dot(np);
      const double t2 = (z.norm() > 1e-14 * (1.0 + np.norm()) && zn > 0.0) ? -slack / zn : kInf;
      const double t = std::min(t1, t2);
      if (t == kInf) {
        res.feasible = false;
        res.x = x;
        return res;
      }
      if (t2 == kInf) {
        for (Eigen::Index k = 0; k < q; ++k) act.u[static_cast<std::size_t>(k)] -= t * r(k);
        u_plus += t;
        act.drop(drop_at);
        continue;
      }
      x += t * z;
      for (Eigen::Index k = 0; k < q; ++k) act.u[static_cast<std::size_t>(k)] -= t * r(k);
      u_plus += t;
      if (t == t2) {
        if (!act.add(act.J.transpose() * np, p, u_plus)) {
          res.feasible = false;
          res.x = x;
          return res;
        }
        break;
      }
      act.drop(drop_at);
      if (np.dot(x) - b(p) >= 0.0) break;
    }
  }
  throw SolverError("QP iteration limit reached");
}

QpResult solve_qp_sparse(const Eigen::SparseMatrix<double>& G, const Eigen::VectorXd& g,
                         const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
  using Vec = Eigen::VectorXd;
  const Eigen::Index n = G.rows();
  const Eigen::Index m = A.rows();
  const Eigen::SparseMatrix<double> At = A.transpose();

  Vec x = Vec::Zero(n);
  Vec s = (A * x - b).cwiseMax(1.0);
  Vec lam = Vec::Ones(m);
  const double scale_b = 1.0 + b.lpNorm<Eigen::Infinity>();
  const double scale_g = 1.0 + g.lpNorm<Eigen::Infinity>();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  QpResult res;

  const auto max_step = [](const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
    return a;
  };

  for (res.iterations = 0; res.iterations < 200; ++res.iterations) {
    const Vec rd = G * x + g - At * lam;
    const Vec rp = A * x - s - b;
    const double mu = s.dot(lam) / static_cast<double>(std::max<Eigen::Index>(m, 1));
    const double obj = 0.5 * x.dot(G * x) + g.dot(x);
    if (rp.lpNorm<Eigen::Infinity>() <= 1e-10 * scale_b && rd.lpNorm<Eigen::Infinity>() <= 1e-10 * scale_g &&
        mu <= 1e-13 * (1.0 + std::abs(obj))) {
      res.feasible = true;
      res.x = x;
      res.objective = obj;
      return res;
    }

    const Vec w = lam.cwiseQuotient(s);
    Eigen::SparseMatrix<double> H = G + At * w.asDiagonal() * A;
    if (!analyzed) {
      ldlt.analyzePattern(H);
      analyzed = true;
    }
    // Late iterations leave W badly scaled; a small diagonal shift keeps the
    // factorization positive when cancellation bites.
    ldlt.factorize(H);
    for (double shift = 1e-14; ldlt.info() != Eigen::Success && shift < 1e-4; shift *= 100.0) {
      Eigen::SparseMatrix<double> I(n, n);
      I.setIdentity();
      ldlt.factorize(H + shift * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) * I);
    }
    if (ldlt.info() != Eigen::Success) throw SolverError("interior-point factorization failed");

    // Newton direction for complementarity residual rc.
    const auto direction = [&](const Vec& rc, Vec& dx, Vec& ds, Vec& dl) {
      const Vec rhs = -rd - At * (w.cwiseProduct(rp) + rc.cwiseQuotient(s));
      dx = ldlt.solve(rhs);
      ds = A * dx + rp;
      dl = -(rc + lam.cwiseProduct(ds)).cwiseQuotient(s);
    };

    Vec dx, ds, dl;
    const Vec sl = s.cwiseProduct(lam);
    direction(sl, dx, ds, dl);
    const double a_aff = std::min(max_step(s, ds), max_step(lam, dl));
    const double mu_aff = (s + a_aff * ds).dot(lam + a_aff * dl) / static_cast<double>(std::max<Eigen::Index>(m, 1));
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
    const Vec rc = sl + ds.cwiseProduct(dl) - Vec::Constant(m, sigma * mu);
    direction(rc, dx, ds, dl);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(lam, dl)));
    x += alpha * dx;
    s += alpha * ds;
    lam += alpha * dl;
    if (!x.allFinite()) throw SolverError("interior-point iterate diverged");
  }
  throw SolverError("interior-point iteration limit reached");
}

}  // namespace mareforge
