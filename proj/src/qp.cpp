#include "hybrid/qp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hybrid {

void Polyhedron::add_inequality(const Eigen::Ref<const Vector>& a, double b) {
  if (a.size() != dim_) throw DimensionError("Polyhedron::add_inequality: normal has wrong size");
  G_.conservativeResize(G_.rows() + 1, Eigen::NoChange);
  G_.row(G_.rows() - 1) = a.transpose();
  h_.conservativeResize(h_.size() + 1);
  h_(h_.size() - 1) = b;
}

void Polyhedron::add_equality(const Eigen::Ref<const Vector>& a, double b) {
  if (a.size() != dim_) throw DimensionError("Polyhedron::add_equality: normal has wrong size");
  E_.conservativeResize(E_.rows() + 1, Eigen::NoChange);
  E_.row(E_.rows() - 1) = a.transpose();
  e_.conservativeResize(e_.size() + 1);
  e_(e_.size() - 1) = b;
}

void Polyhedron::add_inequalities(const Matrix& G, const Vector& h) {
  if (G.cols() != dim_ || G.rows() != h.size()) {
    throw DimensionError("Polyhedron::add_inequalities: inconsistent block");
  }
  const Index old = G_.rows();
  G_.conservativeResize(old + G.rows(), Eigen::NoChange);
  G_.bottomRows(G.rows()) = G;
  h_.conservativeResize(old + h.size());
  h_.tail(h.size()) = h;
}

void Polyhedron::add_equalities(const Matrix& E, const Vector& e) {
  if (E.cols() != dim_ || E.rows() != e.size()) {
    throw DimensionError("Polyhedron::add_equalities: inconsistent block");
  }
  const Index old = E_.rows();
  E_.conservativeResize(old + E.rows(), Eigen::NoChange);
  E_.bottomRows(E.rows()) = E;
  e_.conservativeResize(old + e.size());
  e_.tail(e.size()) = e;
}

void Polyhedron::append(const Polyhedron& other) {
  if (other.dim_ != dim_) throw DimensionError("Polyhedron::append: dimension mismatch");
  add_inequalities(other.G_, other.h_);
  add_equalities(other.E_, other.e_);
}

double Polyhedron::max_violation(const Vector& z) const {
  double worst = 0.0;
  for (Index i = 0; i < G_.rows(); ++i) {
    const double nrm = G_.row(i).norm();
    const double excess = G_.row(i).dot(z) - h_(i);
    if (nrm > 0.0) {
      worst = std::max(worst, excess / nrm);
    } else {
      worst = std::max(worst, excess);
    }
  }
  for (Index i = 0; i < E_.rows(); ++i) {
    const double nrm = E_.row(i).norm();
    const double gap = std::abs(E_.row(i).dot(z) - e_(i));
    worst = std::max(worst, nrm > 0.0 ? gap / nrm : gap);
  }
  return worst;
}

namespace {

struct NnlsResult {
  Vector u;
  Vector residual;
  int iterations = 0;
};

// Lawson-Hanson active-set method for min ||M u - f|| subject to u >= 0.
NnlsResult nnls(const Matrix& M, const Vector& f, int cap) {
  const Index m = M.cols();
  NnlsResult out;
  out.u = Vector::Zero(m);
  std::vector<char> passive(static_cast<std::size_t>(m), 0);
  std::vector<char> rejected(static_cast<std::size_t>(m), 0);
  const double tol = 1e-13 * (1.0 + M.cwiseAbs().maxCoeff()) * (1.0 + f.norm());

  auto solve_passive = [&](Vector& s) {
    std::vector<Index> cols;
    for (Index j = 0; j < m; ++j) {
      if (passive[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Matrix MP(M.rows(), static_cast<Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) MP.col(static_cast<Index>(k)) = M.col(cols[k]);
    const Vector sp = MP.colPivHouseholderQr().solve(f);
    s = Vector::Zero(m);
    for (std::size_t k = 0; k < cols.size(); ++k) s(cols[k]) = sp(static_cast<Index>(k));
  };

  while (true) {
    const Vector grad = M.transpose() * (f - M * out.u);
    Index best = -1;
    double best_value = tol;
    for (Index j = 0; j < m; ++j) {
      const auto k = static_cast<std::size_t>(j);
      if (!passive[k] && !rejected[k] && grad(j) > best_value) {
        best_value = grad(j);
        best = j;
      }
    }
    if (best < 0) break;
    if (++out.iterations > cap) {
      throw SolverError(SolverFailure::iteration_cap, "active-set projection exceeded iteration cap");
    }
    passive[static_cast<std::size_t>(best)] = 1;
    Vector s;
    solve_passive(s);
    if (s(best) <= 0.0) {
      // The column is numerically dependent on the passive set.
      passive[static_cast<std::size_t>(best)] = 0;
      rejected[static_cast<std::size_t>(best)] = 1;
      continue;
    }
    std::fill(rejected.begin(), rejected.end(), 0);
    while (true) {
      double alpha = 1.0;
      bool interior = true;
      for (Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && s(j) <= 0.0) {
          interior = false;
          alpha = std::min(alpha, out.u(j) / (out.u(j) - s(j)));
        }
      }
      if (interior) {
        out.u = s;
        break;
      }
      if (++out.iterations > cap) {
        throw SolverError(SolverFailure::iteration_cap, "active-set projection exceeded iteration cap");
      }
      out.u += alpha * (s - out.u);
      for (Index j = 0; j < m; ++j) {
        if (passive[static_cast<std::size_t>(j)] && out.u(j) <= 1e-15 * (1.0 + out.u.maxCoeff())) {
          passive[static_cast<std::size_t>(j)] = 0;
          out.u(j) = 0.0;
        }
      }
      solve_passive(s);
    }
  }
  out.residual = M * out.u - f;
  return out;
}

}  // namespace

QpSolution project_onto_polyhedron(const Polyhedron& poly, const Vector& x0,
                                   const QpOptions& options) {
  const Index n = poly.dim();
  if (x0.size() != n) throw DimensionError("project_onto_polyhedron: point has wrong size");

  const double scale = 1.0 + x0.lpNorm<Eigen::Infinity>() +
                       (poly.h().size() ? poly.h().lpNorm<Eigen::Infinity>() : 0.0) +
                       (poly.e().size() ? poly.e().lpNorm<Eigen::Infinity>() : 0.0);
  const double tol = options.feasibility_tol * scale;
  const Matrix& G = poly.G();
  const Vector& h = poly.h();
  const Matrix& E = poly.E();

  // Equalities: x = xp + N v with N an orthonormal basis of ker E.
  Vector xp = Vector::Zero(n);
  Matrix N = Matrix::Identity(n, n);
  if (E.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(E);
    cod.setThreshold(1e-12);
    xp = cod.solve(poly.e());
    if ((E * xp - poly.e()).lpNorm<Eigen::Infinity>() > tol * (1.0 + E.cwiseAbs().maxCoeff())) {
      throw SolverError(SolverFailure::infeasible, "equality constraints are inconsistent");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(E.transpose());
    qr.setThreshold(1e-12);
    const Index rank = qr.rank();
    const Matrix Q = qr.householderQ();
    N = Q.rightCols(n - rank);
  }
  const Index d = N.cols();
  const Vector v0 = N.transpose() * (x0 - xp);

  // Inequalities in reduced coordinates, rows normalized.
  const Matrix GN = G * N;
  const Vector hr = h - G * xp;
  std::vector<Index> rows;
  std::vector<double> norms;
  for (Index i = 0; i < GN.rows(); ++i) {
    const double nrm = GN.row(i).norm();
    if (nrm <= 1e-14 * (1.0 + G.row(i).norm())) {
      if (hr(i) < -tol * (1.0 + G.row(i).norm())) {
        throw SolverError(SolverFailure::infeasible, "polyhedron has a zero row with an unsatisfiable right-hand side");
      }
      continue;
    }
    rows.push_back(i);
    norms.push_back(nrm);
  }
  const auto m = static_cast<Index>(rows.size());
  const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * (m + n) + 100);

  // Least distance form: y = v - v0, A y >= c with A = -rows, c = rows v0 - h.
  // Its solution is -r[0:d] / r[d] where r is the NNLS residual of
  // [A^T; c^T] u ~ e_{d+1}.
  Vector v = v0;
  Vector lambda = Vector::Zero(m);
  int iterations = 0;
  if (m > 0) {
    Matrix M(d + 1, m);
    for (Index k = 0; k < m; ++k) {
      const Index i = rows[static_cast<std::size_t>(k)];
      const double nrm = norms[static_cast<std::size_t>(k)];
      M.col(k).head(d) = -GN.row(i).transpose() / nrm;
      M(d, k) = (GN.row(i).dot(v0) - hr(i)) / nrm;
    }
    const Vector f = Vector::Unit(d + 1, d);
    const NnlsResult sol = nnls(M, f, cap);
    iterations = sol.iterations;
    const double rd = sol.residual(d);
    if (sol.residual.norm() <= 1e-12 || rd >= -1e-12) {
      throw SolverError(SolverFailure::infeasible, "polyhedron is empty");
    }
    v = v0 - sol.residual.head(d) / rd;
    lambda = sol.u / (-rd);
  }

  QpSolution out;
  out.x = xp + N * v;
  if (poly.max_violation(out.x) > 1e3 * tol) {
    throw SolverError(SolverFailure::infeasible, "polyhedron is empty");
  }
  out.mu = Vector::Zero(G.rows());
  for (Index k = 0; k < m; ++k) {
    out.mu(rows[static_cast<std::size_t>(k)]) = lambda(k) / norms[static_cast<std::size_t>(k)];
  }
  out.nu = Vector::Zero(E.rows());
  if (E.rows() > 0) {
    const Vector rhs = out.x - x0 + G.transpose() * out.mu;
    out.nu = E.transpose().completeOrthogonalDecomposition().solve(rhs);
  }
  out.iterations = iterations;
  return out;
}

Vector solve_scaled_step(const Polyhedron& poly, const Vector& z, const Vector& g,
                         const Matrix& H, const QpOptions& options) {
  const Index n = poly.dim();
  if (z.size() != n || g.size() != n || H.rows() != n || H.cols() != n) {
    throw DimensionError("solve_scaled_step: operand sizes disagree");
  }
  Eigen::LLT<Matrix> llt(H);
  double ridge = 0.0;
  while (llt.info() != Eigen::Success) {
    ridge = ridge == 0.0 ? 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : ridge * 10.0;
    llt.compute(H + ridge * Matrix::Identity(n, n));
    if (ridge > 1e6) throw SolverError(SolverFailure::non_contracting, "scaled step: Hessian is not positive definite");
  }
  const Matrix L = llt.matrixL();
  const auto Lt = L.triangularView<Eigen::Lower>();

  // With d = L^{-T} e the objective becomes 1/2 ||e - e0||^2 + const.
  const Vector e0 = -Lt.solve(g);
  Polyhedron scaled(n);
  if (poly.num_inequalities() > 0) {
    const Matrix Gs = Lt.solve(poly.G().transpose()).transpose();
    scaled.add_inequalities(Gs, poly.h() - poly.G() * z);
  }
  if (poly.num_equalities() > 0) {
    const Matrix Es = Lt.solve(poly.E().transpose()).transpose();
    scaled.add_equalities(Es, poly.e() - poly.E() * z);
  }
  const QpSolution sol = project_onto_polyhedron(scaled, e0, options);
  return L.transpose().triangularView<Eigen::Upper>().solve(sol.x);
}

}  // namespace hybrid
