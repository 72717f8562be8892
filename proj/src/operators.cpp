#include "hybrid/operators.hpp"

#include <cmath>
#include <sstream>

#include "hybrid/sampling.hpp"

namespace hybrid {

namespace {

constexpr double kPsdTol = 1e-10;
constexpr double kGammaClip = 0.99;
constexpr int kValidationSamples = 256;

double lambda_min_sym(const Matrix& Q) {
  if (Q.rows() == 0) return 0.0;
  const Matrix S = 0.5 * (Q + Q.transpose());
  return Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

void require_square(const Matrix& Q, Index n, const char* what) {
  if (Q.rows() != n || Q.cols() != n) {
    throw DimensionError(std::string(what) + ": matrix must be " + std::to_string(n) + "x" + std::to_string(n));
  }
}

void require_psd(const Matrix& Q, const char* what) {
  if (!Q.allFinite()) throw ConfigError(std::string(what) + ": matrix has non-finite entries");
  const double lmin = lambda_min_sym(Q);
  if (lmin < -kPsdTol) {
    std::ostringstream os;
    os << what << ": symmetric part is not positive semidefinite (lambda_min = " << lmin << ")";
    throw ConfigError(os.str());
  }
}

bool is_geometry_euclidean(const SpaceSpec& space) { return space.is_hilbert() || space.p() == 2.0; }

}  // namespace

void SampleReport::add(double margin, double tol) {
  worst_margin = samples == 0 ? margin : std::min(worst_margin, margin);
  ++samples;
  if (margin < -tol) ++violations;
}

// MonotoneMap ---------------------------------------------------------------

MonotoneMap MonotoneMap::zero(Index dim) {
  if (dim < 1) throw ConfigError("map dimension must be at least 1");
  return MonotoneMap(Kind::zero, Matrix::Zero(dim, dim), Vector::Zero(dim));
}

MonotoneMap MonotoneMap::affine(Matrix Q, Vector q) {
  require_square(Q, q.size(), "affine map");
  if (!q.allFinite()) throw ConfigError("affine map: offset has non-finite entries");
  require_psd(Q, "affine map");
  return MonotoneMap(Kind::affine, std::move(Q), std::move(q));
}

MonotoneMap MonotoneMap::quadratic_gradient(Matrix H, Vector a) {
  require_square(H, a.size(), "quadratic gradient");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + H.cwiseAbs().maxCoeff())) {
    throw ConfigError("quadratic gradient: H must be symmetric");
  }
  require_psd(H, "quadratic gradient");
  Vector q = -(H * a);
  return MonotoneMap(Kind::quadratic_gradient, std::move(H), std::move(q));
}

bool MonotoneMap::symmetric() const {
  return (Q_ - Q_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + Q_.cwiseAbs().maxCoeff());
}

double MonotoneMap::lambda_max_sym() const {
  const Matrix S = 0.5 * (Q_ + Q_.transpose());
  const auto ev = Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly).eigenvalues();
  return ev(ev.size() - 1);
}

double MonotoneMap::lipschitz() const {
  if (Q_.isZero(0.0)) return 0.0;
  return Eigen::JacobiSVD<Matrix>(Q_).singularValues()(0);
}

std::optional<ConvexSet> MonotoneMap::zero_set() const {
  if (Q_.isZero(0.0)) {
    if (q_.isZero(0.0)) return ConvexSet::whole_space(dim());
    return std::nullopt;
  }
  try {
    return ConvexSet::affine(Q_, -q_);
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

std::string MonotoneMap::describe() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::affine: return "affine";
    case Kind::quadratic_gradient: return "quadratic-gradient";
  }
  return "unknown";
}

MonotoneMap operator+(const MonotoneMap& a, const MonotoneMap& b) {
  if (a.dim() != b.dim()) throw DimensionError("sum of maps: dimension mismatch");
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  return MonotoneMap::affine(a.Q() + b.Q(), a.q() + b.q());
}

// IsmOperator ---------------------------------------------------------------

IsmOperator IsmOperator::make(MonotoneMap map, std::optional<double> gamma) {
  double g = 0.0;
  if (gamma) {
    g = *gamma;
    if (!(g > 0.0 && g <= 1.0)) throw ConfigError("ism constant gamma must lie in (0, 1]");
  } else {
    const double lmax = map.lambda_max_sym();
    g = lmax > 0.0 ? std::min(1.0 / lmax, kGammaClip) : kGammaClip;
  }
  IsmOperator op(std::move(map), g);
  const SampleReport report = check_ism(op, SpaceSpec::hilbert(op.dim()), kValidationSamples, 0x15a);
  if (!report.ok()) {
    std::ostringstream os;
    os << "operator is not " << g << "-inverse-strongly monotone (worst sampled margin "
       << report.worst_margin << ")";
    throw ConfigError(os.str());
  }
  return op;
}

// FixedPointMap -------------------------------------------------------------

FixedPointMap FixedPointMap::identity(Index dim) {
  FixedPointMap T(Kind::identity, dim);
  T.fixed_set_ = ConvexSet::whole_space(dim);
  return T;
}

FixedPointMap FixedPointMap::metric_projection(ConvexSet S) {
  FixedPointMap T(Kind::metric_projection, S.dim());
  T.fixed_set_ = S;
  T.set_ = std::move(S);
  return T;
}

FixedPointMap FixedPointMap::generalized_projection(ConvexSet S) {
  FixedPointMap T(Kind::generalized_projection, S.dim());
  T.fixed_set_ = S;
  T.set_ = std::move(S);
  return T;
}

FixedPointMap FixedPointMap::averaged(double t, FixedPointMap inner) {
  if (!(t > 0.0 && t < 1.0)) throw ConfigError("averaging weight must lie in (0, 1)");
  FixedPointMap T(Kind::averaged, inner.dim());
  T.t_ = t;
  T.fixed_set_ = inner.fixed_set();
  T.inner_ = std::make_shared<const FixedPointMap>(std::move(inner));
  return T;
}

FixedPointMap FixedPointMap::resolvent(MonotoneMap A, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("resolvent parameter r must be positive");
  const Index n = A.dim();
  auto zeros = A.zero_set();
  if (!zeros) throw ConfigError("resolvent of a map without zeros has no fixed points");
  FixedPointMap T(Kind::resolvent, n);
  const Matrix M = Matrix::Identity(n, n) + r * A.Q();
  T.resolvent_matrix_ = M.partialPivLu().inverse();
  T.resolvent_shift_ = -r * (T.resolvent_matrix_ * A.q());
  T.fixed_set_ = std::move(zeros);
  return T;
}

FixedPointMap FixedPointMap::custom(std::string name, Function f, std::optional<ConvexSet> fixed_set) {
  if (!f) throw ConfigError("custom map needs a callable");
  const Index n = fixed_set ? fixed_set->dim() : 0;
  FixedPointMap T(Kind::custom, n);
  T.custom_ = std::move(f);
  T.fixed_set_ = std::move(fixed_set);
  T.name_ = std::move(name);
  return T;
}

Vector FixedPointMap::operator()(const SpaceSpec& space, const Vector& x) const {
  space.check_dim(x.size(), "fixed-point map");
  switch (kind_) {
    case Kind::identity: return x;
    case Kind::metric_projection: return metric_project(*set_, x);
    case Kind::generalized_projection: return gen_project(space, *set_, x);
    case Kind::averaged: {
      const Vector inner = (*inner_)(space, x);
      if (space.is_hilbert()) return t_ * x + (1.0 - t_) * inner;
      return duality_map_inverse(space, Vector(t_ * duality_map(space, x) + (1.0 - t_) * duality_map(space, inner)));
    }
    case Kind::resolvent: return resolvent_matrix_ * x + resolvent_shift_;
    case Kind::custom: return custom_(space, x);
  }
  return x;
}

void FixedPointMap::validate(const SpaceSpec& space) const {
  if (kind_ != Kind::custom || fixed_set_) space.check_dim(dim_, "fixed-point map");
  switch (kind_) {
    case Kind::metric_projection:
      if (!is_geometry_euclidean(space)) {
        throw ConfigError("metric projection is only relatively nonexpansive in Hilbert space; "
                          "use a generalized projection in " + space.describe());
      }
      break;
    case Kind::resolvent:
      if (!is_geometry_euclidean(space)) {
        throw ConfigError("resolvent-of maps are only supported in Hilbert space");
      }
      break;
    case Kind::averaged: inner_->validate(space); break;
    default: break;
  }
}

std::string FixedPointMap::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::identity: os << "identity"; break;
    case Kind::metric_projection: os << "metric-projection(" << set_->describe() << ")"; break;
    case Kind::generalized_projection: os << "generalized-projection(" << set_->describe() << ")"; break;
    case Kind::averaged: os << "averaged(" << t_ << ", " << inner_->describe() << ")"; break;
    case Kind::resolvent: os << "resolvent"; break;
    case Kind::custom: os << "custom[unchecked](" << name_ << ")"; break;
  }
  return os.str();
}

// Bifunction ----------------------------------------------------------------

Bifunction Bifunction::zero(Index dim) { return Bifunction(Kind::zero, MonotoneMap::zero(dim)); }

Bifunction Bifunction::vi(MonotoneMap G) { return Bifunction(Kind::vi, std::move(G)); }

Bifunction Bifunction::separable(Matrix H, Vector a) {
  return Bifunction(Kind::separable, MonotoneMap::quadratic_gradient(std::move(H), std::move(a)));
}

double Bifunction::h(const Vector& z) const {
  // h(z) = 1/2 z^T H z + q^T z + const, with q = -H a; the constant cancels in f.
  return 0.5 * z.dot(G_.Q() * z) + G_.q().dot(z);
}

double Bifunction::operator()(const Vector& x, const Vector& y) const {
  switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::vi: return G_(x).dot(y - x);
    case Kind::separable: return x == y ? 0.0 : h(y) - h(x);
  }
  return 0.0;
}

std::string Bifunction::describe() const {
  switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::vi: return "vi(" + G_.describe() + ")";
    case Kind::separable: return "separable-quadratic";
  }
  return "unknown";
}

std::optional<ConvexSet> gep_solution_set(const Bifunction& f, const MonotoneMap& B, const ConvexSet& C) {
  const MonotoneMap M = f.representative() + B;
  if (!M.symmetric()) return std::nullopt;
  auto zeros = M.zero_set();
  if (!zeros) return std::nullopt;
  try {
    return ConvexSet::intersection({std::move(*zeros), C});
  } catch (const ConfigError&) {
    return std::nullopt;
  }
}

double gep_residual(const Bifunction& f, const MonotoneMap& B, const ConvexSet& C, const Vector& x) {
  const Vector step = x - (f.representative()(x) + B(x));
  return (x - metric_project(C, step)).norm();
}

// Sampled checks ------------------------------------------------------------

SampleReport check_ism(const IsmOperator& op, const SpaceSpec& space, std::size_t samples,
                       std::uint64_t seed) {
  space.check_dim(op.dim(), "check_ism");
  Rng rng(seed);
  SampleReport report;
  report.note = "pairs drawn from N(0, 9 I)";
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector x = 3.0 * rng.normal_vector(op.dim());
    const Vector y = 3.0 * rng.normal_vector(op.dim());
    const DualVector d = op(x) - op(y);
    const double dn = dual_norm(space, d);
    report.add((x - y).dot(d) - op.gamma() * dn * dn, 1e-8);
  }
  return report;
}

SampleReport check_relatively_nonexpansive(const FixedPointMap& T, const SpaceSpec& space,
                                           std::size_t samples, std::uint64_t seed) {
  if (!T.fixed_set()) throw ConfigError("check_relatively_nonexpansive: map has no declared fixed set");
  const ConvexSet& F = *T.fixed_set();
  space.check_dim(F.dim(), "check_relatively_nonexpansive");
  Rng rng(seed);
  SampleReport report;
  report.note = "fixed points sampled from the declared fixed set; x drawn from N(0, 9 I)";
  const Vector center = Vector::Zero(F.dim());
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector p = sample_in_set(F, rng, center, 3.0);
    const Vector x = 3.0 * rng.normal_vector(F.dim());
    report.add(lyapunov_phi(space, p, x) - lyapunov_phi(space, p, T(space, x)), 1e-8);
  }
  return report;
}

bool zero_reduction_holds(const IsmOperator& A, const ConvexSet& C, const Vector& witness,
                          std::size_t samples, std::uint64_t seed) {
  if (witness.size() != C.dim() || A.dim() != C.dim()) throw DimensionError("zero_reduction_holds: dimension mismatch");
  if (!contains(C, witness, 1e-10 * (1.0 + witness.norm()))) {
    throw ConfigError("zero_reduction_holds: witness is not in C");
  }
  Rng rng(seed);
  std::vector<Vector> points{witness};
  for (auto& v : verification_points(C, rng, samples, witness, 3.0)) points.push_back(std::move(v));
  const DualVector aw = A(witness);
  for (const auto& x : points) {
    const DualVector ax = A(x);
    if (ax.norm() > (ax - aw).norm() + 1e-10) return false;
  }
  return true;
}

}  // namespace hybrid
