#include "hybrid/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "hybrid/harness.hpp"
#include "hybrid/resolvent.hpp"
#include "hybrid/sampling.hpp"

namespace hybrid {

const char* to_string(PropertyModule m) {
  switch (m) {
    case PropertyModule::space_geometry: return "space-geometry";
    case PropertyModule::convex_sets: return "convex-sets";
    case PropertyModule::operator_catalog: return "operator-catalog";
    case PropertyModule::resolvent: return "resolvent";
    case PropertyModule::hybrid_solver: return "hybrid-solver";
    case PropertyModule::harness_cli: return "harness-cli";
  }
  return "unknown";
}

std::optional<PropertyModule> parse_module(std::string_view name) {
  for (PropertyModule m : kAllModules) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

bool SuiteReport::passed() const {
  return !results.empty() && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed(); });
}

const PropertyResult* SuiteReport::find(std::string_view name) const {
  for (const auto& r : results) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

void print_suite(std::ostream& out, const SuiteReport& suite) {
  for (const auto& r : suite.results) {
    out << (r.passed() ? "ok   " : "FAIL ") << to_string(suite.module) << ": " << r.name << " (samples "
        << r.report.samples << ", violations " << r.report.violations << ", worst margin " << std::setprecision(3)
        << std::scientific << r.report.worst_margin << ", tolerance " << r.tolerance << std::defaultfloat << ")";
    if (!r.report.note.empty()) out << " [" << r.report.note << "]";
    out << '\n';
  }
  out << to_string(suite.module) << ": " << (suite.passed() ? "passed" : "FAILED") << " in " << std::fixed
      << std::setprecision(3) << suite.seconds << " s" << std::defaultfloat << '\n';
}

namespace {

// Collects the properties of one suite.  An exception inside a property is
// recorded as a failed sample with the message as note.
class Suite {
 public:
  explicit Suite(PropertyModule m) { report_.module = m; }

  void check(const std::string& name, double tolerance, const std::function<void(SampleReport&)>& body) {
    PropertyResult r;
    r.name = name;
    r.tolerance = tolerance;
    try {
      body(r.report);
    } catch (const std::exception& e) {
      r.report.add(-std::numeric_limits<double>::infinity(), tolerance);
      r.report.note = std::string("threw: ") + e.what();
    }
    report_.results.push_back(std::move(r));
  }

  SuiteReport finish(double seconds) {
    report_.seconds = seconds;
    return std::move(report_);
  }

 private:
  SuiteReport report_;
};

// Records an error against a bound: margin = -error, violation past `bound`.
void add_error(SampleReport& r, double error, double bound) { r.add(-error, bound); }

constexpr Index kGeometryDims[] = {2, 3, 5};

// Spaces indexed by sample number; l_p construction validates c by sampling,
// so each space is built once.
class GeometrySpaces {
 public:
  GeometrySpaces() {
    for (Index n : kGeometryDims) {
      all_.push_back({SpaceSpec::hilbert(n), SpaceSpec::lp(n, 1.5), SpaceSpec::lp(n, 2.0), SpaceSpec::lp(n, 3.0)});
    }
  }
  //! hilbert, l_1.5, l_2 and l_3 in the dimension for sample k.
  const std::vector<SpaceSpec>& all(std::size_t k) const { return all_[k % all_.size()]; }
  //! The 2-uniformly convex members of all(k).
  std::vector<SpaceSpec> uniformly_convex(std::size_t k) const {
    const auto& a = all(k);
    return {a[0], a[1], a[2]};
  }

 private:
  std::vector<std::vector<SpaceSpec>> all_;
};

// space-geometry ------------------------------------------------------------

void geometry_suite(Suite& s, std::uint64_t seed) {
  constexpr std::size_t kSamples = 1000;
  const double tol = 1e-10;
  const GeometrySpaces spaces;

  s.check("duality identity <x, Jx> = ||x||^2 = ||Jx||_*^2", tol, [&](SampleReport& r) {
    Rng rng(seed);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (const auto& space : spaces.all(k)) {
        const Vector x = rng.uniform_vector(space.dim(), -3.0, 3.0);
        const Vector jx = duality_map(space, x);
        const double nx = norm(space, x);
        add_error(r, std::abs(x.dot(jx) - nx * nx) / (1.0 + nx * nx), tol);
        add_error(r, std::abs(dual_norm(space, jx) - nx) / (1.0 + nx), tol);
      }
    }
  });

  s.check("duality map round trip", tol, [&](SampleReport& r) {
    Rng rng(seed + 1);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (const auto& space : spaces.all(k)) {
        const Vector x = rng.uniform_vector(space.dim(), -3.0, 3.0);
        const Vector u = rng.uniform_vector(space.dim(), -3.0, 3.0);
        add_error(r, (duality_map_inverse(space, duality_map(space, x)) - x).norm() / (1.0 + x.norm()), tol);
        add_error(r, (duality_map(space, duality_map_inverse(space, u)) - u).norm() / (1.0 + u.norm()), tol);
      }
    }
  });

  s.check("phi sandwich (||x|| - ||y||)^2 <= phi(x, y) <= (||x|| + ||y||)^2", tol, [&](SampleReport& r) {
    Rng rng(seed + 2);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (const auto& space : spaces.all(k)) {
        const Vector x = rng.uniform_vector(space.dim(), -3.0, 3.0);
        const Vector y = rng.uniform_vector(space.dim(), -3.0, 3.0);
        const double nx = norm(space, x);
        const double ny = norm(space, y);
        const double phi = lyapunov_phi(space, x, y);
        const double scale = 1.0 + (nx + ny) * (nx + ny);
        r.add((phi - (nx - ny) * (nx - ny)) / scale, tol);
        r.add(((nx + ny) * (nx + ny) - phi) / scale, tol);
      }
    }
  });

  s.check("uniform convexity ||x - y|| <= (2 / c^2) ||Jx - Jy||_*", tol, [&](SampleReport& r) {
    Rng rng(seed + 3);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (const auto& space : spaces.uniformly_convex(k)) {
        const Index n = space.dim();
        const Vector x = rng.uniform_vector(n, -3.0, 3.0);
        const Vector y = rng.uniform_vector(n, -3.0, 3.0);
        const double c = space.convexity_constant();
        const double rhs = 2.0 / (c * c) * dual_norm(space, Vector(duality_map(space, x) - duality_map(space, y)));
        r.add((rhs - norm(space, Vector(x - y))) / (1.0 + rhs), tol);
      }
    }
    r.note = "hilbert, l_1.5, l_2";
  });

  s.check("V shift V(x, a) + 2 <J^{-1} a - x, b> <= V(x, a + b)", tol, [&](SampleReport& r) {
    Rng rng(seed + 4);
    for (std::size_t k = 0; k < kSamples; ++k) {
      for (const auto& space : spaces.all(k)) {
        const Index n = space.dim();
        const Vector x = rng.uniform_vector(n, -3.0, 3.0);
        const DualVector a = duality_map(space, Vector(rng.uniform_vector(n, -3.0, 3.0)));
        const DualVector b = rng.uniform_vector(n, -2.0, 2.0);
        const double lhs = v_functional(space, x, a) + 2.0 * (duality_map_inverse(space, a) - x).dot(b);
        const double rhs = v_functional(space, x, Vector(a + b));
        r.add((rhs - lhs) / (1.0 + std::abs(rhs)), tol);
      }
    }
  });

  s.check("Hilbert reduction phi(x, y) = ||x - y||^2 on the general path", 1e-12, [&](SampleReport& r) {
    Rng rng(seed + 5);
    for (std::size_t k = 0; k < kSamples; ++k) {
      const SpaceSpec twin = spaces.all(k)[0].generic_twin();
      const Vector x = rng.uniform_vector(twin.dim(), -3.0, 3.0);
      const Vector y = rng.uniform_vector(twin.dim(), -3.0, 3.0);
      const double exact = (x - y).squaredNorm();
      add_error(r, std::abs(lyapunov_phi(twin, x, y) - exact) / (1.0 + exact), 1e-12);
    }
  });
}

// convex-sets ---------------------------------------------------------------

struct NamedSet {
  std::string name;
  ConvexSet set;
};

std::vector<NamedSet> projection_sets(Index n) {
  Vector a = Vector::Ones(n);
  return {
      {"box", ConvexSet::box(Vector::Constant(n, -1.0), Vector::LinSpaced(n, 0.5, 2.0))},
      {"ball", ConvexSet::ball(Vector::LinSpaced(n, -0.5, 0.5), 1.5)},
      {"halfspace", ConvexSet::halfspace(a, 0.5)},
  };
}

void convex_suite(Suite& s, std::uint64_t seed) {
  constexpr std::size_t kSamples = 200;
  constexpr Index n = 3;
  const std::vector<SpaceSpec> spaces = {SpaceSpec::hilbert(n), SpaceSpec::lp(n, 1.5)};
  const Vector origin = Vector::Zero(n);

  s.check("three-point inequality phi(y, Pi x) + phi(Pi x, x) <= phi(y, x)", 1e-8, [&](SampleReport& r) {
    Rng rng(seed);
    for (const auto& space : spaces) {
      for (const auto& [name, set] : projection_sets(n)) {
        for (std::size_t k = 0; k < kSamples; ++k) {
          const Vector x = rng.uniform_vector(n, -4.0, 4.0);
          const Vector y = sample_in_set(set, rng, origin, 3.0);
          const Vector px = gen_project(space, set, x);
          r.add(lyapunov_phi(space, y, x) - lyapunov_phi(space, y, px) - lyapunov_phi(space, px, x), 1e-8);
        }
      }
    }
    r.note = "box, ball, halfspace in hilbert and l_1.5";
  });

  s.check("variational characterization <z - Pi y, J Pi y - Jy> >= 0", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 1);
    for (const auto& space : spaces) {
      for (const auto& [name, set] : projection_sets(n)) {
        for (std::size_t k = 0; k < kSamples; ++k) {
          const Vector y = rng.uniform_vector(n, -4.0, 4.0);
          const Vector z = sample_in_set(set, rng, origin, 3.0);
          const Vector py = gen_project(space, set, y);
          r.add((z - py).dot(duality_map(space, py) - duality_map(space, y)), 1e-8);
        }
      }
    }
    r.note = "box, ball, halfspace in hilbert and l_1.5";
  });

  s.check("idempotence Pi(Pi y) = Pi y", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 2);
    for (const auto& space : spaces) {
      for (const auto& [name, set] : projection_sets(n)) {
        for (std::size_t k = 0; k < kSamples; ++k) {
          const Vector y = rng.uniform_vector(n, -4.0, 4.0);
          const Vector py = gen_project(space, set, y);
          add_error(r, (gen_project(space, set, py) - py).norm(), 1e-8);
        }
      }
    }
  });

  s.check("Hilbert agreement of the general projection with the metric projection", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 3);
    const SpaceSpec twin = SpaceSpec::hilbert(n).generic_twin();
    for (const auto& [name, set] : projection_sets(n)) {
      for (std::size_t k = 0; k < kSamples; ++k) {
        const Vector y = rng.uniform_vector(n, -4.0, 4.0);
        add_error(r, (gen_project(twin, set, y) - metric_project(set, y)).norm(), 1e-8);
      }
    }
    r.note = "general l_p formulas at p = 2";
  });

  s.check("metric projection firmness ||Px - Py||^2 <= <Px - Py, x - y>", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 4);
    for (const auto& [name, set] : projection_sets(n)) {
      for (std::size_t k = 0; k < kSamples; ++k) {
        const Vector x = rng.uniform_vector(n, -4.0, 4.0);
        const Vector y = rng.uniform_vector(n, -4.0, 4.0);
        const Vector d = metric_project(set, x) - metric_project(set, y);
        r.add(d.dot(x - y) - d.squaredNorm(), 1e-8);
      }
    }
  });

  s.check("cut membership matches the sign of phi(z, x) - phi(z, w)", 0.0, [&](SampleReport& r) {
    Rng rng(seed + 5);
    for (const auto& space : spaces) {
      for (int pair = 0; pair < 5; ++pair) {
        const Vector w = rng.uniform_vector(n, -2.0, 2.0);
        const Vector x = rng.uniform_vector(n, -2.0, 2.0);
        const Halfspace cut = halfspace_from_phi_cut(space, w, x);
        const ConvexSet cut_set = ConvexSet::halfspace(cut.a, cut.b);
        for (int k = 0; k < 100; ++k) {
          const Vector z = rng.uniform_vector(n, -4.0, 4.0);
          const double gap = lyapunov_phi(space, z, x) - lyapunov_phi(space, z, w);
          if (std::abs(gap) <= 1e-9) continue;
          r.add(contains(cut_set, z) == (gap >= 0.0) ? 0.0 : -1.0, 0.0);
        }
      }
    }
    r.note = "1000 points";
  });

  s.check("shrunk-set projection is feasible and optimal over sampled feasible points", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 6);
    for (const auto& space : spaces) {
      for (int trial = 0; trial < 10; ++trial) {
        const ConvexSet base = ConvexSet::cube(n, -2.0, 2.0);
        const Vector witness = rng.uniform_vector(n, -1.0, 1.0);
        std::vector<Halfspace> cuts;
        for (int c = 0; c < 6; ++c) {
          const Vector a = rng.unit_vector(n);
          cuts.push_back(Halfspace{a, a.dot(witness) + rng.uniform(0.0, 0.5)});
        }
        const Vector x0 = rng.uniform_vector(n, -4.0, 4.0);
        const Vector z = project_onto_shrunk_set(space, base, cuts, x0);
        double excess = 0.0;
        for (const auto& h : cuts) excess = std::max(excess, h.excess(z));
        add_error(r, std::max(excess, distance(base, z)), 1e-8);
        int accepted = 0;
        while (accepted < 20) {
          const Vector y = rng.uniform_vector(n, -2.0, 2.0);
          if (std::any_of(cuts.begin(), cuts.end(), [&](const Halfspace& h) { return h.excess(y) > 0.0; })) continue;
          ++accepted;
          r.add((y - z).dot(duality_map(space, z) - duality_map(space, x0)), 1e-8);
        }
      }
    }
  });
}

// operator-catalog ----------------------------------------------------------

Matrix random_psd(Rng& rng, Index n, Index rank) {
  Matrix H = Matrix::Zero(n, n);
  for (Index k = 0; k < rank; ++k) {
    const Vector v = rng.normal_vector(n);
    H += v * v.transpose();
  }
  return H;
}

void catalog_suite(Suite& s, std::uint64_t seed) {
  constexpr Index n = 3;
  const SpaceSpec H = SpaceSpec::hilbert(n);
  const SpaceSpec L = SpaceSpec::lp(n, 1.5);

  s.check("inverse strong monotonicity with the default gamma", 1e-8, [&](SampleReport& r) {
    Rng rng(seed);
    for (int k = 0; k < 10; ++k) {
      const Matrix Q = random_psd(rng, n, 1 + k % n);
      const IsmOperator A = IsmOperator::make(MonotoneMap::affine(Q, rng.normal_vector(n)));
      const SampleReport rep = check_ism(A, H, 100, seed + static_cast<std::uint64_t>(k));
      for (std::size_t i = 0; i < rep.samples; ++i) r.add(rep.worst_margin, 1e-8);
    }
  });

  s.check("Lipschitz bound ||Ax - Ay|| <= ||x - y|| / gamma", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 1);
    for (int k = 0; k < 10; ++k) {
      const IsmOperator A = IsmOperator::make(MonotoneMap::affine(random_psd(rng, n, 2), rng.normal_vector(n)));
      for (int i = 0; i < 50; ++i) {
        const Vector x = rng.uniform_vector(n, -3.0, 3.0);
        const Vector y = rng.uniform_vector(n, -3.0, 3.0);
        r.add((x - y).norm() / A.gamma() - (A(x) - A(y)).norm(), 1e-8);
      }
    }
  });

  s.check("relative nonexpansiveness phi(p, Tx) <= phi(p, x) on fixed points", 1e-8, [&](SampleReport& r) {
    Matrix line(1, n);
    line << 1.0, -1.0, 0.5;
    const ConvexSet flat = ConvexSet::affine(line, Vector::Constant(1, 0.25));
    const ConvexSet ball = ConvexSet::ball(Vector::Zero(n), 1.0);
    const std::vector<std::pair<FixedPointMap, SpaceSpec>> maps = {
        {FixedPointMap::identity(n), H},
        {FixedPointMap::metric_projection(ball), H},
        {FixedPointMap::averaged(0.5, FixedPointMap::metric_projection(flat)), H},
        {FixedPointMap::resolvent(MonotoneMap::affine(Matrix::Identity(n, n), -Vector::Ones(n)), 0.7), H},
        {FixedPointMap::generalized_projection(ConvexSet::cube(n, -1.0, 0.5)), L},
        {FixedPointMap::averaged(0.3, FixedPointMap::generalized_projection(flat)), L},
    };
    std::uint64_t k = 0;
    for (const auto& [T, space] : maps) {
      const SampleReport rep = check_relatively_nonexpansive(T, space, 100, seed + ++k);
      for (std::size_t i = 0; i < rep.samples; ++i) r.add(rep.worst_margin, 1e-8);
    }
    r.note = "identity, projections, averaged maps, resolvent";
  });

  s.check("bifunction axioms f(x, x) = 0 and f(x, y) + f(y, x) <= 0", 1e-12, [&](SampleReport& r) {
    Rng rng(seed + 3);
    const std::vector<Bifunction> fs = {
        Bifunction::zero(n),
        Bifunction::vi(MonotoneMap::affine(random_psd(rng, n, 2), rng.normal_vector(n))),
        Bifunction::separable(random_psd(rng, n, 3), rng.normal_vector(n)),
    };
    for (const auto& f : fs) {
      for (int i = 0; i < 100; ++i) {
        const Vector x = rng.uniform_vector(n, -3.0, 3.0);
        const Vector y = rng.uniform_vector(n, -3.0, 3.0);
        add_error(r, std::abs(f(x, x)), 1e-12);
        r.add(-(f(x, y) + f(y, x)) / (1.0 + x.squaredNorm() + y.squaredNorm()), 1e-12);
      }
    }
  });

  s.check("declared vi solution sets solve the problem on a grid of C", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 4);
    const ConvexSet C = ConvexSet::cube(n, -2.0, 2.0);
    for (int k = 0; k < 5; ++k) {
      const Vector p = rng.uniform_vector(n, -1.0, 1.0);
      const Matrix Q = random_psd(rng, n, 1 + k % 2);
      const MonotoneMap G = MonotoneMap::affine(Q, -Q * p);
      const Bifunction f = Bifunction::vi(G);
      const auto sol = gep_solution_set(f, MonotoneMap::zero(n), C);
      if (!sol) {
        r.add(-1.0, 1e-8);
        continue;
      }
      for (int i = 0; i < 5; ++i) {
        const Vector z = sample_in_set(*sol, rng, p, 1.0);
        for (double a = -2.0; a <= 2.0; a += 1.0) {
          for (double b = -2.0; b <= 2.0; b += 1.0) {
            for (double c = -2.0; c <= 2.0; c += 1.0) {
              const Vector y = Eigen::Vector3d(a, b, c);
              r.add(G(z).dot(y - z), 1e-8);
            }
          }
        }
      }
    }
  });

  s.check("affine maps reject an indefinite symmetric part", 0.0, [&](SampleReport& r) {
    Rng rng(seed + 5);
    for (int k = 0; k < 20; ++k) {
      Matrix Q = random_psd(rng, n, 2);
      const bool make_indefinite = k % 2 == 0;
      if (make_indefinite) Q(0, 0) -= Q.norm() + 1.0;
      bool threw = false;
      try {
        (void)MonotoneMap::affine(Q, Vector::Zero(n));
      } catch (const ConfigError&) {
        threw = true;
      }
      r.add(threw == make_indefinite ? 0.0 : -1.0, 0.0);
    }
  });

  s.check("zero reduction test on known cases", 0.0, [&](SampleReport& r) {
    const ConvexSet C2 = ConvexSet::cube(2, 0.0, 2.0);
    const IsmOperator zero = IsmOperator::make(MonotoneMap::zero(2));
    const IsmOperator shift = IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), -Vector::Ones(2)));
    r.add(zero_reduction_holds(zero, C2, Vector::Ones(2), 100, seed) ? 0.0 : -1.0, 0.0);
    r.add(zero_reduction_holds(shift, C2, Vector::Ones(2), 100, seed) ? 0.0 : -1.0, 0.0);
    r.add(zero_reduction_holds(shift, C2, Vector::Zero(2), 100, seed) ? -1.0 : 0.0, 0.0);
  });
}

// resolvent -----------------------------------------------------------------

void resolvent_suite(Suite& s, std::uint64_t seed) {
  constexpr Index n = 3;
  const SpaceSpec H = SpaceSpec::hilbert(n);
  const SpaceSpec L = SpaceSpec::lp(n, 1.5);
  const ConvexSet box = ConvexSet::cube(n, -1.0, 1.0);
  const ConvexSet ball = ConvexSet::ball(Vector::Zero(n), 1.5);
  const ConvexSet whole = ConvexSet::whole_space(n);
  const MonotoneMap zeroB = MonotoneMap::zero(n);

  s.check("zero bifunction gives the generalized projection", 1e-8, [&](SampleReport& r) {
    Rng rng(seed);
    for (const auto& space : {H, L}) {
      for (const auto& C : {box, ball}) {
        for (int k = 0; k < 50; ++k) {
          const Vector x = rng.uniform_vector(n, -3.0, 3.0);
          const ResolventProblem prob{space, C, Bifunction::zero(n), zeroB, rng.uniform(0.2, 3.0), x};
          add_error(r, (solve_resolvent(prob).z - gen_project(space, C, x)).norm(), 1e-8);
        }
      }
    }
    r.note = "50 anchors per space and set";
  });

  s.check("closed-form proximal and forward steps", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 1);
    for (int k = 0; k < 50; ++k) {
      const Vector x = rng.uniform_vector(n, -3.0, 3.0);
      const double rr = rng.uniform(0.2, 3.0);
      // f(z, y) = h(y) - h(z), h = ||z||^2 / 2: z = x / (1 + r).
      const ResolventProblem prox{H, whole, Bifunction::separable(Matrix::Identity(n, n), Vector::Zero(n)), zeroB,
                                  rr, x};
      add_error(r, (solve_resolvent(prox).z - x / (1.0 + rr)).norm(), 1e-8);
      // f = 0, B affine: (z - x) / r + B x = 0.
      const Matrix Q = random_psd(rng, n, 2);
      const MonotoneMap B = MonotoneMap::affine(Q, rng.normal_vector(n));
      const ResolventProblem fwd{H, whole, Bifunction::zero(n), B, rr, x};
      add_error(r, (solve_resolvent(fwd).z - (x - rr * B(x))).norm(), 1e-8);
    }
  });

  s.check("firm nonexpansiveness of the resolvent", 1e-6, [&](SampleReport& r) {
    Rng rng(seed + 2);
    const Matrix Q = random_psd(rng, n, 2);
    const std::vector<ResolventProblem> probs = {
        {H, ball, Bifunction::zero(n), zeroB, 1.0, Vector::Zero(n)},
        {H, whole, Bifunction::separable(Q, rng.normal_vector(n)), zeroB, 1.3, Vector::Zero(n)},
        {H, box, Bifunction::vi(MonotoneMap::affine(Q, rng.normal_vector(n))), zeroB, 0.8, Vector::Zero(n)},
        {L, box, Bifunction::separable(Q, rng.normal_vector(n)), zeroB, 1.0, Vector::Zero(n)},
    };
    std::uint64_t k = 0;
    for (const auto& prob : probs) {
      const SampleReport rep = check_firm_nonexpansiveness(prob, 100, seed + ++k);
      for (std::size_t i = 0; i < rep.samples; ++i) r.add(rep.worst_margin, 1e-6);
    }
    r.note = "100 pairs per problem";
  });

  s.check("phi inequality phi(q, T x) + phi(T x, x) <= phi(q, x) at solutions q", 1e-6, [&](SampleReport& r) {
    Rng rng(seed + 3);
    const Vector q = rng.uniform_vector(n, -0.5, 0.5);
    const Matrix Q = random_psd(rng, n, 3);
    const Matrix Bq = random_psd(rng, n, 2);
    const MonotoneMap B = MonotoneMap::affine(Bq / Bq.norm(), -(Bq / Bq.norm()) * q);
    const std::vector<ResolventProblem> probs = {
        {H, box, Bifunction::separable(Q, q), zeroB, 1.0, q},
        {H, box, Bifunction::vi(MonotoneMap::affine(Q, -Q * q)), zeroB, 0.7, q},
        {H, box, Bifunction::zero(n), B, 1.0, q},
        {L, box, Bifunction::separable(Q, q), zeroB, 1.0, q},
    };
    std::uint64_t k = 0;
    for (const auto& prob : probs) {
      const SampleReport rep = check_resolvent_phi_inequality(prob, q, 100, seed + ++k);
      for (std::size_t i = 0; i < rep.samples; ++i) r.add(rep.worst_margin, 1e-6);
    }
    r.note = "100 anchors per problem; B scaled so that r <= 2 gamma_B";
  });

  s.check("single-valuedness from different starting points", 1e-6, [&](SampleReport& r) {
    Rng rng(seed + 4);
    for (int k = 0; k < 20; ++k) {
      const Matrix Q = random_psd(rng, n, 2);
      const ResolventProblem prob{k % 2 ? L : H, box, Bifunction::vi(MonotoneMap::affine(Q, rng.normal_vector(n))),
                                  zeroB, 1.0, rng.uniform_vector(n, -2.0, 2.0)};
      ResolventOptions a;
      a.initial = Vector(rng.uniform_vector(n, -1.0, 1.0));
      ResolventOptions b;
      b.initial = Vector(rng.uniform_vector(n, -1.0, 1.0));
      add_error(r, (solve_resolvent(prob, a).z - solve_resolvent(prob, b).z).norm(), 1e-6);
    }
  });

  s.check("solutions are fixed points of the resolvent", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 5);
    for (int k = 0; k < 20; ++k) {
      const Vector q = rng.uniform_vector(n, -0.8, 0.8);
      const Matrix Q = random_psd(rng, n, 3);
      const ResolventProblem prob{k % 2 ? L : H, box, Bifunction::separable(Q, q), zeroB, rng.uniform(0.3, 2.0), q};
      const Vector z = solve_resolvent(prob).z;
      add_error(r, (z - q).norm(), 1e-8);
    }
  });

  s.check("defining inequality certificate on 200 points of C", 1e-8, [&](SampleReport& r) {
    Rng rng(seed + 6);
    const auto points = resolvent_certificate_points(box, 200, seed);
    for (int k = 0; k < 10; ++k) {
      const Matrix Q = random_psd(rng, n, 2);
      const ResolventProblem prob{k % 2 ? L : H, box, Bifunction::vi(MonotoneMap::affine(Q, rng.normal_vector(n))),
                                  zeroB, 1.0, rng.uniform_vector(n, -2.0, 2.0)};
      const Vector z = solve_resolvent(prob).z;
      const SampleReport rep = certify_resolvent(prob, z, *points, 1e-8);
      for (std::size_t i = 0; i < rep.samples; ++i) r.add(rep.worst_margin, 1e-8);
    }
    r.note = "box vertices plus random points";
  });
}

// hybrid-solver -------------------------------------------------------------

std::vector<EquilibriumPair> trivial_pairs(Index n) {
  return {{Bifunction::zero(n), MonotoneMap::zero(n)}, {Bifunction::zero(n), MonotoneMap::zero(n)}};
}

ProblemInstance box_line_instance() {
  Matrix a(1, 2);
  a << 1.0, 0.0;
  ProblemInstance inst{SpaceSpec::hilbert(2),
                       ConvexSet::cube(2, -2.0, 2.0),
                       {FixedPointMap::metric_projection(ConvexSet::affine(a, Vector::Zero(1)))},
                       {IsmOperator::make(MonotoneMap::zero(2))},
                       trivial_pairs(2),
                       {},
                       {},
                       {},
                       {},
                       Vector::Ones(2),
                       Vector(Vector::Unit(2, 1)),
                       {},
                       {}};
  return inst;
}

ProblemInstance affine_zero_instance() {
  ProblemInstance inst{SpaceSpec::hilbert(2),
                       ConvexSet::whole_space(2),
                       {FixedPointMap::identity(2)},
                       {IsmOperator::make(MonotoneMap::affine(Matrix::Identity(2, 2), -Vector::Ones(2)))},
                       trivial_pairs(2),
                       {},
                       {},
                       {},
                       {},
                       Vector::Zero(2),
                       Vector(Vector::Ones(2)),
                       {},
                       {}};
  return inst;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

// Last-quarter median <= first-quarter median for one trace column.
void add_vanishing(SampleReport& r, const IterationTrace& trace, const std::function<double(const StepRecord&)>& f) {
  const std::size_t len = trace.steps.size();
  if (len < 8) return;
  std::vector<double> first;
  std::vector<double> last;
  for (std::size_t i = 0; i < len / 4; ++i) first.push_back(f(trace.steps[i]));
  for (std::size_t i = len - len / 4; i < len; ++i) last.push_back(f(trace.steps[i]));
  r.add(median_of(first) - median_of(last), 0.0);
}

void solver_suite(Suite& s, std::uint64_t seed) {
  SolverConfig cfg;

  s.check("trivial instance stays at x0", 0.0, [&](SampleReport& r) {
    ProblemInstance inst{SpaceSpec::hilbert(3), ConvexSet::cube(3, -1.0, 1.0), {FixedPointMap::identity(3)},
                         {IsmOperator::make(MonotoneMap::zero(3))}, trivial_pairs(3), {}, {}, {}, {},
                         Vector::Constant(3, 0.25), {}, {}, {}};
    const RunOutput out = run_hybrid(inst, cfg);
    add_error(r, out.result.iterations == 1 ? 0.0 : 1.0, 0.0);
    for (const auto& step : out.trace.steps) add_error(r, (step.x - inst.x0).norm(), 0.0);
    add_error(r, (out.result.x - inst.x0).norm(), 0.0);
  });

  s.check("limit equals the projection of x0 onto F on closed-form instances", 1e-5, [&](SampleReport& r) {
    const RunOutput a = run_hybrid(box_line_instance(), cfg);
    add_error(r, a.result.termination == Termination::converged ? 0.0 : 1.0, 0.0);
    add_error(r, (a.result.x - Vector(Vector::Unit(2, 1))).norm(), 1e-5);
    const RunOutput b = run_hybrid(affine_zero_instance(), cfg);
    add_error(r, b.result.termination == Termination::converged ? 0.0 : 1.0, 0.0);
    add_error(r, (b.result.x - Vector::Ones(2)).norm(), 1e-5);
    r.note = "box/line limit (0, 1); affine zero limit (1, 1)";
  });

  s.check("per-iteration invariants on generated instances", 0.0, [&](SampleReport& r) {
    for (std::uint64_t k = 0; k < 3; ++k) {
      const auto tmpl = k == 2 ? InstanceTemplate::multi_q : InstanceTemplate::full_theorem1;
      const ExperimentSpec spec = parse_experiment(generate_instance(seed + k, tmpl), "generated");
      const ExperimentOutcome out = run_experiment(spec);
      add_error(r, out.run.result.termination == Termination::converged ? 0.0 : 1.0, 0.0);
      for (const auto& step : out.run.trace.steps) add_error(r, step.invariants_ok ? 0.0 : 1.0, 0.0);
    }
  });

  s.check("limit optimality ||x* - Pi_F x0|| <= 10 tol", 10.0 * cfg.tol, [&](SampleReport& r) {
    for (std::uint64_t k : {std::uint64_t{0}, std::uint64_t{1}, std::uint64_t{4}}) {
      const ExperimentSpec spec =
          parse_experiment(generate_instance(seed * 4 + k, InstanceTemplate::two_vi), "generated");
      const ExperimentOutcome out = run_experiment(spec);
      if (!out.oracle.available) {
        r.add(-1.0, 0.0);
        continue;
      }
      add_error(r, out.oracle.distance, 10.0 * spec.config.tol);
    }
  });

  s.check("residuals vanish along the trace", 0.0, [&](SampleReport& r) {
    const ExperimentSpec spec = parse_experiment(generate_instance(seed, InstanceTemplate::full_theorem1), "generated");
    const RunOutput out = run_hybrid(spec.instance, spec.config);
    const auto& t = out.trace;
    add_vanishing(r, t, [](const StepRecord& st) { return st.step_norm; });
    add_vanishing(r, t, [](const StepRecord& st) { return (st.x - st.w).norm(); });
    add_vanishing(r, t, [](const StepRecord& st) { return (st.x - st.z).norm(); });
    add_vanishing(r, t, [](const StepRecord& st) { return st.max_T_residual; });
    add_vanishing(r, t, [](const StepRecord& st) { return st.max_A_residual; });
    add_vanishing(r, t, [](const StepRecord& st) { return (st.u.front() - st.y).norm(); });
    const auto& last = t.steps.back();
    add_error(r, std::max({last.step_norm, last.max_T_residual, last.max_A_residual, last.max_gep_residual}),
              spec.config.tol);
  });

  s.check("two-problem multi run equals the two-problem run per iterate", 1e-9, [&](SampleReport& r) {
    const ExperimentSpec spec = parse_experiment(generate_instance(seed, InstanceTemplate::full_theorem1), "generated");
    const RunOutput a = run_hybrid(spec.instance, spec.config);
    const RunOutput b = run_hybrid_multi(spec.instance, spec.config);
    add_error(r, a.trace.steps.size() == b.trace.steps.size() ? 0.0 : 1.0, 1e-9);
    for (std::size_t i = 0; i < std::min(a.trace.steps.size(), b.trace.steps.size()); ++i) {
      add_error(r, (a.trace.steps[i].x - b.trace.steps[i].x).norm(), 1e-9);
    }
  });

  s.check("Hilbert shortcuts match the general formulas per iterate", 1e-9, [&](SampleReport& r) {
    const HilbertComparison cmp = run_hilbert_specialization(affine_zero_instance(), cfg);
    add_error(r, cmp.fast.trace.steps.size() == cmp.generic.trace.steps.size() ? 0.0 : 1.0, 1e-9);
    add_error(r, cmp.max_iterate_gap, 1e-9);
  });

  s.check("baselines keep a fixed point of every map constant", 0.0, [&](SampleReport& r) {
    ProblemInstance inst{SpaceSpec::hilbert(2), ConvexSet::cube(2, -1.0, 1.0), {FixedPointMap::identity(2)},
                         {IsmOperator::make(MonotoneMap::zero(2))}, trivial_pairs(2), {}, {}, {}, {},
                         Vector::Constant(2, 0.5), {}, {}, {}};
    SolverConfig short_cfg = cfg;
    short_cfg.max_iters = 20;
    for (const RunOutput& out : {run_mann_baseline(inst, short_cfg), run_anchored_baseline(inst, short_cfg)}) {
      for (const auto& step : out.trace.steps) add_error(r, (step.x - inst.x0).norm(), 0.0);
    }
  });
}

// harness-cli ---------------------------------------------------------------

void harness_suite(Suite& s, std::uint64_t seed) {
  const InstanceTemplate templates[] = {InstanceTemplate::two_ep, InstanceTemplate::two_vi, InstanceTemplate::fp_only,
                                        InstanceTemplate::full_theorem1, InstanceTemplate::multi_q};

  s.check("generated families vanish at the planted point", 1e-12, [&](SampleReport& r) {
    for (InstanceTemplate t : templates) {
      for (std::uint64_t k = 0; k < 4; ++k) {
        GenerateOptions opts;
        if (k == 3 && t != InstanceTemplate::full_theorem1 && t != InstanceTemplate::multi_q) opts.p = 1.5;
        const ExperimentSpec spec = parse_experiment(generate_instance(seed + k, t, opts), "generated");
        const ProblemInstance& inst = spec.instance;
        const Vector& p = *inst.known_solution;
        const double scale = 1.0 + p.norm();
        for (const auto& T : inst.T) add_error(r, (T(inst.space, p) - p).norm() / scale, 1e-12);
        for (const auto& A : inst.A) add_error(r, A(p).norm() / scale, 1e-12);
        for (const auto& e : inst.eq) add_error(r, gep_residual(e.f, e.B, inst.C, p) / scale, 1e-12);
      }
    }
  });

  s.check("generation is deterministic per seed", 0.0, [&](SampleReport& r) {
    for (InstanceTemplate t : templates) {
      add_error(r, generate_instance(seed, t) == generate_instance(seed, t) ? 0.0 : 1.0, 0.0);
    }
  });

  s.check("identical trace bytes across runs", 0.0, [&](SampleReport& r) {
    const std::string text = generate_instance(seed, InstanceTemplate::two_ep);
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      const ExperimentSpec spec = parse_experiment(text, "generated");
      const ExperimentOutcome out = run_experiment(spec);
      std::ostringstream os;
      write_trace_csv(os, out.run.trace);
      if (rep == 0) {
        first = os.str();
      } else {
        add_error(r, os.str() == first ? 0.0 : 1.0, 0.0);
      }
    }
  });

  s.check("exit code 0 iff converged with every check passing", 0.0, [&](SampleReport& r) {
    const std::string text = generate_instance(seed, InstanceTemplate::two_vi);
    ExperimentSpec ok = parse_experiment(text, "generated");
    add_error(r, run_experiment(ok).exit_code == kExitOk ? 0.0 : 1.0, 0.0);
    ExperimentSpec bad = ok;
    bad.config.inject_infeasible_cut_at = 2;
    const ExperimentOutcome out = run_experiment(bad);
    add_error(r, out.exit_code == kExitSolver ? 0.0 : 1.0, 0.0);
    add_error(r, out.run.result.termination == Termination::infeasible_cut ? 0.0 : 1.0, 0.0);
    ExperimentSpec capped = ok;
    capped.config.max_iters = 3;
    add_error(r, run_experiment(capped).exit_code == kExitSolver ? 0.0 : 1.0, 0.0);
  });

  s.check("validation errors name the violated condition", 0.0, [&](SampleReport& r) {
    const std::pair<const char*, const char*> cases[] = {
        {R"({"space": {"kind": "hilbert", "dim": 2}, "families": {"eq": [{"f": {"type": "zero"}}, {"f": {"type": "zero"}}], "beta": [0.3, 0.3]}, "x0": [0, 0]})",
         "beta must sum to 1"},
        {R"({"space": {"kind": "hilbert", "dim": 2}, "set": {"type": "cube", "lower": 0, "upper": 1}, "x0": [2, 0]})",
         "x0 must lie in C"},
        {R"({"space": {"kind": "hilbert", "dim": 2}, "families": {"A": [{"map": {"type": "affine", "Q": [[1, 0], [0, 1]], "q": [0, 0]}}]}, "schedules": {"lambda": {"const": 5}}, "x0": [0, 0]})",
         "lambda schedule violates"},
        {R"({"space": {"kind": "hilbert", "dim": 2}, "x0": [0, 0], "bogus": 1})", "bogus"},
    };
    for (const auto& [text, expected] : cases) {
      try {
        (void)parse_experiment(text, "case");
        r.add(-1.0, 0.0);
      } catch (const ConfigError& e) {
        add_error(r, std::string(e.what()).find(expected) == std::string::npos ? 1.0 : 0.0, 0.0);
      }
    }
  });
}

}  // namespace

SuiteReport run_property_suite(PropertyModule module, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Suite suite(module);
  switch (module) {
    case PropertyModule::space_geometry: geometry_suite(suite, seed); break;
    case PropertyModule::convex_sets: convex_suite(suite, seed); break;
    case PropertyModule::operator_catalog: catalog_suite(suite, seed); break;
    case PropertyModule::resolvent: resolvent_suite(suite, seed); break;
    case PropertyModule::hybrid_solver: solver_suite(suite, seed); break;
    case PropertyModule::harness_cli: harness_suite(suite, seed); break;
  }
  return suite.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

}  // namespace hybrid
