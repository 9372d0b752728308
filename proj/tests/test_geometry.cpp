#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dmads/benchmarks.hpp"
#include "dmads/delaunay.hpp"
#include "dmads/interpolant.hpp"
#include "dmads/mesh.hpp"
#include "dmads/poll.hpp"
#include "oracles.hpp"

using namespace dmads;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(Mesh, UpdateExamples) {
  const auto s = make_sphere(2).space;
  auto m = make_mesh(s, make_sphere(2).optimizer, 0.125);
  EXPECT_EQ(m.delta_m, 0.015625);
  auto up = update_mesh(m, true, s);
  EXPECT_EQ(up.delta_p, 0.25);
  EXPECT_EQ(up.delta_m, 0.0625);
  auto down = update_mesh(m, false, s);
  EXPECT_EQ(down.delta_p, 0.0625);
  EXPECT_EQ(down.delta_m, 0.00390625);
  auto top = make_mesh(s, make_sphere(2).optimizer, 1.0);
  EXPECT_EQ(update_mesh(top, true, s).delta_p, 1.0);
  EXPECT_EQ(update_mesh(top, true, s).delta_m, 1.0);
  EXPECT_THROW(make_mesh(s, make_sphere(2).optimizer, 0.0), ConfigError);
  EXPECT_THROW(make_mesh(s, make_sphere(2).optimizer, 1.5), ConfigError);
}

TEST(Mesh, IntegerStep) {
  SearchSpace s({VariableSpec::integer("layers", 1, 50), VariableSpec::integer("flag", 0, 1)});
  auto m = make_mesh(s, Point{{std::int64_t{10}, std::int64_t{0}}}, 0.125);
  EXPECT_EQ(m.integer_step[0], 6);  // round(0.125 * 49)
  EXPECT_EQ(m.integer_step[1], 1);
  for (int k = 0; k < 10; ++k) m = update_mesh(m, false, s);
  EXPECT_EQ(m.integer_step[0], 1);
}

TEST(Mesh, RandomSequenceKeepsOrdering) {
  const auto s = make_sphere(3).space;
  std::mt19937_64 rng(17);
  auto m = make_mesh(s, make_sphere(3).optimizer, 0.125);
  for (int k = 0; k < 5000; ++k) {
    m = update_mesh(m, rng() % 2 == 0, s);
    ASSERT_GT(m.delta_m, 0.0);
    ASSERT_LE(m.delta_m, m.delta_p);
    ASSERT_LE(m.delta_p, 1.0);
    ASSERT_EQ(m.delta_m, std::min(m.delta_p, m.delta_p * m.delta_p));
  }
}

TEST(Mesh, ProjectionLandsOnLattice) {
  const auto s = make_sphere(2).space;
  const auto m = make_mesh(s, detail::real_point({0.3, -1.2}), 0.25);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int k = 0; k < 500; ++k) {
    const auto p = project_to_mesh(detail::real_point({u(rng), u(rng)}), m, s);
    EXPECT_TRUE(s.contains(p));
    EXPECT_TRUE(on_mesh(p, m, s, 1e-9) || as_real(p[0]) == 5.0 || as_real(p[0]) == -5.0 ||
                as_real(p[1]) == 5.0 || as_real(p[1]) == -5.0);
  }
  EXPECT_TRUE(on_mesh(m.anchor, m, s));
}

TEST(Directions, AngularGridSpanning2D) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto dirs = generate_directions(2, seed, 0.015625, 0.125);
    ASSERT_EQ(dirs.size(), 4u);
    for (int a = 0; a < 360; ++a) {
      const double t = a * M_PI / 180.0;
      ASSERT_TRUE(oracle::positively_spans(dirs, vec({std::cos(t), std::sin(t)}))) << "seed " << seed << " angle " << a;
    }
  }
}

TEST(Directions, IntegerOrthogonalColumns) {
  for (std::size_t n = 1; n <= 8; ++n) {
    for (double dp : {1.0, 0.5, 0.125, 1.0 / 64}) {
      const double dm = std::min(dp, dp * dp);
      const auto dirs = generate_directions(n, 7 * n, dm, dp);
      ASSERT_EQ(dirs.size(), 2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < dirs[i].size(); ++k) EXPECT_EQ(dirs[i](k), std::round(dirs[i](k)));
        EXPECT_TRUE((dirs[i] + dirs[i + n]).isZero());
        for (std::size_t j = i + 1; j < n; ++j) EXPECT_EQ(dirs[i].dot(dirs[j]), 0.0);
      }
    }
  }
}

TEST(Directions, StepLengthWithinFactorTwoOfPollSize) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (std::size_t n : {2u, 3u, 5u}) {
      for (const auto& d : generate_directions(n, seed, 0.25, 0.5)) {
        const double m = 0.25 * d.cwiseAbs().maxCoeff();
        EXPECT_GE(m, 0.25);
        EXPECT_LE(m, 1.0);
      }
    }
  }
}

TEST(Directions, Deterministic) {
  const auto a = generate_directions(4, 99, 1.0 / 64, 0.125);
  const auto b = generate_directions(4, 99, 1.0 / 64, 0.125);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_TRUE(generate_directions(0, 1, 0.1, 0.1).empty());
}

TEST(PollCandidates, TwoRealsOneInteger) {
  SearchSpace s({VariableSpec::real("a", 0, 1), VariableSpec::real("b", 0, 1), VariableSpec::integer("k", 0, 20),
                 VariableSpec::categorical("c", {"x", "y"})});
  const Point inc{{0.5, 0.5, std::int64_t{10}, std::string("x")}};
  const auto m = make_mesh(s, inc, 0.5);
  const auto cands = poll_candidates(inc, m, s, 3);
  ASSERT_EQ(cands.size(), 6u);
  int integer_moves = 0;
  for (const auto& c : cands) {
    EXPECT_TRUE(s.contains(c.point));
    EXPECT_EQ(as_label(c.point[3]), "x");
    if (c.tag.rfind("int:", 0) == 0) {
      ++integer_moves;
      EXPECT_EQ(std::abs(as_integer(c.point[2]) - 10), m.integer_step[2]);
      EXPECT_EQ(as_real(c.point[0]), 0.5);
    } else {
      EXPECT_EQ(as_integer(c.point[2]), 10);
      const double off = std::max(std::abs(as_real(c.point[0]) - 0.5), std::abs(as_real(c.point[1]) - 0.5));
      EXPECT_GE(off, 0.25);
      EXPECT_LE(off, 1.0);
    }
  }
  EXPECT_EQ(integer_moves, 2);
}

TEST(PollCandidates, DropsIncumbentAndDuplicatesAtBounds) {
  SearchSpace s({VariableSpec::integer("k", 0, 1)});
  const Point inc{{std::int64_t{0}}};
  const auto cands = poll_candidates(inc, make_mesh(s, inc, 1.0), s, 0);
  ASSERT_EQ(cands.size(), 1u);
  EXPECT_EQ(as_integer(cands[0].point[0]), 1);
}

TEST(Circumsphere, RightTriangle) {
  const auto s = circumsphere({vec({0, 0}), vec({1, 0}), vec({0, 1})});
  EXPECT_NEAR(s.center(0), 0.5, 1e-15);
  EXPECT_NEAR(s.center(1), 0.5, 1e-15);
  EXPECT_NEAR(s.radius, std::sqrt(2.0) / 2.0, 1e-15);
  EXPECT_THROW(circumsphere({vec({0, 0}), vec({1, 1}), vec({2, 2})}), SingularSystem);
}

TEST(Delaunay, SquareCorners) {
  const std::vector<Eigen::VectorXd> pts{vec({0, 0}), vec({1, 0}), vec({0, 1}), vec({1, 1})};
  const auto tri = triangulate(pts);
  ASSERT_EQ(tri.simplices().size(), 2u);
  EXPECT_TRUE(oracle::empty_circumspheres(tri));
  // cocircular corners: every triple is empty, the result must be two of them
  const auto all = oracle::brute_force_delaunay(pts);
  EXPECT_EQ(all.size(), 4u);
  double area = 0.0;
  for (const auto& s : tri.simplices()) {
    EXPECT_TRUE(all.count(s.vertices));
    area += s.volume;
  }
  EXPECT_NEAR(area, 1.0, 1e-12);
}

TEST(Delaunay, MatchesBruteForce2D3D) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 2 + trial % 2;
    const auto pts = oracle::random_points(5 + rng() % 6, dim, rng);
    const auto tri = triangulate(pts);
    ASSERT_TRUE(oracle::empty_circumspheres(tri)) << "trial " << trial;
    ASSERT_EQ(oracle::simplex_set(tri), oracle::brute_force_delaunay(pts)) << "trial " << trial;
  }
}

TEST(Delaunay, GridInputsNeedJitter) {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) pts.push_back(vec({i / 2.0, j / 2.0, k / 2.0}));
  const auto tri = triangulate(pts);
  EXPECT_TRUE(oracle::empty_circumspheres(tri, 1e-7));
  double vol = 0.0;
  for (const auto& s : tri.simplices()) vol += s.volume;
  EXPECT_NEAR(vol, 1.0, 1e-6);
}

TEST(Delaunay, HullCoveredExactlyOnce) {
  std::mt19937_64 rng(8);
  const auto pts = oracle::random_points(12, 2, rng);
  const auto tri = triangulate(pts);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    // random convex combination of three points is inside the hull
    const auto& a = pts[rng() % pts.size()];
    const auto& b = pts[rng() % pts.size()];
    const auto& c = pts[rng() % pts.size()];
    double l1 = u(rng), l2 = u(rng);
    if (l1 + l2 > 1) {
      l1 = 1 - l1;
      l2 = 1 - l2;
    }
    const Eigen::VectorXd x = a + l1 * (b - a) + l2 * (c - a);
    int containing = 0;
    for (std::size_t s = 0; s < tri.simplices().size(); ++s) {
      if (tri.barycentric(s, x).minCoeff() > 1e-9) ++containing;
    }
    EXPECT_LE(containing, 1);
    EXPECT_TRUE(tri.locate(x).has_value());
  }
}

TEST(Delaunay, Errors) {
  EXPECT_THROW(triangulate({}), NotEnoughPoints);
  EXPECT_THROW(triangulate({vec({0, 0}), vec({1, 1}), vec({2, 2}), vec({3, 3})}), NotEnoughPoints);
  EXPECT_THROW(triangulate({vec({0, 0}), vec({1, 0}), vec({1, 0})}), NotEnoughPoints);
  std::mt19937_64 rng(0);
  EXPECT_THROW(triangulate(oracle::random_points(12, 9, rng)), DimensionTooHigh);
  const auto tri = triangulate({vec({0, 0}), vec({1, 0}), vec({0, 1})});
  EXPECT_THROW(tri.uncertainty(vec({1, 1})), OutsideHull);
}

TEST(Uncertainty, OneDimensionalMidpoint) {
  const auto tri = triangulate({vec({0}), vec({1})});
  ASSERT_EQ(tri.simplices().size(), 1u);
  EXPECT_DOUBLE_EQ(tri.uncertainty(vec({0.5})), 0.25);
  EXPECT_DOUBLE_EQ(tri.uncertainty(vec({0.0})), 0.0);
  EXPECT_DOUBLE_EQ(tri.uncertainty(vec({0.25})), 0.1875);
}

TEST(Uncertainty, MatchesCircumsphereForm) {
  std::mt19937_64 rng(31);
  const auto tri = triangulate(oracle::random_points(10, 3, rng));
  for (std::size_t s = 0; s < tri.simplices().size(); ++s) {
    const auto& sp = tri.simplices()[s].sphere;
    Eigen::VectorXd lambda = Eigen::VectorXd::Random(4).cwiseAbs();
    lambda /= lambda.sum();
    const auto x = tri.from_barycentric(s, lambda);
    EXPECT_NEAR(tri.uncertainty_in(s, x), sp.radius * sp.radius - (x - sp.center).squaredNorm(), 1e-9);
    EXPECT_NEAR(tri.uncertainty_bary(s, lambda, x), tri.uncertainty_in(s, x), 1e-12);
  }
}

TEST(Uncertainty, AgreesOnSharedFacets) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int pairs = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto tri = triangulate(oracle::random_points(9, 2, rng));
    const auto& sx = tri.simplices();
    for (std::size_t a = 0; a < sx.size(); ++a) {
      for (std::size_t b = a + 1; b < sx.size(); ++b) {
        std::vector<int> shared;
        std::set_intersection(sx[a].vertices.begin(), sx[a].vertices.end(), sx[b].vertices.begin(),
                              sx[b].vertices.end(), std::back_inserter(shared));
        if (shared.size() != 2) continue;
        const double t = u(rng);
        const Eigen::VectorXd x = t * tri.vertices()[shared[0]] + (1 - t) * tri.vertices()[shared[1]];
        EXPECT_NEAR(tri.uncertainty_in(a, x), tri.uncertainty_in(b, x), 1e-9);
        ++pairs;
      }
    }
  }
  EXPECT_GT(pairs, 100);
}

TEST(Interpolant, ReproducesLinearFunctions) {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto pts = oracle::random_points(2 * n + 4, n, rng);
    const Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), -1.0, 2.0);
    std::vector<double> vals;
    for (const auto& p : pts) vals.push_back(0.7 + c.dot(p));
    const auto f = fit_interpolant(pts, vals);
    ASSERT_TRUE(f.interpolating());
    EXPECT_LT(f.weights().cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(f.tail()(0), 0.7, 1e-6);
    for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(f.tail()(k + 1), c(k), 1e-6);
    const auto probe = oracle::random_points(20, n, rng);
    for (const auto& x : probe) EXPECT_NEAR(f(x), 0.7 + c.dot(x), 1e-6);
  }
}

TEST(Interpolant, InterpolatesNodes) {
  std::mt19937_64 rng(6);
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto pts = oracle::random_points(3 * n + 5, n, rng);
    std::vector<double> vals;
    for (const auto& p : pts) vals.push_back(std::sin(3.0 * p.sum()) + p.squaredNorm());
    const auto f = fit_interpolant(pts, vals);
    ASSERT_TRUE(f.interpolating());
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(f(pts[i]), vals[i], 1e-8);
    // side conditions on the weights
    EXPECT_NEAR(f.weights().sum(), 0.0, 1e-8);
    EXPECT_LT((f.nodes() * f.weights()).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Interpolant, DuplicatesKeepLowerValue) {
  const std::vector<Eigen::VectorXd> pts{vec({0.0}), vec({0.5}), vec({1.0}), vec({0.5})};
  const auto f = fit_interpolant(pts, {1.0, 3.0, 2.0, 0.5});
  EXPECT_EQ(f.nodes().cols(), 3);
  EXPECT_NEAR(f(vec({0.5})), 0.5, 1e-12);
  EXPECT_THROW(fit_interpolant({vec({0.0}), vec({1.0})}, {1.0, 2.0}), NotEnoughPoints);
  EXPECT_THROW(fit_interpolant(pts, {1.0, NAN, 2.0, 0.5}), NotEnoughPoints);
}

TEST(Interpolant, SingularSystemFallsBackToLinearFit) {
  // collinear nodes in 2D leave the polynomial block rank deficient
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  for (int i = 0; i < 5; ++i) {
    pts.push_back(vec({i / 4.0, i / 4.0}));
    vals.push_back(i / 4.0);
  }
  const auto f = Interpolant::solve(pts, vals);
  EXPECT_FALSE(f.interpolating());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(f(pts[i]), vals[i], 1e-9);
}
