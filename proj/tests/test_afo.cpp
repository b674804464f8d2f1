#include "mercbo/afo.hpp"
#include "mercbo/bqp.hpp"
#include "mercbo/maxflow.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mercbo;

namespace {

BinaryPoint random_point(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  BinaryPoint x(n);
  for (std::size_t i = 0; i < n; ++i) x.set(i, coin(rng));
  return x;
}

Eigen::VectorXd normal_vector(Eigen::Index size, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(size);
  for (auto& e : v) e = normal(rng);
  return v;
}

BqpProblem<double> random_bqp(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < a.cols(); ++j) a(i, j) = normal(rng);
  }
  return {normal(rng), normal_vector(Eigen::Index(n), rng), a};
}

// Integer coefficients make tied minimizers common.
SubmodularQuadratic<double> random_submodular(std::size_t n, std::mt19937_64& rng, bool integral) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> small(-3, 3);
  std::bernoulli_distribution keep(0.6);
  const auto dim = Eigen::Index(n);
  Eigen::VectorXd b(dim);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) b[i] = integral ? small(rng) : normal(rng);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      if (keep(rng)) a(i, j) = integral ? -double(std::abs(small(rng))) : -std::abs(normal(rng));
    }
  }
  return {integral ? double(small(rng)) : normal(rng), b, a};
}

double min_over_random_points(const BqpProblem<double>& p, std::size_t count, std::mt19937_64& rng) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) best = std::min(best, p.value(random_point(p.dimension(), rng)));
  return best;
}

const BqpProblem<double> kExample(2.0, Eigen::Vector2d(-6, -2), (Eigen::Matrix2d() << 0, 8, 0, 0).finished());

}  // namespace

TEST_CASE("build_bqp worked example") {
  const FeatureBasis<double> basis(2, 2, 0.0);
  const auto p = build_bqp(Eigen::VectorXd(Eigen::Vector4d(0, 1, -1, 2)), basis);
  CHECK(p.constant == 2.0);
  CHECK(p.linear == Eigen::Vector2d(-6, -2));
  CHECK(p.quadratic(0, 1) == 8.0);
  CHECK(p.quadratic(1, 0) == 0.0);
  for (std::uint64_t code = 0; code < 4; ++code) {
    const auto x = BinaryPoint::from_code(code, 2);
    CHECK(p.value(x) == Eigen::Vector4d(0, 1, -1, 2).dot(mercer_features(x, basis)));
  }
  CHECK(p.value(BinaryPoint{1, 0}) == -4.0);
}

TEST_CASE("build_bqp: zero theta gives the zero problem") {
  const FeatureBasis<double> basis(4, 2, 0.7);
  const auto p = build_bqp(Eigen::VectorXd(Eigen::VectorXd::Zero(Eigen::Index(basis.size()))), basis);
  CHECK(p.constant == 0.0);
  CHECK(p.linear.isZero(0.0));
  CHECK(p.quadratic.isZero(0.0));
}

TEST_CASE("build_bqp reproduces theta^T phi exhaustively") {
  std::mt19937_64 rng(1);
  for (std::size_t n = 2; n <= 9; ++n) {
    for (double beta : {0.0, 0.5, 1.3}) {
      const FeatureBasis<double> basis(n, 2, beta);
      for (int rep = 0; rep < 5; ++rep) {
        const auto theta = normal_vector(Eigen::Index(basis.size()), rng);
        const auto p = build_bqp(theta, basis);
        for (std::uint64_t code = 0; code < (std::uint64_t(1) << n); ++code) {
          const auto x = BinaryPoint::from_code(code, n);
          CHECK(std::abs(p.value(x) - theta.dot(mercer_features(x, basis))) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("build_bqp rejects the wrong basis") {
  CHECK_THROWS_AS(build_bqp(Eigen::VectorXd(Eigen::VectorXd::Zero(4)), FeatureBasis<double>(3, 1, 0.1)), InvalidConfiguration);
  CHECK_THROWS_AS(build_bqp(Eigen::VectorXd(Eigen::VectorXd::Zero(8)), FeatureBasis<double>(3, 3, 0.1)), InvalidConfiguration);
  CHECK_THROWS_AS(build_bqp(Eigen::VectorXd(Eigen::VectorXd::Zero(6)), FeatureBasis<double>(3, 2, 0.1)), DimensionMismatch);
}

TEST_CASE("bqp_value") {
  CHECK(bqp_value(kExample, BinaryPoint{0, 0}) == 2.0);
  CHECK(bqp_value(kExample, BinaryPoint{1, 1}) == 2.0 - 6.0 - 2.0 + 8.0);
  CHECK(bqp_value(kExample, BinaryPoint{1, 0}) == -4.0);
  CHECK(bqp_value(kExample, BinaryPoint{0, 1}) == 0.0);
  CHECK_THROWS_AS(bqp_value(kExample, BinaryPoint{0, 1, 1}), DimensionMismatch);
  CHECK_THROWS_AS(BqpProblem<double>(0.0, Eigen::Vector2d(1, 1), (Eigen::Matrix2d() << 0, 0, 1, 0).finished()),
                  InvalidConfiguration);
  CHECK_THROWS_AS(BqpProblem<double>(0.0, Eigen::Vector2d(1, std::nan("")), Eigen::Matrix2d::Zero()),
                  InvalidConfiguration);
}

TEST_CASE("split_posneg") {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  a(0, 1) = 8.0;
  a(0, 2) = -3.0;
  const BqpProblem<double> p(0.0, Eigen::Vector3d::Zero(), a);
  const auto [plus, minus] = split_posneg(p);
  CHECK(plus(0, 1) == 8.0);
  CHECK(plus(0, 2) == 0.0);
  CHECK(minus(0, 2) == -3.0);
  CHECK(minus(0, 1) == 0.0);
  CHECK(plus + minus == a);

  const BqpProblem<double> neg(0.0, Eigen::Vector3d::Zero(), -a.cwiseAbs());
  CHECK(split_posneg(neg).first.isZero(0.0));
  CHECK(split_posneg(neg).second == -a.cwiseAbs());
  const BqpProblem<double> pos(0.0, Eigen::Vector3d::Zero(), a.cwiseAbs());
  CHECK(split_posneg(pos).first == a.cwiseAbs());
  CHECK(split_posneg(pos).second.isZero(0.0));
}

TEST_CASE("relax") {
  SUBCASE("no positive terms leaves the problem unchanged") {
    std::mt19937_64 rng(2);
    const auto q = random_submodular(5, rng, false);
    const auto r = relax(q.as_bqp(), Eigen::MatrixXd(Eigen::MatrixXd::Constant(5, 5, 0.3)));
    CHECK(r.constant == q.constant);
    CHECK(r.linear == q.linear);
    CHECK(r.quadratic == q.quadratic);
  }
  SUBCASE("gamma = 0 drops the positive terms") {
    std::mt19937_64 rng(3);
    const auto p = random_bqp(5, rng);
    const auto r = relax(p, Eigen::MatrixXd(Eigen::MatrixXd::Zero(5, 5)));
    CHECK(r.constant == p.constant);
    CHECK(r.linear == p.linear);
    CHECK(r.quadratic == split_posneg(p).second);
  }
  SUBCASE("gamma = 1 is tight at (1,1)") {
    const BqpProblem<double> p(0.0, Eigen::Vector2d::Zero(), (Eigen::Matrix2d() << 0, 8, 0, 0).finished());
    const auto r = relax(p, Eigen::MatrixXd(Eigen::Matrix2d::Ones()));
    CHECK(r.value(BinaryPoint{1, 1}) == p.value(BinaryPoint{1, 1}));
    CHECK(r.linear == Eigen::Vector2d(8, 8));
    CHECK(r.constant == -8.0);
  }
  SUBCASE("out-of-range gamma is rejected") {
    CHECK_THROWS_AS(relax(kExample, Eigen::MatrixXd((Eigen::Matrix2d() << 0, 1.5, 0, 0).finished())), InvalidConfiguration);
    CHECK_THROWS_AS(relax(kExample, Eigen::MatrixXd((Eigen::Matrix2d() << 0, -0.1, 0, 0).finished())), InvalidConfiguration);
    CHECK_THROWS_AS(relax(kExample, Eigen::MatrixXd(Eigen::Matrix3d::Zero())), DimensionMismatch);
  }
  SUBCASE("the relaxation lower-bounds p everywhere") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t n = 2; n <= 10; ++n) {
      for (int rep = 0; rep < 3; ++rep) {
        const auto p = random_bqp(n, rng);
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
        for (Eigen::Index i = 0; i < gamma.rows(); ++i) {
          for (Eigen::Index j = i + 1; j < gamma.cols(); ++j) gamma(i, j) = unit(rng);
        }
        const auto r = relax(p, gamma);
        for (std::uint64_t code = 0; code < (std::uint64_t(1) << n); ++code) {
          const auto x = BinaryPoint::from_code(code, n);
          CHECK(r.value(x) <= p.value(x) + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("SubmodularQuadratic rejects positive pairwise terms") {
  CHECK_THROWS_AS(SubmodularQuadratic<double>(0.0, Eigen::Vector2d::Zero(), (Eigen::Matrix2d() << 0, 1, 0, 0).finished()),
                  NotSubmodular);
}

TEST_CASE("FlowNetwork") {
  SUBCASE("textbook network") {
    FlowNetwork net(6, 0, 5);
    net.add_arc(0, 1, 16);
    net.add_arc(0, 2, 13);
    net.add_arc(1, 2, 10);
    net.add_arc(2, 1, 4);
    net.add_arc(1, 3, 12);
    net.add_arc(3, 2, 9);
    net.add_arc(2, 4, 14);
    net.add_arc(4, 3, 7);
    net.add_arc(3, 5, 20);
    net.add_arc(4, 5, 4);
    CHECK(net.max_flow() == doctest::Approx(23.0));
    const auto side = net.source_side();
    CHECK(side[0]);
    CHECK_FALSE(side[5]);
  }
  SUBCASE("disconnected sink") {
    FlowNetwork net(3, 0, 2);
    net.add_arc(0, 1, 5.0);
    CHECK(net.max_flow() == 0.0);
    CHECK(net.source_side() == std::vector<bool>{true, true, false});
  }
  SUBCASE("invalid arcs") {
    FlowNetwork net(3, 0, 2);
    CHECK_THROWS_AS(net.add_arc(1, 0, 1.0), InvalidConfiguration);
    CHECK_THROWS_AS(net.add_arc(2, 1, 1.0), InvalidConfiguration);
    CHECK_THROWS_AS(net.add_arc(0, 1, -1.0), InvalidConfiguration);
    CHECK_THROWS_AS(net.add_arc(0, 7, 1.0), InvalidConfiguration);
  }
}

TEST_CASE("graphcut_minimize examples") {
  const SubmodularQuadratic<double> q(0.0, Eigen::Vector2d(1, -2), (Eigen::Matrix2d() << 0, -1, 0, 0).finished());
  const auto m = graphcut_minimize(q);
  CHECK(m.value == -2.0);
  CHECK(m.x == BinaryPoint{0, 1});

  const SubmodularQuadratic<double> zero(0.0, Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Zero(4, 4));
  const auto z = graphcut_minimize(zero);
  CHECK(z.value == 0.0);
  CHECK(z.x == BinaryPoint(4));
}

TEST_CASE("graphcut_minimize equals brute force on random submodular instances") {
  std::mt19937_64 rng(5);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + std::size_t(inst) % 14;
    const auto q = random_submodular(n, rng, inst % 2 == 0);
    const auto cut = graphcut_minimize(q);
    const auto bf = brute_force_minimize(q.as_bqp());
    CHECK(std::abs(cut.value - bf.value) <= 1e-6);
    CHECK(cut.x == bf.x);
  }
}

TEST_CASE("brute_force_minimize") {
  const BqpProblem<double> flat(5.0, Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(3, 3));
  const auto f = brute_force_minimize(flat);
  CHECK(f.value == 5.0);
  CHECK(f.x == BinaryPoint(3));

  const auto m = brute_force_minimize(kExample);
  CHECK(m.value == -4.0);
  CHECK(m.x == BinaryPoint{1, 0});

  std::mt19937_64 rng(6);
  const auto p = random_bqp(12, rng);
  CHECK(brute_force_minimize(p).value <= min_over_random_points(p, 1000, rng));

  const auto big = random_bqp(kBruteForceCap + 1, rng);
  CHECK_THROWS_AS(brute_force_minimize(big), InvalidConfiguration);
  CHECK_THROWS_AS(brute_force_minimize(p, 10), InvalidConfiguration);
}

TEST_CASE("submodular_relaxation_solve") {
  SUBCASE("submodular problems are solved exactly in one cut") {
    std::mt19937_64 rng(7);
    for (std::size_t n = 2; n <= 14; n += 3) {
      const auto q = random_submodular(n, rng, false);
      const auto r = submodular_relaxation_solve(q.as_bqp());
      const auto bf = brute_force_minimize(q.as_bqp());
      CHECK(r.state.bound_trace.size() == 1);
      CHECK(r.value == doctest::Approx(bf.value).epsilon(1e-12));
      CHECK(r.x == bf.x);
    }
  }
  SUBCASE("two variables with one positive term") {
    const BqpProblem<double> p(0.0, Eigen::Vector2d(-0.6, -0.5), (Eigen::Matrix2d() << 0, 1, 0, 0).finished());
    const auto bf = brute_force_minimize(p);
    const auto plain = submodular_relaxation_solve(p, 5, 0.2, false);
    CHECK(plain.x == bf.x);
    CHECK(plain.value == bf.value);
    CHECK(submodular_relaxation_solve(p).x == bf.x);

    // Symmetric linear terms: the raw cuts alternate between (0,0) and (1,1),
    // so only the polished iterates reach an optimum.
    const BqpProblem<double> sym(0.0, Eigen::Vector2d(-0.6, -0.6), (Eigen::Matrix2d() << 0, 1, 0, 0).finished());
    const auto sbf = brute_force_minimize(sym);
    CHECK(submodular_relaxation_solve(sym).value == sbf.value);
    CHECK(submodular_relaxation_solve(sym, 5, 0.2, false).value > sbf.value);
  }
  SUBCASE("bounds and returned values bracket the minimum") {
    std::mt19937_64 rng(8);
    for (int inst = 0; inst < 100; ++inst) {
      const std::size_t n = 2 + std::size_t(inst) % 13;
      const auto p = random_bqp(n, rng);
      const auto bf = brute_force_minimize(p);
      for (bool polish : {true, false}) {
        const auto r = submodular_relaxation_solve(p, 5, 0.2, polish);
        for (double bound : r.state.bound_trace) CHECK(bound <= bf.value + 1e-9);
        CHECK(bf.value <= r.value + 1e-12);
        CHECK(r.value == p.value(r.x));
        const auto best = r.state.best_bound_trace();
        for (std::size_t t = 1; t < best.size(); ++t) CHECK(best[t] >= best[t - 1]);
        CHECK(r.state.bound_trace.size() <= 5);
      }
    }
  }
  SUBCASE("gamma stays in [0, 1] on the positive support") {
    std::mt19937_64 rng(9);
    const auto p = random_bqp(9, rng);
    const auto r = submodular_relaxation_solve(p, 12, 0.5);
    const auto plus = split_posneg(p).first;
    for (Eigen::Index i = 0; i < 9; ++i) {
      for (Eigen::Index j = 0; j < 9; ++j) {
        const double g = r.state.gamma(i, j);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
        if (plus(i, j) == 0.0) CHECK(g == 0.0);
      }
    }
    CHECK(r.state.step_size == 0.5);
  }
  SUBCASE("adding a constant shifts the value and keeps the argmin") {
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 20; ++rep) {
      const auto p = random_bqp(8, rng);
      const BqpProblem<double> shifted(p.constant + 3.25, p.linear, p.quadratic);
      const auto a = submodular_relaxation_solve(p);
      const auto b = submodular_relaxation_solve(shifted);
      CHECK(a.x == b.x);
      CHECK(b.value == doctest::Approx(a.value + 3.25).epsilon(1e-12));
      const auto c = graphcut_minimize(relax(p, Eigen::MatrixXd(Eigen::MatrixXd::Zero(8, 8))));
      const auto d = graphcut_minimize(relax(shifted, Eigen::MatrixXd(Eigen::MatrixXd::Zero(8, 8))));
      CHECK(c.x == d.x);
    }
  }
  SUBCASE("invalid schedules") {
    CHECK_THROWS_AS(submodular_relaxation_solve(kExample, 0), InvalidConfiguration);
    CHECK_THROWS_AS(submodular_relaxation_solve(kExample, 5, 0.0), InvalidConfiguration);
  }
}

TEST_CASE("local_search_minimize") {
  std::mt19937_64 rng(11);
  SUBCASE("sandwich between the exhaustive minimum and the best start") {
    const FeatureBasis<double> basis(10, 2, 0.4);
    for (int rep = 0; rep < 5; ++rep) {
      const auto theta = normal_vector(Eigen::Index(basis.size()), rng);
      const auto p = build_bqp(theta, basis);
      const auto ls = local_search_minimize(theta, basis, 20, 77);
      // Starts are replayed from the same generator sequence.
      std::mt19937_64 replay(77);
      std::bernoulli_distribution coin(0.5);
      double best_start = std::numeric_limits<double>::infinity();
      for (int r = 0; r < 20; ++r) {
        BinaryPoint x(10);
        for (std::size_t i = 0; i < 10; ++i) x.set(i, coin(replay));
        best_start = std::min(best_start, sample_objective(theta, basis, x));
      }
      CHECK(brute_force_minimize(p).value <= ls.value + 1e-12);
      CHECK(ls.value <= best_start);
      CHECK(ls.value == doctest::Approx(sample_objective(theta, basis, ls.x)).epsilon(1e-12));
    }
  }
  SUBCASE("separable objectives are solved from any start") {
    const FeatureBasis<double> basis(9, 1, 0.2);
    const auto theta = normal_vector(Eigen::Index(basis.size()), rng);
    BinaryPoint expected(9);
    for (std::size_t i = 0; i < 9; ++i) expected.set(i, theta[Eigen::Index(basis.single_index(i))] > 0.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(local_search_minimize(theta, basis, 1, seed).x == expected);
  }
  SUBCASE("third-order objectives") {
    const FeatureBasis<double> basis(8, 3, 0.3);
    const auto theta = normal_vector(Eigen::Index(basis.size()), rng);
    double exhaustive = std::numeric_limits<double>::infinity();
    for (std::uint64_t code = 0; code < 256; ++code) {
      exhaustive = std::min(exhaustive, sample_objective(theta, basis, BinaryPoint::from_code(code, 8)));
    }
    const auto ls = local_search_minimize(theta, basis, 30, 5);
    CHECK(exhaustive <= ls.value + 1e-12);
  }
  SUBCASE("fixed seed is deterministic") {
    const FeatureBasis<double> basis(12, 2, 0.5);
    const auto theta = normal_vector(Eigen::Index(basis.size()), rng);
    const auto a = local_search_minimize(theta, basis, 10, 3);
    const auto b = local_search_minimize(theta, basis, 10, 3);
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
  }
  SUBCASE("invalid arguments") {
    const FeatureBasis<double> basis(4, 2, 0.5);
    CHECK_THROWS_AS(local_search_minimize(Eigen::VectorXd::Zero(11), basis, 0, 1), InvalidConfiguration);
    CHECK_THROWS_AS(local_search_minimize(Eigen::VectorXd::Zero(3), basis, 1, 1), DimensionMismatch);
  }
}
