#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "smoothstep/ball.hpp"
#include "smoothstep/random.hpp"

using namespace smoothstep;

namespace {

Eigen::VectorXd random_vector(Eigen::Index d, Rng& rng, double scale) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * standard_normal(rng);
  return v;
}

}  // namespace

TEST(Ball, ProjectExamples) {
  const BallDomain<double> unit(1.0, 2);
  const Eigen::Vector2d inside(0.3, 0.4);
  EXPECT_EQ(project(unit, inside), inside);
  const Eigen::VectorXd clipped = project(unit, Eigen::Vector2d(3.0, 4.0));
  EXPECT_NEAR(clipped[0], 0.6, 1e-15);
  EXPECT_NEAR(clipped[1], 0.8, 1e-15);

  const BallDomain<double> big(2.0, 4);
  EXPECT_EQ(project(big, Eigen::VectorXd::Zero(4)), Eigen::VectorXd::Zero(4));
}

TEST(Ball, ContainsExamples) {
  const BallDomain<double> unit(1.0, 2);
  EXPECT_TRUE(contains(unit, Eigen::Vector2d(1.0, 0.0)));
  EXPECT_FALSE(contains(unit, Eigen::Vector2d(1.1, 0.0)));
  EXPECT_TRUE(contains(unit, project(unit, Eigen::Vector2d(1e6, -3e7))));
}

TEST(Ball, Errors) {
  EXPECT_THROW(BallDomain<double>(0.0, 2), std::invalid_argument);
  EXPECT_THROW(BallDomain<double>(std::numeric_limits<double>::infinity(), 2), std::invalid_argument);
  EXPECT_THROW(BallDomain<double>(1.0, 0), std::invalid_argument);
  const BallDomain<double> unit(1.0, 2);
  EXPECT_THROW(project(unit, Eigen::Vector2d(std::nan(""), 0.0)), DomainError);
  EXPECT_THROW(project(unit, Eigen::Vector3d(0.0, 0.0, 0.0)), std::invalid_argument);
}

TEST(Ball, ProjectionProperties) {
  Rng rng(42);
  for (Eigen::Index d : {2, 50}) {
    const BallDomain<double> domain(1.5, d);
    for (int i = 0; i < 2000; ++i) {
      const Eigen::VectorXd u = random_vector(d, rng, 1.0);
      const Eigen::VectorXd v = random_vector(d, rng, 1.0);
      const Eigen::VectorXd pu = project(domain, u);
      const Eigen::VectorXd pv = project(domain, v);

      ASSERT_LE(pu.norm(), domain.radius() * (1 + 1e-12));
      const Eigen::VectorXd ppu = project(domain, pu);
      if (u.norm() <= domain.radius()) ASSERT_EQ(ppu, pu);
      else ASSERT_LE((ppu - pu).norm(), 1e-15 * pu.norm());

      ASSERT_LE((pu - pv).norm(), (u - v).norm() * (1 + 1e-12));

      Eigen::VectorXd w = random_vector(d, rng, 1.0);
      w = w * (domain.radius() * std::pow(uniform01(rng), 1.0 / d) / w.norm());
      ASSERT_LE((pu - u).norm(), (w - u).norm());
    }
  }
}

TEST(Ball, FloatInstantiation) {
  const BallDomain<float> unit(1.0f, 2);
  const Eigen::Vector2f p = project(unit, Eigen::Vector2f(3.0f, 4.0f));
  EXPECT_NEAR(p[0], 0.6f, 1e-6f);
}
