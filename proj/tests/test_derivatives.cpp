#include <cmath>

#include <gtest/gtest.h>

#include "eqforge/derivatives.hpp"
#include "eqforge/error.hpp"

using namespace eqforge;

namespace {

Grid1D sampled(double (*f)(double), double h, int n, double x0 = 0.0) {
  Grid1D g;
  g.spacing = h;
  g.values.resize(n);
  for (int i = 0; i < n; ++i) g.values[i] = f(x0 + i * h);
  return g;
}

double cubic(double x) { return 2 * x * x * x - x * x + 3 * x - 1; }
double cubic_prime(double x) { return 6 * x * x - 2 * x + 3; }
double quartic(double x) { return x * x * x * x - 2 * x; }

}  // namespace

TEST(Derivatives, ThreePointLinearIsExact) {
  Grid1D g{Eigen::Vector4d(0, 1, 2, 3), 1.0};
  const auto d = central_diff_3pt(g);
  EXPECT_EQ(d.mask.valid, (std::vector<bool>{false, true, true, false}));
  EXPECT_DOUBLE_EQ(d.values[1], 1.0);
  EXPECT_DOUBLE_EQ(d.values[2], 1.0);
  EXPECT_TRUE(std::isnan(d.values[0]));
  EXPECT_TRUE(std::isnan(d.values[3]));
}

TEST(Derivatives, ThreePointTruncationBound) {
  const double h = 0.05;
  const auto g = sampled([](double x) { return std::sin(3 * x); }, h, 100);
  const auto d = central_diff_3pt(g);
  const double bound = h * h / 6.0 * 27.0;  // max |f'''| = 27
  for (int i = 1; i < 99; ++i) EXPECT_LE(std::abs(d.values[i] - 3 * std::cos(3 * i * h)), bound);
}

TEST(Derivatives, ConstantGivesZeros) {
  Grid1D g{Eigen::VectorXd::Constant(9, 4.2), 0.3};
  for (auto fn : {central_diff_3pt, central_diff_5pt, second_central_diff, second_central_diff_5pt}) {
    const auto d = fn(g);
    for (int i = 0; i < 9; ++i)
      if (d.mask.valid[static_cast<std::size_t>(i)]) {
        EXPECT_NEAR(d.values[i], 0.0, 1e-12);
      }
  }
}

TEST(Derivatives, FivePointExactOnCubics) {
  const double h = 0.1;
  const auto g = sampled(cubic, h, 12, -0.4);
  const auto d = central_diff_5pt(g);
  EXPECT_EQ(d.mask.count(), 8u);
  EXPECT_FALSE(d.mask.valid[1]);
  EXPECT_FALSE(d.mask.valid[10]);
  for (int i = 2; i < 10; ++i) EXPECT_NEAR(d.values[i], cubic_prime(-0.4 + i * h), 1e-11);
}

TEST(Derivatives, TwentyPointsLeaveSixteenValid) {
  Grid1D g{Eigen::VectorXd::LinSpaced(20, 0, 2), 2.0 / 19};
  EXPECT_EQ(central_diff_5pt(g).mask.count(), 16u);
}

TEST(Derivatives, SecondDifferenceOfQuadraticIsTwo) {
  const auto g = sampled([](double x) { return x * x; }, 1.0, 6);
  const auto d = second_central_diff(g);
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(d.values[i], 2.0, 1e-12);
  const auto lin = second_central_diff(sampled([](double x) { return 3 * x - 2; }, 1.0, 6));
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(lin.values[i], 0.0, 1e-12);
}

TEST(Derivatives, SecondDifferenceOfSine) {
  const double h = 0.01;
  const auto g = sampled([](double x) { return std::sin(x); }, h, 300);
  const auto d = second_central_diff(g);
  for (int i = 1; i < 299; ++i) EXPECT_LE(std::abs(d.values[i] + std::sin(i * h)), 1e-4);
}

TEST(Derivatives, FivePointSecondDifferenceExactOnQuartics) {
  const double h = 0.2;
  const auto g = sampled(quartic, h, 10);
  const auto d = second_central_diff_5pt(g);
  for (int i = 2; i < 8; ++i) EXPECT_NEAR(d.values[i], 12 * std::pow(i * h, 2), 1e-9);
}

TEST(Derivatives, Linearity) {
  const double h = 0.07;
  const auto f = sampled([](double x) { return std::exp(x); }, h, 30);
  const auto g = sampled([](double x) { return std::cos(2 * x); }, h, 30);
  Grid1D combo{2.5 * f.values - 0.75 * g.values, h};
  for (auto fn : {central_diff_3pt, central_diff_5pt, second_central_diff, second_central_diff_5pt}) {
    const auto df = fn(f), dg = fn(g), dc = fn(combo);
    for (int i = 0; i < 30; ++i)
      if (dc.mask.valid[static_cast<std::size_t>(i)]) {
        EXPECT_NEAR(dc.values[i], 2.5 * df.values[i] - 0.75 * dg.values[i], 1e-9);
      }
  }
}

TEST(Derivatives, MasksIntersect) {
  InteriorMask a{{false, true, true, true}};
  InteriorMask b{{true, true, false, true}};
  EXPECT_EQ((a & b).valid, (std::vector<bool>{false, true, false, true}));
  EXPECT_EQ((a & b).count(), 2u);
}

TEST(Derivatives, ForwardTwoPoint) {
  Grid1D g{Eigen::Vector3d(1, 4, 9), 0.5};
  const auto d = forward_diff_2pt(g);
  EXPECT_DOUBLE_EQ(d.values[0], 6.0);
  EXPECT_DOUBLE_EQ(d.values[1], 10.0);
  EXPECT_FALSE(d.mask.valid[2]);
  EXPECT_EQ(first_derivative(g, Stencil::kForward2).mask.count(), 2u);
}

TEST(Derivatives, ShortInputsRejected) {
  Grid1D two{Eigen::Vector2d(1, 2), 1.0};
  Grid1D four{Eigen::Vector4d(1, 2, 3, 4), 1.0};
  EXPECT_THROW(central_diff_3pt(two), SizeError);
  EXPECT_THROW(second_central_diff(two), SizeError);
  EXPECT_THROW(central_diff_5pt(four), SizeError);
  EXPECT_THROW(second_central_diff_5pt(four), SizeError);
}
