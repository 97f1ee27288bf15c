#include <doctest.h>

#include <cmath>
#include <numbers>

#include "uvt/quadrature.hpp"

using uvt::QuadratureRule;
using uvt::gauss_legendre;

namespace {

double integrate(const QuadratureRule& rule, double (*f)(double)) {
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * f(rule.nodes[i]);
  return acc;
}

}  // namespace

TEST_CASE("weights are positive and sum to the interval length") {
  for (int n : {1, 2, 5, 20, 200}) {
    const QuadratureRule rule = gauss_legendre(n, -2.0, 3.5);
    double sum = 0.0;
    for (double w : rule.weights) {
      REQUIRE(w > 0.0);
      sum += w;
    }
    CHECK(sum == doctest::Approx(5.5).epsilon(1e-13));
  }
}

TEST_CASE("nodes are ascending and interior") {
  const QuadratureRule rule = gauss_legendre(50, 0.0, 1.0);
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    REQUIRE(rule.nodes[i] > 0.0);
    REQUIRE(rule.nodes[i] < 1.0);
    if (i) REQUIRE(rule.nodes[i] > rule.nodes[i - 1]);
  }
}

TEST_CASE("nodes are symmetric about the midpoint") {
  const QuadratureRule rule = gauss_legendre(17, -1.0, 1.0);
  const int n = 17;
  for (int i = 0; i < n; ++i) {
    CHECK(rule.nodes[i] == doctest::Approx(-rule.nodes[n - 1 - i]).epsilon(1e-14));
    CHECK(rule.weights[i] == doctest::Approx(rule.weights[n - 1 - i]).epsilon(1e-14));
  }
}

TEST_CASE("n nodes integrate polynomials up to degree 2n-1 exactly") {
  // int_0^1 x^d dx = 1/(d+1)
  const QuadratureRule rule = gauss_legendre(5, 0.0, 1.0);
  for (int d = 0; d <= 9; ++d) {
    double acc = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i)
      acc += rule.weights[i] * std::pow(rule.nodes[i], d);
    CHECK(acc == doctest::Approx(1.0 / (d + 1)).epsilon(1e-13));
  }
}

TEST_CASE("degree 2n is not exact, confirming the rule's order") {
  const QuadratureRule rule = gauss_legendre(2, 0.0, 1.0);
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i)
    acc += rule.weights[i] * std::pow(rule.nodes[i], 4);
  CHECK(std::abs(acc - 0.2) > 1e-4);
}

TEST_CASE("smooth integrands converge to reference values") {
  const QuadratureRule rule = gauss_legendre(30, 0.0, std::numbers::pi);
  CHECK(integrate(rule, [](double x) { return std::sin(x); }) ==
        doctest::Approx(2.0).epsilon(1e-14));
  const QuadratureRule rule2 = gauss_legendre(40, 0.0, 1.0);
  CHECK(integrate(rule2, [](double x) { return std::exp(x); }) ==
        doctest::Approx(std::numbers::e - 1.0).epsilon(1e-14));
}

TEST_CASE("large rules stay accurate") {
  // int_0^10 cos(x) dx = sin(10)
  const QuadratureRule rule = gauss_legendre(400, 0.0, 10.0);
  CHECK(integrate(rule, [](double x) { return std::cos(x); }) ==
        doctest::Approx(std::sin(10.0)).epsilon(1e-12));
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS(gauss_legendre(0, 0.0, 1.0));
  CHECK_THROWS(gauss_legendre(-3, 0.0, 1.0));
  CHECK_THROWS(gauss_legendre(5, 1.0, 1.0));
}
