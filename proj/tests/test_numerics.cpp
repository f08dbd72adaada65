#include <doctest.h>

#include <cmath>

#include "v2xmec/errors.hpp"
#include "v2xmec/numerics.hpp"
#include "v2xmec/rng.hpp"

using namespace v2xmec;

TEST_SUITE("numerics") {

TEST_CASE("lambert w at fixed points") {
  CHECK(numerics::lambert_w0(0.0) == 0.0);
  CHECK(numerics::lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(numerics::lambert_w0(-std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-9));
  // Reference value from Newton iteration on w*e^w - 1 = 0.
  CHECK(numerics::lambert_w0(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-12));
}

TEST_CASE("lambert w inverts w*e^w across the domain") {
  auto gen = rng::make_engine(7, rng::Stream::oracle);
  for (int i = 0; i < 100000; ++i) {
    double x;
    switch (i % 3) {
      case 0: x = rng::uniform(gen, -std::exp(-1.0), 1.0); break;
      case 1: x = rng::uniform(gen, 0.0, 1e6); break;
      default: x = std::pow(10.0, rng::uniform(gen, -12.0, 6.0)); break;
    }
    const double w = numerics::lambert_w0(x);
    CHECK(w >= -1.0);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-10 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("lambert w is monotone increasing") {
  auto gen = rng::make_engine(11, rng::Stream::oracle);
  double prev_x = -std::exp(-1.0);
  double prev_w = numerics::lambert_w0(prev_x);
  for (int i = 0; i < 2000; ++i) {
    const double x = prev_x + rng::uniform(gen, 0.0, 1e3);
    const double w = numerics::lambert_w0(x);
    CHECK(w >= prev_w);
    prev_x = x;
    prev_w = w;
  }
}

TEST_CASE("lambert w domain handling") {
  CHECK_THROWS_AS(numerics::lambert_w0(-0.368), DomainError);
  // Inside the slack band just below the branch point: clamps to -1.
  CHECK(numerics::lambert_w0(-std::exp(-1.0) - 5e-13) == -1.0);
}

TEST_CASE("bisection finds known roots") {
  auto square = [](double x) { return x * x - 2.0; };
  const auto r = numerics::bisect_root(square, {0.0, 2.0, 1e-9, 200});
  CHECK(r.root == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));

  const auto zero = numerics::bisect_root([](double x) { return x; }, {-1.0, 1.0, 1e-9, 200});
  CHECK(zero.root == doctest::Approx(0.0).epsilon(1e-9));

  const auto expm =
      numerics::bisect_root([](double x) { return std::expm1(x); }, {-1.0, 1.0, 1e-9, 200});
  CHECK(expm.root == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("bisection is stable under bracket widening") {
  auto cubic = [](double x) { return x * x * x - 9.0; };
  const double narrow = numerics::bisect_root(cubic, {0.0, 3.0, 1e-10, 300}).root;
  const double wide = numerics::bisect_root(cubic, {0.0, 1000.0, 1e-10, 300}).root;
  CHECK(narrow == doctest::Approx(wide).epsilon(1e-8));
}

TEST_CASE("bisection error paths") {
  CHECK_THROWS_AS(
      numerics::bisect_root([](double x) { return x * x + 1.0; }, {0.0, 1.0, 1e-9, 50}),
      NoSignChangeError);
  CHECK_THROWS_AS(numerics::bisect_root([](double x) { return x - 0.357; }, {0.0, 1.0, 1e-18, 3}),
                  NonConvergenceError);
  CHECK_THROWS_AS(numerics::bisect_root([](double x) { return x; }, {1.0, 0.0, 1e-9, 50}),
                  DomainError);
}

TEST_CASE("bracket expansion doubles until the sign flips") {
  const auto b = numerics::expand_upper_bracket([](double x) { return x - 5.0; }, 0.0);
  CHECK(b.lo == 0.0);
  CHECK(b.hi == 8.0);  // probes 1, 2, 4, 8

  const auto first = numerics::expand_upper_bracket([](double x) { return x - 1.0; }, 0.0);
  CHECK(first.hi == 1.0);

  CHECK_THROWS_AS(numerics::expand_upper_bracket([](double x) { return x - 1e9; }, 0.0, 1e6),
                  NumericOverflowError);
  CHECK_THROWS_AS(numerics::expand_upper_bracket([](double x) { return x + 1.0; }, 0.0),
                  DomainError);
}

}  // TEST_SUITE
