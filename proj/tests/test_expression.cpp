#include <doctest.h>

#include <morpde/expression.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace morpde;

namespace {

double ev1(const std::string& src, double t, double x) {
  return parse_expression(src, 1)(t, vec1(x));
}

std::string what_of(const std::string& src, int dim) {
  try {
    parse_expression(src, dim);
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("expression: literals and arithmetic") {
  CHECK(ev1("2", 0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ev1("1 + 2*3", 0, 0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(ev1("(1+2)*3", 0, 0) == doctest::Approx(9.0).epsilon(1e-15));
  CHECK(ev1("7/2", 0, 0) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(ev1("2^3^2", 0, 0) == doctest::Approx(512.0).epsilon(1e-15));  // right-assoc
  CHECK(ev1("-2^2", 0, 0) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(ev1("(-2)^2", 0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(ev1("2^-1", 0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(ev1("+3", 0, 0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(ev1("1 - 2 - 3", 0, 0) == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(ev1("1 - (2 - 3)", 0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ev1(".5 + 1.5e2", 0, 0) == doctest::Approx(150.5).epsilon(1e-15));
}

TEST_CASE("expression: variables and arity of the domain") {
  CHECK(ev1("t + x1", 2.0, 3.0) == doctest::Approx(5.0).epsilon(1e-15));
  Expression e2 = parse_expression("x1*x2 + t", 2);
  CHECK(e2(1.0, vec2(2.0, 3.0)) == doctest::Approx(7.0).epsilon(1e-15));

  std::string msg = what_of("x2 + 1", 1);
  CHECK(msg.find("x2") != std::string::npos);
  CHECK(msg.find("two-dimensional") != std::string::npos);
}

TEST_CASE("expression: functions") {
  CHECK(ev1("sin(0)", 0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ev1("cos(0)", 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ev1("exp(1)", 0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(ev1("abs(-3.5)", 0, 0) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(ev1("min(2, -1)", 0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(ev1("max(2, -1)", 0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  double x = 0.3125;
  CHECK(ev1("exp(-t)*sin(3.141592653589793*x1)", 0.5, x) ==
        doctest::Approx(std::exp(-0.5) * std::sin(3.141592653589793 * x)).epsilon(1e-15));
}

TEST_CASE("expression: step semantics and breakpoint collection") {
  Expression e = parse_expression("step(t, 1.0, 2.0, 4.0)", 1);
  CHECK(e(0.5, vec1(0.0)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(e(1.0, vec1(0.0)) == doctest::Approx(2.0).epsilon(1e-15));  // boundary: first value
  CHECK(e(1.0 + 1e-9, vec1(0.0)) == doctest::Approx(4.0).epsilon(1e-15));
  REQUIRE(e.time_breakpoints().size() == 1);
  CHECK(e.time_breakpoints()[0] == 1.0);

  // Constant-in-space exponent: no steps, no breakpoints.
  Expression c = parse_expression("2 + 0*x1", 1);
  CHECK(c.time_breakpoints().empty());
  CHECK(c(3.0, vec1(0.7)) == doctest::Approx(2.0).epsilon(1e-15));

  // Spatial switch: valid, but registers no time breakpoint.
  Expression s = parse_expression("step(x1, 0.5, 1, 2)", 1);
  CHECK(s.time_breakpoints().empty());
  CHECK(s(0.0, vec1(0.25)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s(0.0, vec1(0.75)) == doctest::Approx(2.0).epsilon(1e-15));

  // Several thresholds: sorted, deduplicated.
  Expression m = parse_expression("step(t, 0.75, 1, 2) + step(t, 0.25, 3, 4)", 1);
  REQUIRE(m.time_breakpoints().size() == 2);
  CHECK(m.time_breakpoints()[0] == 0.25);
  CHECK(m.time_breakpoints()[1] == 0.75);
  Expression dup = parse_expression("step(t, 0.5, 1, 2)*step(t, 0.5, 3, 4)", 1);
  CHECK(dup.time_breakpoints().size() == 1);

  // Threshold may be a constant expression, but never variable-dependent.
  Expression ce = parse_expression("step(t, 1/4, 2, 4)", 1);
  CHECK(ce.time_breakpoints()[0] == 0.25);
  std::string msg = what_of("step(t, x1, 1, 2)", 1);
  CHECK(msg.find("constant") != std::string::npos);
}

TEST_CASE("expression: malformed input is rejected with a column") {
  // Wrong arity, as in a three-argument step.
  std::string msg = what_of("step(t, 1.0, 2.0)", 1);
  CHECK(msg.find("step") != std::string::npos);
  CHECK(msg.find("4 arguments") != std::string::npos);
  CHECK(msg.find("got 3") != std::string::npos);

  CHECK(what_of("sin()", 1).find("1 argument") != std::string::npos);
  CHECK(what_of("sin(1, 2)", 1).find("got 2") != std::string::npos);
  CHECK(what_of("min(1)", 1).find("2 arguments") != std::string::npos);
  CHECK(what_of("foo(1)", 1).find("unknown function 'foo'") != std::string::npos);
  CHECK(what_of("bar + 1", 1).find("unknown identifier 'bar'") != std::string::npos);
  CHECK(what_of("t(1)", 1).find("variable") != std::string::npos);
  CHECK(what_of("sin + 1", 1).find("argument list") != std::string::npos);
  CHECK(what_of("2 +", 1).find("unexpected end") != std::string::npos);
  CHECK(what_of("(1", 1).find("expected ')'") != std::string::npos);
  CHECK(what_of(")", 1).find("unexpected ')'") != std::string::npos);
  CHECK(what_of("1 2", 1).find("trailing") != std::string::npos);
  CHECK(what_of("1 @ 2", 1).find("unexpected character '@'") != std::string::npos);
  CHECK(what_of("", 1).find("empty expression") != std::string::npos);
  CHECK(what_of("   ", 1).find("empty expression") != std::string::npos);

  // Columns are 1-based into the value text.
  CHECK(what_of("  bogus", 1).find("column 3") != std::string::npos);
  CHECK(what_of("1 + @", 1).find("column 5") != std::string::npos);

  CHECK_THROWS_AS(parse_expression("t", 3), config_error);
}

TEST_CASE("expression: canonical text is idempotent and value-preserving") {
  const std::vector<std::string> corpus = {
      "2",
      "1 + 2*3",
      "(1+2)*3",
      "1 - (2 - 3)",
      "1 + (2 + 3)",
      "6/2/3",
      "1/(2*3)",
      "-x1^2",
      "(-x1)^2",
      "2^-3",
      "2^3^2",
      "(2^3)^2",
      "-(-x1)",
      "-sin(t)",
      "exp(-t)*sin(3.141592653589793*x1)",
      "step(t, 0.5, 2, 4)",
      "max(min(t, 1), 0) + abs(x1 - 0.5)",
      "2 + 0*x1",
  };
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dist(0.1, 0.9);
  for (const auto& src : corpus) {
    CAPTURE(src);
    Expression once = parse_expression(src, 1);
    Expression twice = parse_expression(once.text(), 1);
    CHECK(twice.text() == once.text());
    CHECK(twice.time_breakpoints() == once.time_breakpoints());
    for (int k = 0; k < 5; ++k) {
      double t = dist(rng), x = dist(rng);
      double a = once(t, vec1(x));
      double b = twice(t, vec1(x));
      CHECK(a == b);  // bitwise equal
    }
  }
  // Spot-check normalized spacing.
  CHECK(parse_expression("1+2 * x1", 1).text() == "1 + 2 * x1");
  CHECK(parse_expression("step( t , 0.5 ,2, 4 )", 1).text() == "step(t, 0.5, 2, 4)");
}

TEST_CASE("expression: map binding, constness, emptiness") {
  Expression e = parse_expression("t*x1", 1);
  ScalarMap f = e.map();
  CHECK(f(2.0, vec1(3.0)) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK_FALSE(e.is_constant());
  CHECK(parse_expression("2 + 3*4", 1).is_constant());
  CHECK_FALSE(parse_expression("2 + 0*x1", 1).is_constant());  // syntactic, not algebraic

  Expression empty;
  CHECK(empty.empty());
  CHECK(empty.is_constant());
  CHECK_THROWS_AS(empty(0.0, vec1(0.0)), config_error);
  CHECK_THROWS_AS(empty.map(), config_error);

  // Evaluation-point arity shortfall is caught.
  Expression e2 = parse_expression("x2", 2);
  CHECK_THROWS_AS(e2(0.0, vec1(0.0)), config_error);
}
