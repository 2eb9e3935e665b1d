#include <sstream>

#include <doctest.h>

#include "remlkit/model.hpp"
#include "remlkit/table.hpp"
#include "toy.hpp"

using namespace remlkit;
using remlkit::testing::toy_model;
using remlkit::testing::toy_theta;

TEST_CASE("csv round-trip") {
  std::stringstream in("a,b\n1,x\n2,y\n");
  const DataTable t = DataTable::read_csv(in);
  REQUIRE(t.names == std::vector<std::string>{"a", "b"});
  CHECK(t.rows() == 2);
  CHECK(t.columns[1][1] == "y");
  CHECK(t.column_index("b") == 1);
  CHECK(t.column_index("zz") == -1);
  std::stringstream out;
  t.write_csv(out);
  CHECK(out.str() == "a,b\n1,x\n2,y\n");
}

TEST_CASE("model descriptor parsing") {
  std::stringstream in(
      "# trial model\n"
      "response = yield\n"
      "fixed = dose\n"
      "random = year centre year.centre\n");
  const ModelDescriptor d = ModelDescriptor::parse(in);
  CHECK(d.response == "yield");
  CHECK(d.fixed == std::vector<std::string>{"dose"});
  CHECK(d.random_terms ==
        std::vector<std::string>{"year", "centre", "year.centre"});
}

TEST_CASE("toy model shape and factor map") {
  const ModelSpec m = toy_model();
  CHECK(m.n == 4);
  CHECK(m.p == 1);
  CHECK(m.q() == 1);
  CHECK(m.factors[0].levels == 2);
  CHECK(m.factors[0].level_of_row == std::vector<int>{0, 0, 1, 1});
  CHECK(m.total_levels() == 2);
  CHECK(m.system_order() == 3);
  CHECK(m.X.col(0).isOnes());
  CHECK(m.y(3) == 4.0);
}

TEST_CASE("interaction term expands to the level cross") {
  DataTable t;
  t.names = {"y", "a", "b"};
  t.columns = {{"1", "2", "3", "4"},
               {"u", "u", "v", "v"},
               {"p", "q", "p", "q"}};
  ModelDescriptor d;
  d.response = "y";
  d.random_terms = {"a.b"};
  const ModelSpec m = build_model(t, d);
  CHECK(m.factors[0].levels == 4);
  CHECK(m.factors[0].name == "a.b");
}

TEST_CASE("degenerate inputs rejected") {
  DataTable t;
  t.names = {"y", "g"};
  t.columns = {{"1", "2"}, {"a", "a"}};
  ModelDescriptor d;
  d.response = "y";
  d.random_terms = {"g"};
  CHECK_THROWS(build_model(t, d));  // single-level factor

  d.random_terms = {"missing"};
  CHECK_THROWS(build_model(t, d));

  DataTable empty;
  CHECK_THROWS(build_model(empty, d));
}

TEST_CASE("rank-deficient X rejected") {
  DataTable t;
  t.names = {"y", "x1", "g"};
  t.columns = {{"1", "2", "3", "4"},
               {"1", "1", "1", "1"},  // duplicates the intercept
               {"a", "a", "b", "b"}};
  ModelDescriptor d;
  d.response = "y";
  d.fixed = {"x1"};
  d.random_terms = {"g"};
  CHECK_THROWS_WITH_AS(build_model(t, d),
                       doctest::Contains("rank deficient"),
                       std::runtime_error);
}

TEST_CASE("h_matvec and hdot_matvec agree with explicit Z") {
  const ModelSpec m = toy_model();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(4, 2);
  z(0, 0) = z(1, 0) = z(2, 1) = z(3, 1) = 1.0;
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(4, 4) + 0.7 * z * z.transpose();
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
  CHECK((h_matvec(m, toy_theta(1.0, 0.7), v) - h * v).norm() < 1e-14);
  CHECK((hdot_matvec(m, 0, v) - z * z.transpose() * v).norm() < 1e-14);
}

TEST_CASE("theta domain checks") {
  Theta th = toy_theta();
  CHECK_NOTHROW(th.check(kKappaMin));
  th.sigma2 = 0.0;
  CHECK_THROWS(th.check(kKappaMin));
  th = toy_theta(1.0, 0.0);
  CHECK_THROWS(th.check(kKappaMin));
}
