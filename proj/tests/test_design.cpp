#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sims/design.hpp"
#include "sims/errors.hpp"

using namespace sims;

namespace {

DesignParams identical_design() {
  DesignParams d;
  d.mode = DesignParams::Mode::Identical;
  d.n_rows = 3;
  d.L = 12.21;
  d.t = 1.25;
  d.h1 = {5.32};
  d.h2 = {7.24};
  d.h3 = {11.45};
  d.t_beam = {0.21, 0.23, 0.19};
  d.E = 70.0;
  return d;
}

DesignParams per_row_design() {
  DesignParams d;
  d.mode = DesignParams::Mode::NonIdentical;
  d.n_rows = 2;
  d.L = 11.34;
  d.t = 1.24;
  d.h1 = {4.15, 4.3};
  d.h2 = {6.28, 6.4};
  d.h3 = {10.17, 10.3};
  d.t_beam = {0.28, 0.25};
  d.E = 70.0;
  return d;
}

} // namespace

TEST_CASE("packing round-trips in identical mode") {
  const DesignParams d = identical_design();
  CHECK(d.num_params() == 5 + 3);
  const Eigen::VectorXd theta = d.pack();
  REQUIRE(theta.size() == d.num_params());
  DesignParams e = d;
  e.unpack(theta);
  CHECK(e.pack() == theta);
  CHECK(e.L == d.L);
  CHECK(e.t_beam == d.t_beam);
}

TEST_CASE("packing round-trips in per-row mode") {
  const DesignParams d = per_row_design();
  CHECK(d.num_params() == 2 + 4 * 2);
  const Eigen::VectorXd theta = d.pack();
  DesignParams e = d;
  e.unpack(theta);
  CHECK(e.pack() == theta);
  CHECK(e.h2 == d.h2);
}

TEST_CASE("optional stiffness slot appends to the packing") {
  DesignParams d = identical_design();
  d.optimize_E = true;
  const Eigen::VectorXd theta = d.pack();
  REQUIRE(theta.size() == 5 + 3 + 1);
  CHECK(theta[theta.size() - 1] == 70.0);
  DesignParams e = d;
  Eigen::VectorXd theta2 = theta;
  theta2[theta2.size() - 1] = 25.0;
  e.unpack(theta2);
  CHECK(e.E == 25.0);
}

TEST_CASE("parameter names are unique and match the packing slots") {
  for (const DesignParams &base : {identical_design(), per_row_design()}) {
    DesignParams d = base;
    d.optimize_E = true;
    const auto names = d.param_names();
    REQUIRE(static_cast<int>(names.size()) == d.num_params());
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());

    // Perturbing slot i must change the field the name points at.
    const Eigen::VectorXd theta = d.pack();
    for (int i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd theta2 = theta;
      theta2[i] += 0.125;
      DesignParams e = d;
      e.unpack(theta2);
      const Eigen::VectorXd back = e.pack();
      for (int k = 0; k < theta.size(); ++k)
        CHECK(back[k] == (k == i ? theta[k] + 0.125 : theta[k]));
    }
  }
}

TEST_CASE("cell extraction per row") {
  const DesignParams d = identical_design();
  for (int r = 0; r < 3; ++r) {
    const CellGeometry c = d.cell(r);
    CHECK(c.L == d.L);
    CHECK(c.h2 == d.h2[0]);
    CHECK(c.t_beam == d.t_beam[r]);
  }
  const DesignParams p = per_row_design();
  CHECK(p.cell(1).h1 == p.h1[1]);
  CHECK(p.cell(0).h3 == p.h3[0]);
}

TEST_CASE("validation rejects inconsistent geometry") {
  CHECK_NOTHROW(identical_design().validate());
  CHECK_NOTHROW(per_row_design().validate());

  auto expect_reject = [](auto mutate) {
    DesignParams d = identical_design();
    mutate(d);
    CHECK_THROWS_AS(d.validate(), ConstructionError);
  };
  expect_reject([](DesignParams &d) { d.L = -1.0; });
  expect_reject([](DesignParams &d) { d.t = 0.0; });
  expect_reject([](DesignParams &d) { d.L = 6.0 * d.t; });       // walls overlap
  expect_reject([](DesignParams &d) { d.t_beam[1] = d.h1[0]; }); // beam too thick
  expect_reject([](DesignParams &d) { d.h2[0] = d.h1[0] - 0.1; });
  expect_reject([](DesignParams &d) { d.h3[0] = d.h2[0]; });     // no apex room
  expect_reject([](DesignParams &d) { d.t_beam = {0.2, 0.2}; }); // wrong count
}

TEST_CASE("bounds must be geometrically valid everywhere") {
  const DesignParams d = identical_design();
  DesignBounds ok;
  ok.lower = d.pack().array() - 0.05;
  ok.upper = d.pack().array() + 0.05;
  CHECK_NOTHROW(ok.validate_against(d));

  DesignBounds inverted = ok;
  inverted.lower[0] = ok.upper[0] + 1.0;
  CHECK_THROWS_AS(inverted.validate_against(d), ConfigError);

  // A corner of this box has L = 4t: invalid even though the center is fine.
  DesignBounds corner = ok;
  corner.lower[0] = 4.0 * d.t; // L lower bound
  CHECK_THROWS_AS(corner.validate_against(d), ConfigError);
}
