#include "affdim/bench.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

using namespace affdim;

namespace {

FamilySpec bm_spec() { return FamilySpec::bm(4, 2, {{0, 0}, {0, 1}, {2, 0}}); }

FamilySpec fj_spec() {
  return FamilySpec::fj(0.5, 1.0 / 3, {0, 0, 0.5}, {0, 1.0 / 3, 2.0 / 3});
}

}  // namespace

TEST_CASE("make_family constructors") {
  const Ifs bm = make_family(bm_spec());
  CHECK(bm.size() == 3);
  CHECK(bm.map(0).A.a == doctest::Approx(0.25));
  CHECK(bm.map(0).A.d == doctest::Approx(0.5));

  const Ifs fj = make_family(fj_spec());
  CHECK(fj.size() == 3);
  CHECK(fj.map(1).t.y == doctest::Approx(1.0 / 3));

  CHECK_THROWS_WITH_AS(static_cast<void>(make_family(FamilySpec::bm(2, 4, {{0, 0}}))),
                       doctest::Contains("n >= m"), Error);
  CHECK_THROWS_WITH_AS(static_cast<void>(make_family(FamilySpec::bm(4, 2, {{0, 0}, {0, 0}}))),
                       doctest::Contains("repeated"), Error);
  CHECK_THROWS_WITH_AS(static_cast<void>(make_family(FamilySpec::bm(4, 2, {{4, 0}}))),
                       doctest::Contains("outside"), Error);

  // overlapping rectangles violate the rectangular OSC
  CHECK_THROWS_WITH_AS(
      static_cast<void>(make_family(FamilySpec::fj(0.6, 0.5, {0, 0.3}, {0, 0.1}))),
      doctest::Contains("overlap"), Error);
}

TEST_CASE("reference values for the BM benchmark") {
  const auto refs = reference_values(bm_spec());
  REQUIRE(refs.size() == 3);
  double proj = 0, fibre = 0, assouad = 0;
  for (const auto& r : refs) {
    if (r.quantity == Quantity::projection_assouad) proj = r.value;
    if (r.quantity == Quantity::delta) fibre = r.value;
    if (r.quantity == Quantity::assouad) assouad = r.value;
  }
  CHECK(proj == doctest::Approx(0.5));
  CHECK(fibre == doctest::Approx(1.0));
  CHECK(assouad == doctest::Approx(1.5));
}

TEST_CASE("BM reference cross-checked against the exact two-scale oracle") {
  // max over level-k windows of the fine counts inside, straight from the
  // exact cell enumeration (two spare levels keep the bottom counts clean)
  const CellSet exact = oracle::bm42_normalized({{0, 0}, {0, 1}, {2, 0}}).cells(14);
  const DimensionEstimate est = assouad_scan(exact, {2, 4, 6}, 6, "oracle-assouad");
  CHECK(std::fabs(est.value - 1.5) < 0.08);
}

TEST_CASE("reference values for the FJ benchmark") {
  const auto refs = reference_values(fj_spec());
  REQUIRE(refs.size() == 4);
  double s = 0, proj = 0, delta = 0, assouad = 0;
  for (const auto& r : refs) {
    if (r.quantity == Quantity::frostman) s = r.value;
    if (r.quantity == Quantity::projection_assouad) proj = r.value;
    if (r.quantity == Quantity::delta) delta = r.value;
    if (r.quantity == Quantity::assouad) assouad = r.value;
  }
  CHECK(s == doctest::Approx(std::log(1.5) / std::log(2.0)).epsilon(1e-12));
  CHECK(proj == doctest::Approx(1.0));
  CHECK(delta == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
  CHECK(assouad == doctest::Approx(1.0 + std::log(2.0) / std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("full-grid BM degenerates to the square") {
  const auto refs = reference_values(FamilySpec::bm(3, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}, {2, 1}}));
  double assouad = 0;
  for (const auto& r : refs)
    if (r.quantity == Quantity::assouad) assouad = r.value;
  CHECK(assouad == doctest::Approx(2.0));
}

TEST_CASE("custom families have no references") {
  FamilySpec spec;
  spec.kind = FamilyKind::custom;
  spec.path = "/nonexistent.json";
  CHECK_THROWS_AS(static_cast<void>(reference_values(spec)), Error);
}

TEST_CASE("FJ SSC internal consistency between closed form and estimator") {
  // non-overlapping projected system: s = log m / log(1/beta)
  const FamilySpec spec = FamilySpec::fj(0.25, 0.2, {0, 0.75}, {0, 0.8});
  const auto refs = reference_values(spec);
  double s_ref = 0;
  for (const auto& r : refs)
    if (r.quantity == Quantity::frostman) s_ref = r.value;
  CHECK(s_ref == doctest::Approx(std::log(2.0) / std::log(4.0)).epsilon(1e-12));

  const Ifs ifs = make_family(spec);
  const auto proj = project_ifs(ifs);
  const DimensionEstimate est = frostman_dim(
      MeasureModel(SimilarityIfs1D(proj.maps(), std::vector<double>{0.5, 0.5})), 16);
  CHECK(std::fabs(est.value - s_ref) < 0.02);
}

TEST_CASE("verify_formula is deterministic and well-formed") {
  const auto rows1 = verify_formula(bm_spec(), 12);
  const auto rows2 = verify_formula(bm_spec(), 12);
  REQUIRE(rows1.size() == rows2.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].estimate == rows2[i].estimate);
    CHECK(rows1[i].pass == rows2[i].pass);
  }
  // assouad, projection, delta, composite
  CHECK(rows1.size() == 4);
  CHECK(rows1.back().note.find("composite") != std::string::npos);
}

TEST_CASE("verification rows serialize to CSV and JSON") {
  const auto rows = verify_formula(bm_spec(), 12);
  std::stringstream csv;
  write_rows_csv(csv, rows);
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "quantity,reference,estimate,tolerance,pass,estimator_reference,runtime_seconds,note");

  std::stringstream js;
  write_rows_json(js, rows);
  CHECK(js.str().find("\"quantity\"") != std::string::npos);
}
