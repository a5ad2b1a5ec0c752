#include <doctest.h>

#include <fstream>
#include <sstream>

#include "causal_testbed/error.hpp"
#include "causal_testbed/knobs.hpp"

using namespace ctb;

TEST_CASE("canonical settings match the reference table") {
  std::ifstream in(std::string(CTB_TEST_DATA) + "/settings_table.txt");
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int index = 0;
    std::string f[6];
    ss >> index >> f[0] >> f[1] >> f[2] >> f[3] >> f[4] >> f[5];
    REQUIRE(index == rows + 1);
    Knobs k = canonical_setting(index);
    INFO("setting " << index);
    CHECK(to_string(k.treatment_model) == f[0]);
    CHECK(to_string(k.treatment_pct) == f[1]);
    CHECK(to_string(k.overlap) == f[2]);
    CHECK(to_string(k.response_model) == f[3]);
    CHECK(to_string(k.alignment) == f[4]);
    CHECK(to_string(k.heterogeneity) == f[5]);
    ++rows;
  }
  CHECK(rows == 77);
}

TEST_CASE("setting index out of range") {
  CHECK_THROWS_WITH_AS(canonical_setting(78), "setting out of range 1..77 (got 78)", Error);
  CHECK_THROWS_AS(canonical_setting(0), Error);
}

TEST_CASE("alignment none appears only in settings 8 and 16") {
  for (int i = 1; i <= 77; ++i) {
    bool none = canonical_setting(i).alignment == Alignment::none;
    CHECK(none == (i == 8 || i == 16));
  }
}

TEST_CASE("knob string and JSON round trip") {
  for (int i = 1; i <= 77; ++i) {
    Knobs k = canonical_setting(i);
    CHECK(knobs_from_string(to_string(k)) == k);
    nlohmann::json j = k;
    CHECK(j.get<Knobs>() == k);
  }
  CHECK_THROWS_AS(knobs_from_string("linear/low/full"), Error);
  CHECK_THROWS_AS(knobs_from_string("linear/medium/full/linear/low/none"), Error);
}

TEST_CASE("knob derived quantities") {
  Knobs k;
  k.treatment_pct = TreatmentPct::low;
  CHECK(k.target_treated_fraction() == doctest::Approx(0.35));
  k.treatment_pct = TreatmentPct::high;
  CHECK(k.target_treated_fraction() == doctest::Approx(0.65));
  k.alignment = Alignment::none;
  CHECK(k.alignment_probability() == 0.0);
  k.alignment = Alignment::low;
  CHECK(k.alignment_probability() == doctest::Approx(0.25));
  k.alignment = Alignment::high;
  CHECK(k.alignment_probability() == doctest::Approx(0.75));
}
