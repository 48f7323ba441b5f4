#include <doctest.h>

#include <cmath>

#include "emdot/dataset.hpp"
#include "emdot/error.hpp"
#include "support.hpp"

using namespace emdot;
using namespace emdot::dataset;

namespace {

const std::vector<ColumnSpec> kMonthSchema{{"date", ColumnKind::Time, {}},
                                           {"v", ColumnKind::Numerical, {}},
                                           {"y", ColumnKind::Label, {}}};

LoadOptions monthly() {
  LoadOptions o;
  o.granularity = Granularity::Month;
  return o;
}

// Column c is categorical, x numerical; rows as (year, c, x, y).
TemporalDataset small(const std::string& body) {
  const std::vector<ColumnSpec> schema{{"year", ColumnKind::Time, {}},
                                       {"c", ColumnKind::Categorical, {}},
                                       {"x", ColumnKind::Numerical, {}},
                                       {"y", ColumnKind::Label, {}}};
  return parse_csv("year,c,x,y\n" + body, schema);
}

}  // namespace

TEST_CASE("monthly timestamps remap to consecutive time points") {
  const auto d = parse_csv("date,v,y\n2020-01,1,0\n2020-03,2,1\n2020-01,3,1\n", kMonthSchema, monthly());
  REQUIRE(d.num_time_points() == 2);
  CHECK(d.rows_at(1).size() == 2);
  CHECK(d.rows_at(2).size() == 1);
  CHECK(d.time_label(1) == "2020-01");
  CHECK(d.time_label(2) == "2020-03");
  CHECK(d.time_of(1) == 2);
}

TEST_CASE("a monthly span from Mar 2020 to May 2022 has 27 time points") {
  std::string csv = "date,v,y\n";
  for (int y = 2020; y <= 2022; ++y)
    for (int m = 1; m <= 12; ++m) {
      if ((y == 2020 && m < 3) || (y == 2022 && m > 5)) continue;
      char buf[32];
      std::snprintf(buf, sizeof buf, "%d-%02d-15,1,%d\n", y, m, m % 2);
      csv += buf;
    }
  const auto d = parse_csv(csv, kMonthSchema, monthly());
  CHECK(d.num_time_points() == 27);
  CHECK(d.time_label(27) == "2022-05");
}

TEST_CASE("non-binary label raises LabelError") {
  CHECK_THROWS_AS(parse_csv("date,v,y\n2020-01,1,2\n2020-02,1,0\n", kMonthSchema, monthly()), LabelError);
}

TEST_CASE("schema and row errors") {
  CHECK_THROWS_AS(parse_csv("date,v\n2020-01,1\n", kMonthSchema, monthly()), SchemaError);
  CHECK_THROWS_AS(parse_csv("date,v,y\n2020-01,1,0\n", kMonthSchema, monthly()), SchemaError);  // T < 2
  try {
    parse_csv("date,v,y\n2020-01,1,0\nnot-a-date,1,0\n", kMonthSchema, monthly());
    FAIL("expected RowError");
  } catch (const RowError& e) {
    CHECK(e.row() == 2);
  }
  CHECK_THROWS_AS(parse_csv("date,v,y\n2020-01,abc,0\n2020-02,1,0\n", kMonthSchema, monthly()), RowError);
  CHECK_THROWS_AS(load_csv("/nonexistent/emdot.csv", kMonthSchema), IoError);
}

TEST_CASE("sparse time points are dropped below the row threshold") {
  auto o = monthly();
  o.min_rows_per_timepoint = 2;
  const auto d =
      parse_csv("date,v,y\n2020-01,1,0\n2020-01,1,1\n2020-02,1,0\n2020-03,1,0\n2020-03,2,1\n", kMonthSchema, o);
  CHECK(d.num_time_points() == 2);
  CHECK(d.num_rows() == 4);
  REQUIRE(d.dropped_time_points().size() == 1);
  CHECK(d.dropped_time_points()[0] == "2020-02");
}

TEST_CASE("missing sentinels and quoted cells") {
  const auto d = small("2001,\"a,b\",NA,0\n2001,a,1,1\n2002,,NaN,0\n");
  const auto& c = d.features()[0];
  const auto& x = d.features()[1];
  CHECK(c.text[0] == "a,b");
  CHECK(c.is_missing(2));
  CHECK(x.is_missing(0));
  CHECK(x.is_missing(2));
  CHECK_FALSE(x.is_missing(1));
}

TEST_CASE("preprocessor vocabulary and standardisation") {
  const auto d = small("2001,A,1,0\n2001,A,3,1\n2002,,,0\n");
  const RowSet all{0, 1, 2};
  const auto state = fit_preprocessor(d, all);
  REQUIRE(state.categorical.size() == 1);
  CHECK(state.categorical[0].vocabulary == std::vector<std::string>{"A", kMissingLevel});
  CHECK(state.width() == 3);
  REQUIRE(state.numerical.size() == 1);
  CHECK(state.numerical[0].mean == 2.0);
  CHECK(state.numerical[0].stddev == 1.0);
  CHECK(state.feature_names() == std::vector<std::string>{"c=A", "c=MISSING", "x"});

  const auto X = transform(d, all, state);
  CHECK(X.at(0, 0) == 1.0);
  CHECK(X.at(0, 1) == 0.0);
  CHECK(X.at(0, 2) == -1.0);
  CHECK(X.at(1, 2) == 1.0);
  CHECK(X.at(2, 0) == 0.0);
  CHECK(X.at(2, 1) == 1.0);
  CHECK(X.at(2, 2) == 0.0);  // missing numerical imputes to the mean
  CHECK(X.labels[0] == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(X.time_points == std::vector<int>{1, 1, 2});
}

TEST_CASE("unseen levels map to an all-zero block") {
  const auto d = small("2001,A,1,0\n2001,A,2,1\n2002,B,3,0\n");
  const RowSet fit_rows{0, 1};
  const auto state = fit_preprocessor(d, fit_rows);
  const RowSet rows{2};
  const auto X = transform(d, rows, state);
  CHECK(X.at(0, 0) == 0.0);
  CHECK(X.at(0, 1) == 0.0);
}

TEST_CASE("constant numerical column transforms to zero") {
  const auto d = small("2001,A,5,0\n2001,A,5,1\n2002,A,5,0\n");
  const RowSet all{0, 1, 2};
  const auto state = fit_preprocessor(d, all);
  CHECK(state.numerical[0].mean == 5.0);
  CHECK(state.numerical[0].stddev == 0.0);
  const auto X = transform(d, all, state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(X.at(i, X.cols - 1) == 0.0);
}

TEST_CASE("preprocessor rejects an empty fit set") {
  const auto d = small("2001,A,5,0\n2002,A,5,1\n");
  CHECK_THROWS_AS(fit_preprocessor(d, RowSet{}), FitError);
}

TEST_CASE("missingness profile") {
  const auto d = small("2001,,1,0\n2001,,2,1\n2002,A,3,0\n2002,B,,1\n");
  const auto profile = missingness_profile(d);
  CHECK(profile[0] == std::vector<double>{1.0, 0.0});
  CHECK(profile[1] == std::vector<double>{0.0, 0.5});
}
