#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "octa/schedules.hpp"

using namespace octa;

TEST_CASE("step1 closed form") {
  ScheduleSpec s{ScheduleKind::step1, 1e-4, 100};
  CHECK(lr_at(s, 0) == 1e-4);
  CHECK(lr_at(s, 24) == 1e-4);
  CHECK(lr_at(s, 25) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(lr_at(s, 99) == doctest::Approx(1e-5).epsilon(1e-12));
  for (int e = 0; e < 100; ++e) {
    double expect = e < 25 ? 1e-4 : 1e-5;
    CHECK(lr_at(s, e) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("step2 closed form") {
  ScheduleSpec s{ScheduleKind::step2, 1e-4, 100};
  for (int e = 0; e < 100; ++e) {
    double expect = 1e-4 * std::pow(0.6, e / 25);
    CHECK(lr_at(s, e) == doctest::Approx(expect).epsilon(1e-15));
  }
  CHECK(lr_at(s, 99) == doctest::Approx(1e-4 * 0.216).epsilon(1e-12));
  // exactly four distinct values when E divides by 4
  std::set<double> values;
  for (int e = 0; e < 100; ++e) values.insert(lr_at(s, e));
  CHECK(values.size() == 4);
}

TEST_CASE("cosine closed form") {
  ScheduleSpec s{ScheduleKind::cosine, 0.001, 100};
  CHECK(lr_at(s, 0) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(lr_at(s, 99) == doctest::Approx(0.0).epsilon(1e-15));
  for (int e = 0; e < 100; ++e) {
    double expect = 0.001 * 0.5 * (1.0 + std::cos(M_PI * e / 99.0));
    CHECK(lr_at(s, e) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("schedules are monotone nonincreasing and pure") {
  for (ScheduleKind kind : {ScheduleKind::step1, ScheduleKind::step2, ScheduleKind::cosine}) {
    ScheduleSpec s{kind, 0.01, 100};
    double prev = lr_at(s, 0);
    for (int e = 1; e < 100; ++e) {
      double lr = lr_at(s, e);
      CHECK(lr <= prev);
      CHECK(lr == lr_at(s, e));  // referential transparency
      prev = lr;
    }
  }
}

TEST_CASE("step1 takes exactly two distinct values") {
  ScheduleSpec s{ScheduleKind::step1, 0.01, 100};
  std::set<double> values;
  for (int e = 0; e < 100; ++e) values.insert(lr_at(s, e));
  CHECK(values.size() == 2);
}

TEST_CASE("epoch range and names") {
  ScheduleSpec s{ScheduleKind::step1, 0.01, 10};
  CHECK_THROWS_AS(lr_at(s, -1), std::out_of_range);
  CHECK_THROWS_AS(lr_at(s, 10), std::out_of_range);

  CHECK(schedule_from_name("step1") == ScheduleKind::step1);
  CHECK(schedule_from_name("step2") == ScheduleKind::step2);
  CHECK(schedule_from_name("cosine") == ScheduleKind::cosine);
  CHECK_THROWS_AS(schedule_from_name("warmup"), std::invalid_argument);
  CHECK(std::string(schedule_name(ScheduleKind::cosine)) == "cosine");
}
