#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "celo/baselines.hpp"
#include "celo/error.hpp"
#include "celo/rng.hpp"
#include "test_util.hpp"

using namespace celo;

namespace {

ParamSet one_tensor(double value) {
  ParamSet p;
  p.add("w", Tensor::from({1}, {value}));
  return p;
}

RunRecord record_with_final(const std::string& task, double level, bool diverged = false) {
  RunRecord r;
  r.task_id = task;
  r.optimizer_id = "x";
  r.steps = 20;
  r.losses.assign(20, level);
  r.diverged = diverged;
  return r;
}

}  // namespace

TEST_CASE("adam first step moves by ~lr in the gradient direction") {
  AdamConfig config;
  config.lr = 0.1;
  ParamSet theta = one_tensor(5.0);
  AdamState state = make_adam_state(theta);
  adam_step(config, theta, one_tensor(2.0), state);
  // mhat = g, sqrt(vhat) = |g| -> update = lr * g/(|g|+eps) ~= lr.
  CHECK(5.0 - theta.at("w")[0] == doctest::Approx(0.1).epsilon(1e-7));
}

TEST_CASE("adam zero gradient from zero state is a fixed point") {
  AdamConfig config;
  ParamSet theta = one_tensor(3.0);
  AdamState state = make_adam_state(theta);
  for (int i = 0; i < 5; ++i) adam_step(config, theta, one_tensor(0.0), state);
  CHECK(theta.at("w")[0] == 3.0);
}

TEST_CASE("adam trajectories are reproducible") {
  AdamConfig config;
  config.lr = 0.01;
  ParamSet ta = one_tensor(1.0), tb = one_tensor(1.0);
  AdamState sa = make_adam_state(ta), sb = make_adam_state(tb);
  RngStream rng_a(7), rng_b(7);
  for (int i = 0; i < 50; ++i) {
    adam_step(config, ta, one_tensor(rng_a.next_gaussian()), sa);
    adam_step(config, tb, one_tensor(rng_b.next_gaussian()), sb);
  }
  CHECK(testing::bit_equal(ta, tb));
}

TEST_CASE("adam update magnitude is scale-invariant at t=1") {
  for (double scale : {1.0, 10.0, 1e4}) {
    AdamConfig config;
    config.lr = 0.05;
    ParamSet theta = one_tensor(0.0);
    AdamState state = make_adam_state(theta);
    adam_step(config, theta, one_tensor(3.0 * scale), state);
    const double update = std::abs(theta.at("w")[0]);
    CHECK(update <= config.lr);
    CHECK(update >= config.lr * (1.0 - 1e-6));
  }
}

TEST_CASE("sgdm with mu=0 is plain sgd") {
  ParamSet theta = one_tensor(1.0);
  SgdmState state = make_sgdm_state(theta);
  sgdm_step(0.1, 0.0, theta, one_tensor(2.0), state);
  CHECK(theta.at("w")[0] == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sgdm constant gradient builds the geometric-series velocity") {
  const double mu = 0.9;
  ParamSet theta = one_tensor(0.0);
  SgdmState state = make_sgdm_state(theta);
  const int k = 12;
  for (int i = 0; i < k; ++i) sgdm_step(0.0, mu, theta, one_tensor(3.0), state);
  const double expected = 3.0 * (1.0 - std::pow(mu, k)) / (1.0 - mu);
  CHECK(state.velocity.at("w")[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sgdm zero gradient with zero velocity is a fixed point") {
  ParamSet theta = one_tensor(2.0);
  SgdmState state = make_sgdm_state(theta);
  sgdm_step(0.5, 0.9, theta, one_tensor(0.0), state);
  CHECK(theta.at("w")[0] == 2.0);
}

TEST_CASE("half power sweep spans the documented grid") {
  const std::vector<double> rates = half_power_sweep();
  REQUIRE(rates.size() == 15);
  CHECK(rates.front() == doctest::Approx(1e-7).epsilon(1e-12));
  CHECK(rates.back() == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] > rates[i - 1]);

  const std::vector<double> one = half_power_sweep(1e-3, 1e-3);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(1e-3).epsilon(1e-12));

  CHECK_THROWS_AS(half_power_sweep(2e-7, 1.0), Error);
}

TEST_CASE("best_trial picks the argmin and skips divergence") {
  std::vector<RunRecord> records;
  records.push_back(record_with_final("t", 2.0));
  records.push_back(record_with_final("t", 1.5));
  records.push_back(record_with_final("t", 1.9));
  CHECK(best_trial(records) == 1);

  records[1].diverged = true;
  CHECK(best_trial(records) == 2);

  SUBCASE("exact tie goes to the smaller learning rate (earlier entry)") {
    records.clear();
    records.push_back(record_with_final("t", 1.5));
    records.push_back(record_with_final("t", 1.5));
    CHECK(best_trial(records) == 0);
  }

  SUBCASE("all diverged raises the no-valid-baseline error") {
    for (RunRecord& r : records) r.diverged = true;
    CHECK_THROWS_WITH_AS(best_trial(records),
                         doctest::Contains("no valid baseline"), Error);
  }
}
