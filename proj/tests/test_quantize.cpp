#include <doctest.h>

#include <cmath>
#include <random>

#include "spikezip/errors.hpp"
#include "spikezip/quantize.hpp"

using namespace spikezip;

TEST_CASE("quantize examples") {
  const QuantizerSpec unit{1.0, 0, 3, false};
  CHECK(quantize(2.4, unit) == 2.0);
  CHECK(quantize(-5.0, unit) == 0.0);  // clamps at alpha

  // round(1.5) is half-away-from-zero
  const QuantizerSpec half{0.5, -4, 4, true};
  CHECK(quantize(0.75, half) == 1.0);
  CHECK(quantize(-0.75, half) == -1.0);
}

TEST_CASE("quantizer spec validation") {
  CHECK_THROWS_AS((QuantizerSpec{-1.0, 0, 3, false}.validate()), config_error);
  CHECK_THROWS_AS((QuantizerSpec{1.0, 3, 3, true}.validate()), config_error);
  CHECK_THROWS_AS((QuantizerSpec{1.0, 1, 3, true}.validate()), config_error);  // 0 outside range
  CHECK_THROWS_AS((QuantizerSpec{1.0, -1, 3, false}.validate()), config_error);  // unsigned alpha
  CHECK_NOTHROW((QuantizerSpec{1.0, -4, 4, true}.validate()));
}

TEST_CASE("calibrate examples") {
  const Tensor samples({3}, {3.0, -1.0, 0.5});
  const QuantizerSpec unsigned_q = calibrate({samples}, 4, false);
  CHECK(unsigned_q.s == 1.0);
  CHECK(unsigned_q.alpha == 0);
  CHECK(unsigned_q.beta == 3);

  const Tensor s2({2}, {2.0, -0.5});
  const QuantizerSpec signed_q = calibrate({s2}, 9, true);
  CHECK(signed_q.s == 0.5);
  CHECK(signed_q.alpha == -4);
  CHECK(signed_q.beta == 4);

  const QuantizerSpec degenerate = calibrate({Tensor({4})}, 8, true);
  CHECK(degenerate.s == 1e-12);
  CHECK(quantize(0.0, degenerate) == 0.0);

  CHECK_THROWS_AS(calibrate({}, 4, false), calibration_error);
  CHECK_THROWS_AS(calibrate({samples}, 1, false), calibration_error);
  // two levels leave no room for a symmetric clamp range
  CHECK_THROWS_AS(calibrate({samples}, 2, true), calibration_error);
  CHECK_NOTHROW(calibrate({samples}, 2, false));
}

TEST_CASE("quantize properties over random inputs") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> xs(-20.0, 20.0);
  std::uniform_real_distribution<double> ss(0.05, 3.0);
  std::uniform_int_distribution<long long> bs(1, 12);
  for (int rep = 0; rep < 2000; ++rep) {
    const bool is_signed = rep % 2 == 0;
    QuantizerSpec q;
    q.is_signed = is_signed;
    q.s = ss(rng);
    q.beta = bs(rng);
    q.alpha = is_signed ? -q.beta : 0;
    const double x = xs(rng);
    const double y = quantize(x, q);

    // idempotence
    CHECK(quantize(y, q) == y);
    // range
    CHECK(y >= q.s * static_cast<double>(q.alpha));
    CHECK(y <= q.s * static_cast<double>(q.beta));
    // grid
    const double level = y / q.s;
    CHECK(std::fabs(level - std::round(level)) < 1e-9);
    // monotonicity
    const double x2 = xs(rng);
    if (x <= x2)
      CHECK(y <= quantize(x2, q));
    else
      CHECK(y >= quantize(x2, q));
  }
}

TEST_CASE("neuron parameter mapping is the identity on fields") {
  const QuantizerSpec q{0.5, -4, 4, true};
  const NeuronParams p = to_neuron_params(q);
  CHECK(p.v_thr == 0.5);
  CHECK(p.s_min == -4);
  CHECK(p.s_max == 4);

  const NeuronParams p2 = to_neuron_params(QuantizerSpec{1.0, 0, 3, false});
  CHECK(p2.v_thr == 1.0);
  CHECK(p2.s_min == 0);
  CHECK(p2.s_max == 3);

  const QuantizerSpec round_trip = from_neuron_params(p, true);
  CHECK(round_trip.s == q.s);
  CHECK(round_trip.alpha == q.alpha);
  CHECK(round_trip.beta == q.beta);
}

TEST_CASE("tensor quantize applies elementwise") {
  const QuantizerSpec q{0.5, -2, 2, true};
  const Tensor x({4}, {0.2, 0.75, -3.0, 1.1});
  const Tensor y = quantize(x, q);
  CHECK(y.at(0) == 0.0);
  CHECK(y.at(1) == 1.0);
  CHECK(y.at(2) == -1.0);
  CHECK(y.at(3) == 1.0);
}
