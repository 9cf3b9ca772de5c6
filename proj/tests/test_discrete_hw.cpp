#include <doctest.h>

#include "ringsim/angles.hpp"
#include "ringsim/discrete_hw.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace ringsim;

TEST_CASE("synapse class names round trip") {
  for (auto c : {SynapseClass::fast_exc, SynapseClass::slow_exc, SynapseClass::fast_inh,
                 SynapseClass::slow_inh})
    CHECK(synapse_class_from_string(to_string(c)) == c);
  CHECK(is_excitatory(SynapseClass::slow_exc));
  CHECK_FALSE(is_excitatory(SynapseClass::fast_inh));
  CHECK_THROWS_AS(synapse_class_from_string("nmda"), std::invalid_argument);
}

TEST_CASE("topology validation") {
  HwTopology t;
  CHECK_NOTHROW(t.validate());
  CHECK(t.n_neurons() == 40);
  CHECK(t.pop_of(7) == 1);
  CHECK(to_degrees(t.population_spacing()) == doctest::Approx(36.0));
  auto big = t;
  big.pop_size = 26;
  CHECK_THROWS_AS(big.validate(), std::invalid_argument);
  auto sign = t;
  sign.classes[0].efficacy = -0.1;
  CHECK_THROWS_AS(sign.validate(), std::invalid_argument);
  auto mixed = t;
  mixed.velocity_inh = SynapseClass::fast_exc;
  CHECK_THROWS_AS(mixed.validate(), std::invalid_argument);
  auto exc = t;
  exc.velocity_exc = SynapseClass::fast_inh;
  CHECK_THROWS_AS(exc.validate(), std::invalid_argument);
}

TEST_CASE("quantize_profile rounds by sign") {
  const double u = 3.0;
  const auto zero = quantize_profile(std::vector<double>(10, 0.0), u);
  for (std::size_t k = 0; k < 10; ++k) {
    CHECK(zero.excitatory[k] == 0);
    CHECK(zero.inhibitory[k] == 0);
  }
  const auto q = quantize_profile({2.4 * u, -1.6 * u, 0.0}, u);
  CHECK(q.excitatory == std::vector<std::uint32_t>{2, 0, 0});
  CHECK(q.inhibitory == std::vector<std::uint32_t>{0, 2, 0});
  CHECK(q.residual[0] == doctest::Approx(0.4 * u));
  CHECK(q.residual[1] == doctest::Approx(0.4 * u));
  CHECK_THROWS_AS(quantize_profile({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(quantize_profile({10.0 * u, -10.0 * u}, u, 19), FanInError);
}

TEST_CASE("cosine profile quantized to a peak of 5") {
  const std::size_t P = 10;
  const double u = 0.7;
  std::vector<double> row(P);
  for (std::size_t d = 0; d < P; ++d)
    row[d] = 5.0 * u * std::cos(kTwoPi * static_cast<double>(d) / P);
  const auto q = quantize_profile(row, u);
  // Signed counts by direct rounding of 5 cos(2 pi d / 10).
  std::vector<long> expect(P), got(P);
  for (std::size_t d = 0; d < P; ++d) {
    expect[d] = std::lround(5.0 * std::cos(kTwoPi * static_cast<double>(d) / P));
    got[d] = static_cast<long>(q.excitatory[d]) - static_cast<long>(q.inhibitory[d]);
  }
  CHECK(got == expect);
  CHECK(got[0] == 5);
  for (std::size_t d = 1; d < P; ++d)
    CHECK(got[d] == got[P - d]);
  for (std::size_t d = 1; d <= P / 2; ++d)
    CHECK(got[d] <= got[d - 1]);
}

TEST_CASE("population profile matches the reference gains") {
  const auto w = population_profile(HwTopology{}, GainSet{});
  CHECK(w[0] == doctest::Approx(-0.60));
  CHECK(w[5] == doctest::Approx(-32.32));
  CHECK(w[1] == doctest::Approx(-16.46 + 15.86 * std::cos(std::numbers::pi / 5)));
  for (std::size_t d = 1; d < 10; ++d)
    CHECK(w[d] == w[10 - d]);
}

TEST_CASE("default ring fits in the fan-in budget") {
  const HwTopology t;
  const auto table = build_hw_ring(t, GainSet{});
  const auto fan = table.fan_in();
  REQUIRE(fan.size() == 40);
  for (auto f : fan) {
    CHECK(f <= 64);
    CHECK(f == fan[0]);
  }
  // Offsets 0..9 quantize to 0,0,1,2,2,3,2,2,1,0 inhibitory units at a unit weight of 12.
  CHECK(table.count(0, 0, t.ring_inh) == 0);
  CHECK(table.count(0, 4 * 2, t.ring_inh) == 1);
  CHECK(table.count(0, 4 * 5 + 3, t.ring_inh) == 3);
  CHECK(fan[0] == 4 * (1 + 2 + 2 + 3 + 2 + 2 + 1));
}

TEST_CASE("a ring with pop_size 1 is the population-level profile") {
  HwTopology t;
  t.pop_size = 1;
  const GainSet g;
  const auto table = build_hw_ring(t, g);
  const auto q = quantize_profile(population_profile(t, g), t.unit_weight);
  for (std::size_t a = 0; a < t.n_pops; ++a)
    for (std::size_t b = 0; b < t.n_pops; ++b) {
      const std::size_t d = (b + t.n_pops - a) % t.n_pops;
      CHECK(table.count(a, b, t.ring_inh) == q.inhibitory[d]);
      CHECK(table.count(a, b, t.ring_exc) == q.excitatory[d]);
    }
}

TEST_CASE("negligible gains give an empty table") {
  HwTopology t;
  const auto table = build_hw_ring(t, GainSet{-1e-3, 1e-3, 0.1});
  CHECK(table.empty());
  CHECK(table.total() == 0);
}

TEST_CASE("infeasible fan-in is reported with the offenders") {
  HwTopology t;
  t.unit_weight = 2.0;
  try {
    build_hw_ring(t, GainSet{});
    FAIL("expected a fan-in error");
  } catch (const FanInError &e) {
    const std::string msg = e.what();
    CHECK(msg.find("neuron") != std::string::npos);
    CHECK(msg.find("64") != std::string::npos);
  }
}

TEST_CASE("connection table bookkeeping") {
  ConnectionTable t(4);
  t.add(0, 1, SynapseClass::fast_exc, 2);
  t.add(0, 1, SynapseClass::fast_exc, 1);
  t.add(2, 1, SynapseClass::slow_inh, 4);
  t.add(3, 3, SynapseClass::fast_inh, 0);
  CHECK(t.count(0, 1, SynapseClass::fast_exc) == 3);
  CHECK(t.fan_in() == std::vector<std::size_t>{0, 7, 0, 0});
  CHECK(t.total() == 7);
  CHECK(t.entries().size() == 2);
  t.remove(0, 1, SynapseClass::fast_exc, 3);
  CHECK(t.count(0, 1, SynapseClass::fast_exc) == 0);
  CHECK(t.entries().size() == 1);
  CHECK_THROWS_AS(t.remove(2, 1, SynapseClass::slow_inh, 5), std::invalid_argument);
  CHECK_THROWS_AS(t.add(4, 0, SynapseClass::fast_exc, 1), std::invalid_argument);
  CHECK_NOTHROW(check_fan_in(t, 4));
  CHECK_THROWS_AS(check_fan_in(t, 3), FanInError);
}

TEST_CASE("connection CSV round trip and errors") {
  const auto table = build_hw_ring(HwTopology{}, GainSet{});
  std::stringstream ss;
  write_connections_csv(ss, table);
  CHECK(ss.str().rfind("pre,post,class,count\n", 0) == 0);
  CHECK(read_connections_csv(ss, 40) == table);

  std::istringstream bad_class("pre,post,class,count\n0,1,fast_exc,1\n1,2,ampa,1\n");
  try {
    read_connections_csv(bad_class, 40);
    FAIL("expected an error");
  } catch (const std::invalid_argument &e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::istringstream bad_index("pre,post,class,count\n0,99,fast_exc,1\n");
  CHECK_THROWS_AS(read_connections_csv(bad_index, 40), std::invalid_argument);
  std::istringstream bad_header("a,b,c,d\n");
  CHECK_THROWS_AS(read_connections_csv(bad_header, 40), std::invalid_argument);
}

TEST_CASE("velocity sets") {
  const HwTopology t;
  const auto base = build_hw_ring(t, GainSet{});
  const auto none = make_velocity_set(t, 1, 0);
  CHECK(none.realized.empty());
  CHECK(apply_velocity(base, none, t.fan_in_limit) == base);

  const auto v3 = make_velocity_set(t, 1, 3);
  CHECK(v3.realized.total() == 3 * t.n_neurons());
  for (auto f : v3.realized.fan_in())
    CHECK(f == 3);
  // Inhibition comes from the population ahead.
  for (const auto &c : v3.realized.entries()) {
    CHECK(t.pop_of(c.pre) == (t.pop_of(c.post) + 1) % t.n_pops);
    CHECK(c.cls == t.velocity_inh);
  }
  const auto back = make_velocity_set(t, -1, 3);
  for (const auto &c : back.realized.entries())
    CHECK((t.pop_of(c.pre) + 1) % t.n_pops == t.pop_of(c.post));

  HwTopology both = t;
  both.velocity_exc = SynapseClass::fast_exc;
  const auto vb = make_velocity_set(both, 1, 2);
  CHECK(vb.realized.total() == 4 * t.n_neurons());
  for (const auto &c : vb.realized.entries())
    if (c.cls == SynapseClass::fast_exc)
      CHECK((t.pop_of(c.pre) + 1) % t.n_pops == t.pop_of(c.post));

  CHECK_THROWS_AS(make_velocity_set(t, 0, 1), std::invalid_argument);
  const auto too_many = make_velocity_set(t, 1, 13);
  CHECK_THROWS_AS(apply_velocity(base, too_many, t.fan_in_limit), FanInError);
}

TEST_CASE("hardware run: cue, determinism, validation") {
  const HwTopology t;
  const auto base = build_hw_ring(t, GainSet{});
  auto opt = default_hw_options();
  opt.t_end = 3.0;
  opt.seed = 3;
  HwCue cue;
  cue.population = 6;
  const auto a = run_hw(t, base, {}, cue, opt);
  const auto b = run_hw(t, base, {}, cue, opt);
  CHECK(a == b);
  const auto rates = mean_rate_profile(a, 1.5, 3.0, t.n_neurons());
  std::vector<double> pop(t.n_pops, 0.0);
  for (std::size_t i = 0; i < t.n_neurons(); ++i)
    pop[t.pop_of(i)] += rates[i];
  CHECK(std::max_element(pop.begin(), pop.end()) - pop.begin() == 6);

  HwCue bad = cue;
  bad.population = 10;
  CHECK_THROWS_AS(run_hw(t, base, {}, bad, opt), std::invalid_argument);
  const std::vector<ScheduledVelocity> unordered{{2.0, make_velocity_set(t, 1, 1)},
                                                 {1.0, make_velocity_set(t, 1, 2)}};
  CHECK_THROWS_AS(run_hw(t, base, unordered, cue, opt), std::invalid_argument);
  CHECK_THROWS_AS(run_hw(t, ConnectionTable(8), {}, cue, opt), std::invalid_argument);
}

TEST_CASE("zero-count sweep shows no motion") {
  const HwTopology t;
  const auto base = build_hw_ring(t, GainSet{});
  SweepOptions so;
  so.repeats = 2;
  const auto sw = velocity_sweep(t, base, {0}, so, default_hw_options());
  REQUIRE(sw.points.size() == 1);
  CHECK_FALSE(sw.fit);
  // Noise floor: one population spacing over the fit window.
  CHECK(std::abs(sw.points[0].mean) < t.population_spacing() / (so.fit_end - so.fit_start));
  CHECK_THROWS_AS(velocity_sweep(t, base, {}, so, default_hw_options()), std::invalid_argument);
  so.repeats = 1;
  CHECK_THROWS_AS(velocity_sweep(t, base, {1}, so, default_hw_options()), std::invalid_argument);
}

TEST_CASE("schedule CSV") {
  const HwTopology t;
  std::istringstream ok("time_s,direction,n_connections\n2.0,1,3\n9.0,1,0\n");
  const auto s = read_schedule_csv(ok, t);
  REQUIRE(s.size() == 2);
  CHECK(s[0].time == 2.0);
  CHECK(s[0].vset.n_connections == 3);
  CHECK(s[1].vset.realized.empty());
  std::istringstream bad("time_s,direction,n_connections\n2.0,2,3\n");
  CHECK_THROWS_AS(read_schedule_csv(bad, t), std::invalid_argument);
  std::istringstream back("time_s,direction,n_connections\n2.0,1,3\n1.0,1,0\n");
  CHECK_THROWS_AS(read_schedule_csv(back, t), std::invalid_argument);
}

TEST_CASE("phase fits split the schedule") {
  const HwTopology t;
  const auto base = build_hw_ring(t, GainSet{});
  auto opt = default_hw_options();
  opt.t_end = 6.0;
  const HwCue cue;
  const std::vector<ScheduledVelocity> schedule{{2.0, make_velocity_set(t, 1, 4)},
                                                {4.0, make_velocity_set(t, 1, 0)}};
  const auto raster = run_hw(t, base, schedule, cue, opt);
  const auto phases = phase_fits(raster, t, schedule, cue, opt.t_end, 0.2);
  REQUIRE(phases.size() == 3);
  CHECK(phases[0].t0 == doctest::Approx(1.2));
  CHECK(phases[0].t1 == doctest::Approx(2.0));
  CHECK(phases[1].n_connections == 4);
  CHECK(phases[1].fit.slope > 0.0);
  CHECK(std::abs(phases[2].fit.slope) < t.population_spacing() / 3.0);
}
