#include <doctest.h>

#include "ringsim/angles.hpp"
#include "ringsim/decoder.hpp"
#include "ringsim/discrete_hw.hpp"
#include "ringsim/engine.hpp"
#include "ringsim/ring.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

using namespace ringsim;

namespace {

std::mt19937_64 &rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

std::size_t uniform_int(std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng());
}

} // namespace

TEST_SUITE("engine equivariance") {
  TEST_CASE("rotating the cue by one neuron rotates the raster") {
    for (std::size_t n : {40, 60, 120}) {
      auto cfg = make_config(n);
      const std::size_t k0 = uniform_int(0, n - 1);
      cfg.init_angle = cfg.geometry.preferred_angles[k0];
      const auto a = run(cfg, VelocityProfile{}, 0.4).raster;
      cfg.init_angle = cfg.geometry.preferred_angles[(k0 + 1) % n];
      const auto b = run(cfg, VelocityProfile{}, 0.4).raster;
      REQUIRE(a.events.size() == b.events.size());
      // Events within one step are listed by neuron index, so compare the
      // set of spiking neurons per timestamp.
      std::map<double, std::set<std::size_t>> ta, tb;
      for (const auto &e : a.events)
        ta[e.time].insert((e.neuron + 1) % n);
      for (const auto &e : b.events)
        tb[e.time].insert(e.neuron);
      CHECK(ta == tb);
    }
  }

  TEST_CASE("negating the velocity mirrors the decoded trajectory") {
    auto cfg = make_config(120, GainSet{-16.46, 15.86, 0.2513});
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t k0 = uniform_int(0, 119);
      cfg.init_angle = cfg.geometry.preferred_angles[k0];
      std::vector<VelocitySample> up{{0.0, 0.0}}, down{{0.0, 0.0}};
      double t = 0.1;
      for (int s = 0; s < 4; ++s) {
        const double v = uniform(-1.0, 1.0);
        up.push_back({t, v});
        down.push_back({t, -v});
        t += uniform(0.2, 0.5);
      }
      const auto ra = run(cfg, VelocityProfile(up), t).raster;
      const auto rb = run(cfg, VelocityProfile(down), t).raster;
      const auto da = decode_trace(ra, cfg.geometry, kPvaStep, kPvaWindow);
      const auto db = decode_trace(rb, cfg.geometry, kPvaStep, kPvaWindow);
      REQUIRE(da.samples.size() == db.samples.size());
      for (std::size_t s = 0; s < da.samples.size(); ++s) {
        REQUIRE(da.samples[s].valid == db.samples[s].valid);
        if (!da.samples[s].valid)
          continue;
        const double ea = wrap_diff(da.samples[s].angle, cfg.init_angle);
        const double eb = wrap_diff(db.samples[s].angle, cfg.init_angle);
        CHECK(std::abs(to_degrees(wrap_diff(ea, -eb))) < 1.0);
      }
    }
  }
}

TEST_SUITE("ring properties") {
  TEST_CASE("kernel antisymmetry and weight symmetry for random sizes") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = build_geometry(uniform_int(4, 200));
      GainSet gains{uniform(-30.0, -0.1), uniform(0.1, 30.0), uniform(0.01, 1.0)};
      const auto k = asymmetric_kernel(g);
      const auto w = symmetric_weights(g, gains);
      for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(k(i, i) == 0.0);
        for (std::size_t j = 0; j < g.n; ++j) {
          REQUIRE(k(i, j) == -k(j, i));
          REQUIRE(w(i, j) == w(j, i));
          REQUIRE(w(i, j) == w(0, (j + g.n - i) % g.n));
        }
      }
    }
  }

  TEST_CASE("asymmetric weights are linear in v") {
    for (int trial = 0; trial < 20; ++trial) {
      const auto g = build_geometry(uniform_int(4, 120));
      const GainSet gains{-16.46, 15.86, uniform(0.01, 1.0)};
      const auto ws = build_weights(g, gains);
      const double v = uniform(-2.0, 2.0);
      const double alpha = uniform(-3.0, 3.0);
      const auto a = effective_asym_weights(ws, gains, alpha * v);
      const auto b = effective_asym_weights(ws, gains, v);
      for (std::size_t e = 0; e < a.data().size(); ++e)
        REQUIRE(a.data()[e] == doctest::Approx(alpha * b.data()[e]).epsilon(1e-12).scale(1e-12));
    }
  }

  TEST_CASE("attenuation has a unit plateau whenever the ramp is short") {
    for (int trial = 0; trial < 50; ++trial) {
      const double t0 = uniform(0.0, 3.0);
      const double tl = uniform(t0 + 0.5, kTwoPi - 0.3);
      const double max_ramp = std::min((kTwoPi - (tl - t0)) / 2.0, (tl - t0) / 2.0);
      const auto bc = make_boundary(t0, tl, uniform(0.01, 0.99) * max_ramp);
      const double mid = 0.5 * (t0 + tl);
      CHECK(attenuation_plus(bc, mid) == 1.0);
      CHECK(attenuation_minus(bc, mid) == 1.0);
      CHECK(attenuation_plus(bc, tl) == 0.0);
      CHECK(attenuation_minus(bc, t0) == 0.0);
      const double th = uniform(0.0, kTwoPi);
      CHECK(attenuation_plus(bc, th) >= 0.0);
      CHECK(attenuation_plus(bc, th) <= 1.0);
    }
  }
}

TEST_SUITE("decoder properties") {
  TEST_CASE("pva ignores a uniform scaling of spike counts") {
    const auto g = build_geometry(36);
    for (int trial = 0; trial < 50; ++trial) {
      SpikeRaster one, scaled;
      one.n = scaled.n = g.n;
      const std::size_t k = uniform_int(2, 6);
      for (std::size_t i = 0; i < g.n; ++i) {
        const std::size_t c = uniform_int(0, 3);
        for (std::size_t r = 0; r < c; ++r)
          one.events.push_back({0.5, i});
        for (std::size_t r = 0; r < c * k; ++r)
          scaled.events.push_back({0.5, i});
      }
      const auto a = decode_pva(one, g, 1.0, 1.0);
      const auto b = decode_pva(scaled, g, 1.0, 1.0);
      REQUIRE(a.valid == b.valid);
      if (a.valid)
        CHECK(std::abs(wrap_diff(a.angle, b.angle)) < 1e-9);
    }
  }

  TEST_CASE("unwrap inverts wrap for steps below pi") {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> truth{uniform(0.0, kTwoPi)};
      for (int s = 0; s < 200; ++s)
        truth.push_back(truth.back() + uniform(-3.0, 3.0));
      DecodedTrace tr;
      for (std::size_t s = 0; s < truth.size(); ++s)
        tr.samples.push_back({0.01 * static_cast<double>(s + 1), wrap_angle(truth[s]), true});
      const auto u = unwrap(tr);
      REQUIRE(u.size() == truth.size());
      for (std::size_t s = 0; s < truth.size(); ++s)
        REQUIRE(u[s].angle == doctest::Approx(truth[s]).epsilon(1e-9));
    }
  }

  TEST_CASE("velocity fit ignores a 2 pi shift of the start") {
    for (int trial = 0; trial < 20; ++trial) {
      DecodedTrace a, b;
      double th = uniform(0.0, kTwoPi);
      const double v = uniform(-5.0, 5.0);
      for (int s = 0; s < 100; ++s) {
        const double t = 0.01 * (s + 1);
        const double x = th + v * t + uniform(-0.05, 0.05);
        a.samples.push_back({t, wrap_angle(x), true});
        b.samples.push_back({t, wrap_angle(x + kTwoPi * static_cast<double>(uniform_int(1, 3))), true});
      }
      const auto fa = fit_bump_velocity(unwrap(a), 0.0, 1.0);
      const auto fb = fit_bump_velocity(unwrap(b), 0.0, 1.0);
      CHECK(fa.slope == doctest::Approx(fb.slope));
    }
  }

  TEST_CASE("drift and tracking error are rotation invariant") {
    for (int trial = 0; trial < 20; ++trial) {
      const double rot = uniform(-10.0, 10.0);
      DecodedTrace a, b;
      std::vector<TimedAngle> ta, tb;
      for (int s = 0; s <= 300; ++s) {
        const double t = 0.01 * s;
        const double truth = std::sin(t);
        ta.push_back({t, truth});
        tb.push_back({t, truth + rot});
        if (s == 0)
          continue;
        const double est = truth + uniform(-0.3, 0.3);
        a.samples.push_back({t, wrap_angle(est), true});
        b.samples.push_back({t, wrap_angle(est + rot), true});
      }
      const auto ea = tracking_error(a, ta);
      const auto eb = tracking_error(b, tb);
      CHECK(ea.mean_deg == doctest::Approx(eb.mean_deg));
      CHECK(ea.std_deg == doctest::Approx(eb.std_deg));
      const auto da = drift_windows(a, 0.2, 0.5, 0.0, 3.0);
      const auto db = drift_windows(b, 0.2 + rot, 0.5, 0.0, 3.0);
      for (std::size_t w = 0; w < da.size(); ++w)
        CHECK(*da[w] == doctest::Approx(*db[w]));
    }
  }
}

TEST_SUITE("discrete_hw properties") {
  TEST_CASE("quantization residual is at most half a unit") {
    for (int trial = 0; trial < 200; ++trial) {
      const double u = uniform(0.1, 20.0);
      std::vector<double> row(uniform_int(1, 20));
      for (auto &w : row)
        w = uniform(-10.0 * u, 10.0 * u);
      const auto q = quantize_profile(row, u);
      for (std::size_t k = 0; k < row.size(); ++k) {
        REQUIRE(std::abs(q.residual[k]) <= u / 2.0 + 1e-12);
        REQUIRE((q.excitatory[k] == 0 || q.inhibitory[k] == 0));
      }
    }
  }

  TEST_CASE("apply then remove restores the table") {
    for (int trial = 0; trial < 30; ++trial) {
      HwTopology t;
      t.n_pops = uniform_int(3, 12);
      t.pop_size = uniform_int(1, 5);
      t.unit_weight = 12.0;
      if (uniform_int(0, 1))
        t.velocity_exc = SynapseClass::slow_exc;
      ConnectionTable base(t.n_neurons());
      for (int e = 0; e < 50; ++e)
        base.add(uniform_int(0, t.n_neurons() - 1), uniform_int(0, t.n_neurons() - 1),
                 static_cast<SynapseClass>(uniform_int(0, 3)),
                 static_cast<std::uint32_t>(uniform_int(1, 3)));
      const auto vset = make_velocity_set(t, uniform_int(0, 1) ? 1 : -1, uniform_int(0, 5));
      const auto on = apply_velocity(base, vset, 10000);
      CHECK(on.total() == base.total() + vset.realized.total());
      CHECK(remove_velocity(on, vset) == base);
    }
  }

  TEST_CASE("hardware ring is circulant at population level") {
    for (int trial = 0; trial < 10; ++trial) {
      HwTopology t;
      t.n_pops = uniform_int(3, 16);
      t.pop_size = uniform_int(1, 4);
      t.fan_in_limit = 100000;
      t.unit_weight = uniform(2.0, 12.0);
      const auto table = build_hw_ring(t, GainSet{});
      const std::size_t P = t.n_pops, S = t.pop_size;
      for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = 0; b < P; ++b)
          for (auto cls : {t.ring_exc, t.ring_inh})
            REQUIRE(table.count(a * S, b * S + S - 1, cls) ==
                    table.count(0, ((b + P - a) % P) * S, cls));
    }
  }

  TEST_CASE("opposite velocity sets mirror each other") {
    for (int trial = 0; trial < 10; ++trial) {
      HwTopology t;
      t.n_pops = uniform_int(3, 12);
      t.pop_size = uniform_int(1, 4);
      if (uniform_int(0, 1))
        t.velocity_exc = SynapseClass::fast_exc;
      const std::size_t k = uniform_int(0, 6);
      const auto fwd = make_velocity_set(t, 1, k);
      const auto bwd = make_velocity_set(t, -1, k);
      const std::size_t P = t.n_pops, S = t.pop_size;
      auto mirror = [&](std::size_t i) { return ((P - t.pop_of(i)) % P) * S + i % S; };
      ConnectionTable reflected(t.n_neurons());
      for (const auto &c : fwd.realized.entries())
        reflected.add(mirror(c.pre), mirror(c.post), c.cls, c.count);
      CHECK(reflected == bwd.realized);
    }
  }
}
