#include "oracles.hpp"

#include "shipid/dynamics.hpp"
#include "shipid/error.hpp"
#include "shipid/random.hpp"
#include "shipid/timeseries.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace shipid;

namespace {

Standardizer random_stats(std::uint64_t seed) {
  SplitMix rng(seed);
  Standardizer s;
  for (int j = 0; j < 3; ++j) {
    s.mu_nu[j] = rng.uniform(-0.5, 0.5);
    s.sigma_nu[j] = rng.uniform(0.1, 2.0);
    s.mu_act[j] = rng.uniform(-1.0, 1.0);
    s.sigma_act[j] = rng.uniform(0.1, 3.0);
    s.mu_acc[j] = rng.uniform(-0.01, 0.01);
    s.sigma_acc[j] = rng.uniform(0.01, 0.1);
  }
  for (int j = 0; j < 2; ++j) {
    s.mu_wind[j] = rng.uniform(0.0, 3.0);
    s.sigma_wind[j] = rng.uniform(0.5, 2.0);
  }
  return s;
}

DynamicModel random_model(std::uint64_t seed, int width = 16) {
  DynamicModel m = make_model(architecture(width, 4), random_stats(seed), seed);
  SplitMix rng(seed + 100);
  auto& theta = m.net.parameters();
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("architecture") {
  CHECK(default_architecture() == std::vector<int>{8, 256, 256, 256, 256, 3});
  const Mlp<double> net(default_architecture());
  CHECK(net.parameter_count() == 8 * 256 + 256 + 3 * (256 * 256 + 256) + 256 * 3 + 3);
  CHECK(net.weight(0).rows() == 256);
  CHECK(net.weight(0).cols() == 8);
  CHECK(net.bias(4).size() == 3);
}

TEST_CASE("mlp forward") {
  SUBCASE("zero parameters give zero") {
    const Mlp<double> net(default_architecture());
    CHECK(net.forward(Eigen::VectorXd::Ones(8)).isZero(0.0));
  }
  SUBCASE("zero weights, output bias passes through") {
    Mlp<double> net(default_architecture());
    net.bias(4) << 1.0, 2.0, 3.0;
    CHECK(net.forward(Eigen::VectorXd::Random(8)) == Eigen::Vector3d(1.0, 2.0, 3.0));
  }
  SUBCASE("1x1 ladder") {
    Mlp<double> net({1, 1, 1, 1, 1, 1});
    for (int k = 0; k < 5; ++k) net.weight(k)(0, 0) = 0.5;
    const double y = net.forward(Eigen::VectorXd::Ones(1))[0];
    CHECK(std::abs(y - 0.02823) < 1e-4);
    double h = 1.0;
    for (int k = 0; k < 4; ++k) h = std::tanh(0.5 * h);
    CHECK(y == doctest::Approx(0.5 * h).epsilon(1e-15));
  }
  SUBCASE("matches the flat-layout oracle and the batch path") {
    Mlp<double> net = Mlp<double>::uniform_init({8, 7, 5, 3}, 4);
    SplitMix rng(4);
    for (Eigen::Index i = 0; i < net.parameters().size(); ++i)
      net.parameters()[i] += 0.3 * rng.normal();
    Eigen::MatrixXd in(8, 4);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = rng.uniform(-2.0, 2.0);
    const Eigen::MatrixXd batch = net.forward_batch(in);
    for (int c = 0; c < 4; ++c) {
      const Eigen::VectorXd x = in.col(c);
      const auto ref = oracle::network(net.dims(), net.parameters(), {x.data(), x.data() + 8});
      const Eigen::VectorXd y = net.forward(x);
      for (int j = 0; j < 3; ++j) {
        CHECK(y[j] == doctest::Approx(ref[j]).epsilon(1e-13));
        CHECK(batch(j, c) == doctest::Approx(ref[j]).epsilon(1e-13));
      }
    }
  }
  SUBCASE("uniform init bounds and determinism") {
    const auto a = Mlp<double>::uniform_init(default_architecture(), 9);
    const auto b = Mlp<double>::uniform_init(default_architecture(), 9);
    CHECK(a.parameters() == b.parameters());
    for (int k = 0; k < a.num_layers(); ++k) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(a.dims()[k]));
      CHECK(a.weight(k).cwiseAbs().maxCoeff() <= bound);
      CHECK(a.weight(k).cwiseAbs().maxCoeff() > 0.9 * bound);
      CHECK(a.bias(k).isZero(0.0));
    }
  }
}

TEST_CASE("fit_standardizer") {
  SUBCASE("u values {0, 2} give mean 1 and deviation 1") {
    const auto t = oracle::make_trajectory(4, 1.0, [](std::size_t i, Sample& s) {
      const double k = static_cast<double>(i);
      s.ship.u = (i % 2 == 0) ? 0.0 : 2.0;
      s.ship.vm = 0.1 * k * k;
      s.ship.r = 0.05 * k * k;
      s.actuator = {-0.1 * k, 0.2 * k, 1.0 + k};
      s.wind = {1.0 + 0.5 * k, 0.3 * k};
    });
    const Standardizer st = fit_standardizer(split_reference(t, 4), std::span(&t, 1));
    CHECK(st.mu_nu[0] == 1.0);
    CHECK(st.sigma_nu[0] == 1.0);
  }
  SUBCASE("constant channel is degenerate") {
    const auto t = oracle::make_trajectory(10, 1.0, [](std::size_t i, Sample& s) {
      const double k = static_cast<double>(i);
      s.ship = {0, 0.1 * k, 0, 0.01 * k * k, 0, 0.002 * k * k * k};
      s.actuator = {0.1 * k, -0.1 * k, 5.0};
      s.wind = {1.0 + 0.1 * k, 0.2 * k};
    });
    CHECK_THROWS_WITH_AS(fit_standardizer(split_reference(t, 5), std::span(&t, 1)),
                         doctest::Contains("degenerate channel"), DataError);
  }
  SUBCASE("moments against a direct computation, refit after standardizing") {
    const Trajectory t = oracle::wavy_trajectory(300);
    const WindowDataset ds = split_reference(t, 100);
    const Standardizer st = fit_standardizer(ds, std::span(&t, 1));
    const auto acc = numerical_acceleration(t);
    double mean_u = 0, mean_r_acc = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      mean_u += t[i].ship.u / 300.0;
      mean_r_acc += acc[i][2] / 300.0;
    }
    double var_u = 0;
    for (std::size_t i = 0; i < 300; ++i)
      var_u += (t[i].ship.u - mean_u) * (t[i].ship.u - mean_u) / 300.0;
    CHECK(st.mu_nu[0] == doctest::Approx(mean_u).epsilon(1e-12));
    CHECK(st.sigma_nu[0] == doctest::Approx(std::sqrt(var_u)).epsilon(1e-12));
    CHECK(st.mu_acc[2] == doctest::Approx(mean_r_acc).epsilon(1e-10));

    std::vector<Sample> z = t.samples();
    for (auto& s : z) {
      const Vector8d v = standardize_input(s.ship.nu(), s.actuator.vector(), s.wind.vector(), st);
      s.ship.u = v[0];
      s.ship.vm = v[1];
      s.ship.r = v[2];
      s.actuator = {v[3], v[4], v[5]};
      s.wind = {v[6] + 10.0, v[7]};
    }
    const Trajectory zt("z", z);
    const Standardizer again = fit_standardizer(split_reference(zt, 100), std::span(&zt, 1));
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(again.mu_nu[j]) < 1e-12);
      CHECK(std::abs(again.sigma_nu[j] - 1.0) < 1e-12);
      CHECK(std::abs(again.mu_act[j]) < 1e-12);
      CHECK(std::abs(again.sigma_act[j] - 1.0) < 1e-12);
    }
    CHECK(std::abs(again.mu_wind[0] - 10.0) < 1e-12);
    CHECK(std::abs(again.mu_wind[1]) < 1e-12);
    CHECK(std::abs(again.sigma_wind[1] - 1.0) < 1e-12);
  }
}

TEST_CASE("standardization maps") {
  Standardizer st = random_stats(3);
  st.mu_nu[0] = 0.5;
  st.sigma_nu[0] = 0.25;
  const Eigen::Vector3d act(0.1, -0.2, 4.0);
  const Eigen::Vector2d wind(1.5, 2.0);
  CHECK(standardize_input({1.0, 0.0, 0.0}, act, wind, st)[0] == 2.0);
  const Vector8d at_mean = standardize_input(st.mu_nu, st.mu_act, st.mu_wind, st);
  CHECK(at_mean.isZero(0.0));
  const Vector8d plus_one = standardize_input(st.mu_nu + st.sigma_nu, st.mu_act + st.sigma_act,
                                              st.mu_wind + st.sigma_wind, st);
  for (int j = 0; j < 8; ++j) CHECK(plus_one[j] == doctest::Approx(1.0).epsilon(1e-14));

  CHECK(destandardize_output(Eigen::Vector3d::Zero(), st) == st.mu_acc);
  CHECK((destandardize_output(Eigen::Vector3d::Ones(), st) - (st.mu_acc + st.sigma_acc)).norm() <
        1e-15);
  const Eigen::Vector3d y(0.3, -1.7, 2.2);
  CHECK((standardize_output(destandardize_output(y, st), st) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("kinematics") {
  const Eigen::Vector3d nu(0.7, -0.2, 0.05);
  CHECK(kinematics(0.0, nu) == nu);
  const Eigen::Vector3d q = kinematics(std::numbers::pi / 2, Eigen::Vector3d(1, 0, 0));
  CHECK(std::abs(q[0]) < 1e-15);
  CHECK(q[1] == doctest::Approx(1.0));
  const Eigen::Vector3d e = kinematics(std::numbers::pi / 4, Eigen::Vector3d(1, 1, 0.2));
  CHECK(std::abs(e[0]) < 1e-15);
  CHECK(e[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(e[2] == 0.2);
}

TEST_CASE("full_derivative") {
  const ActuatorState act{0.1, -0.3, 7.0};
  const WindState wind{2.0, 1.0};

  SUBCASE("zero network with zero mean acceleration moves only by kinematics") {
    Standardizer st = random_stats(5);
    st.mu_acc.setZero();
    const DynamicModel m{Mlp<double>(default_architecture()), st};
    const ShipState x{3, 0.6, -2, 0.1, 0.8, 0.02};
    const Vector6d f = full_derivative(x, act, wind, m);
    const Eigen::Vector3d eta = kinematics(x.psi, x.nu());
    CHECK(f[channel::u] == 0.0);
    CHECK(f[channel::vm] == 0.0);
    CHECK(f[channel::r] == 0.0);
    CHECK(f[channel::x0] == eta[0]);
    CHECK(f[channel::y0] == eta[1]);
    CHECK(f[channel::psi] == eta[2]);
  }
  SUBCASE("matches the oracle, heading rate is r, position does not matter") {
    const DynamicModel m = random_model(6);
    SplitMix rng(6);
    for (int trial = 0; trial < 20; ++trial) {
      ShipState x{rng.uniform(-50, 50),   rng.uniform(-1, 1), rng.uniform(-50, 50),
                  rng.uniform(-0.3, 0.3), rng.uniform(-7, 7), rng.uniform(-0.4, 0.4)};
      const Vector6d f = full_derivative(x, act, wind, m);
      Sample ctl;
      ctl.actuator = act;
      ctl.wind = wind;
      const Vector6d ref =
          oracle::model_rhs(m.net.dims(), m.net.parameters(), m.stats, ctl, x.vector());
      CHECK((f - ref).cwiseAbs().maxCoeff() < 1e-13);
      CHECK(f[channel::psi] == x.r);

      ShipState moved = x;
      moved.x0 += 10.0;
      moved.y0 -= 7.0;
      CHECK(full_derivative(moved, act, wind, m) == f);

      ShipState turned = x;
      turned.psi += 1.3;
      const Vector6d g = full_derivative(turned, act, wind, m);
      CHECK(g[channel::u] == f[channel::u]);
      CHECK(g[channel::vm] == f[channel::vm]);
      CHECK(g[channel::r] == f[channel::r]);
    }
  }
  SUBCASE("hidden activations stay bounded") {
    const DynamicModel m = random_model(7);
    const Vector8d s = Vector8d::Constant(1e6);
    Eigen::VectorXd h = s;
    for (int k = 0; k + 1 < m.net.num_layers(); ++k) {
      h = (m.net.weight(k) * h + m.net.bias(k)).array().tanh();
      CHECK(h.cwiseAbs().maxCoeff() <= 1.0);
    }
    CHECK(m.net.forward(s).allFinite());
  }
}

TEST_CASE("checkpoint reload is bit-exact") {
  const DynamicModel m = random_model(8, 32);
  const auto path = std::filesystem::temp_directory_path() / "shipid_test_checkpoint.json";
  save_checkpoint(m, path);
  const DynamicModel back = load_checkpoint(path);
  CHECK(back.net.dims() == m.net.dims());
  CHECK(back.net.parameters() == m.net.parameters());
  CHECK(back.stats.mu_acc == m.stats.mu_acc);
  CHECK(back.stats.sigma_wind == m.stats.sigma_wind);
  const ShipState x{0, 0.4, 0, -0.05, 0.3, 0.01};
  const ActuatorState act{0.2, 0.1, 9.0};
  const WindState wind{3.0, 4.0};
  CHECK(full_derivative(x, act, wind, back) == full_derivative(x, act, wind, m));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), DataError);
}

TEST_CASE("model validation") {
  DynamicModel m = random_model(9);
  CHECK_NOTHROW(m.validate());
  m.stats.sigma_acc[1] = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  DynamicModel wrong{Mlp<double>({7, 4, 3}), Standardizer{}};
  CHECK_THROWS_AS(wrong.validate(), ConfigError);
}
