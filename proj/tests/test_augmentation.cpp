#include "oracles.hpp"

#include "shipid/augmentation.hpp"
#include "shipid/error.hpp"

#include <doctest.h>

#include <filesystem>
#include <vector>

using namespace shipid;

namespace {

std::vector<std::size_t> offsets(const WindowDataset& ds) {
  std::vector<std::size_t> out;
  for (const auto& w : ds.windows) out.push_back(w.start_index);
  return out;
}

const Vector6d kTableSigma = (Vector6d() << 0.0, 0.01, 0.0, 0.01, 0.0, 0.1).finished();

}  // namespace

TEST_CASE("split_reference") {
  SUBCASE("500 samples, I = 100") {
    const auto ds = split_reference(oracle::wavy_trajectory(500), 100);
    CHECK(offsets(ds) == std::vector<std::size_t>{0, 100, 200, 300, 400});
    CHECK(ds.method == AugmentationMethod::reference);
    for (const auto& w : ds.windows) CHECK(w.length() == 100);
  }
  SUBCASE("remainder discarded") {
    const auto ds = split_reference(oracle::wavy_trajectory(250), 100);
    CHECK(offsets(ds) == std::vector<std::size_t>{0, 100});
    CHECK(ds.windows.back().samples.back().t == 199.0);
  }
  SUBCASE("shorter than window") {
    CHECK_THROWS_WITH_AS(split_reference(oracle::wavy_trajectory(99), 100),
                         doctest::Contains("trajectory shorter than window"), DataError);
  }
}

TEST_CASE("slice offsets match enumeration") {
  const Trajectory t = oracle::wavy_trajectory(500);
  CHECK(offsets(slice(t, 100, 50)) == oracle::slice_offsets(500, 100, 50));
  CHECK(slice(t, 100, 50).size() == 9);
  CHECK(slice(t, 100, 10).size() == 41);
  CHECK(offsets(slice(t, 100, 100)) == offsets(split_reference(t, 100)));
  CHECK_THROWS_AS(slice(oracle::wavy_trajectory(50), 100, 10), DataError);
}

TEST_CASE("slice windows are verbatim copies") {
  const Trajectory t = oracle::wavy_trajectory(137);
  for (const auto& w : slice(t, 20, 7).windows) {
    REQUIRE(w.start_index + w.length() <= t.size());
    for (std::size_t i = 0; i < w.length(); ++i) CHECK(w.samples[i] == t[w.start_index + i]);
    CHECK(w.replicate == 0);
  }
}

TEST_CASE("closed-form counts equal brute-force enumeration") {
  std::size_t mismatches = 0;
  for (std::size_t n = 2; n <= 50; ++n) {
    const Trajectory t = oracle::wavy_trajectory(n);
    const std::vector<Trajectory> two{t, oracle::wavy_trajectory(n + 3, "second")};
    for (std::size_t len = 2; len <= 10; ++len) {
      const auto ref = oracle::reference_offsets(n, len);
      if (reference_window_count(n, len) != ref.size()) ++mismatches;
      if (!ref.empty() && offsets(split_reference(t, len)) != ref) ++mismatches;
      for (std::size_t s = 1; s <= 10; ++s) {
        const auto sl = oracle::slice_offsets(n, len, s);
        if (slice_window_count(n, len, s) != sl.size()) ++mismatches;
        if (len <= n &&
            slice(two, len, s).size() != sl.size() + oracle::slice_offsets(n + 3, len, s).size()) {
          ++mismatches;
        }
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("jitter") {
  const Trajectory t = oracle::wavy_trajectory(500);
  const WindowDataset base = split_reference(t, 100);

  SUBCASE("zero sigma copies ship states") {
    const WindowDataset j = jitter(base, NoiseSpec{Vector6d::Zero(), 1}, 3);
    REQUIRE(j.size() == 15);
    for (std::size_t k = 0; k < j.size(); ++k) {
      const Window& b = base.windows[k / 3];
      CHECK(j.windows[k].replicate == static_cast<int>(k % 3) + 1);
      CHECK(j.windows[k].samples == b.samples);
    }
  }
  SUBCASE("count multiplies") { CHECK(jitter(base, NoiseSpec{kTableSigma, 3}, 2).size() == 10); }
  SUBCASE("only noisy channels change; controls and time are untouched") {
    const WindowDataset j = jitter(base, NoiseSpec{kTableSigma, 5}, 2);
    for (std::size_t k = 0; k < j.size(); ++k) {
      const Window& b = base.windows[k / 2];
      for (std::size_t i = 0; i < b.length(); ++i) {
        const Sample& s = j.windows[k].samples[i];
        CHECK(s.t == b.samples[i].t);
        CHECK(s.actuator == b.samples[i].actuator);
        CHECK(s.wind == b.samples[i].wind);
        CHECK(s.ship.x0 == b.samples[i].ship.x0);
        CHECK(s.ship.y0 == b.samples[i].ship.y0);
        CHECK(s.ship.psi == b.samples[i].ship.psi);
      }
    }
  }
  SUBCASE("u-channel noise variance is within 10% of 1e-4") {
    const Trajectory longer = oracle::wavy_trajectory(1000);
    const WindowDataset j = jitter(split_reference(longer, 100), NoiseSpec{kTableSigma, 11}, 10);
    double sum = 0.0, sq = 0.0;
    std::size_t count = 0;
    for (const auto& w : j.windows) {
      for (std::size_t i = 0; i < w.length(); ++i) {
        const double e = w.samples[i].ship.u - longer[w.start_index + i].ship.u;
        sum += e;
        sq += e * e;
        ++count;
      }
    }
    REQUIRE(count == 10000);
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(var == doctest::Approx(1e-4).epsilon(0.1));
  }
  SUBCASE("same seed is bit-identical, another seed differs") {
    const WindowDataset a = jitter(base, NoiseSpec{kTableSigma, 9}, 2);
    const WindowDataset b = jitter(base, NoiseSpec{kTableSigma, 9}, 2);
    const WindowDataset c = jitter(base, NoiseSpec{kTableSigma, 10}, 2);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.windows[k].samples == b.windows[k].samples);
    CHECK(a.windows[0].samples[5].ship.u != c.windows[0].samples[5].ship.u);
  }
  SUBCASE("draws depend only on provenance, not on iteration order") {
    const WindowDataset all = jitter(base, NoiseSpec{kTableSigma, 4}, 2);
    WindowDataset last;
    last.windows = {base.windows.back()};
    last.params = base.params;
    const WindowDataset one = jitter(last, NoiseSpec{kTableSigma, 4}, 2);
    CHECK(one.windows[1].samples == all.windows[all.size() - 1].samples);
  }
  SUBCASE("negative sigma is rejected") {
    Vector6d bad = kTableSigma;
    bad[1] = -0.01;
    CHECK_THROWS_AS(jitter(base, NoiseSpec{bad, 1}, 2), ConfigError);
    CHECK_THROWS_AS(NoiseSpec::from_variance(-kTableSigma, 1), ConfigError);
  }
}

TEST_CASE("slice_jitter") {
  const Trajectory t = oracle::wavy_trajectory(500);
  const NoiseSpec noise{kTableSigma, 2};
  SUBCASE("counts") {
    CHECK(slice_jitter(t, 100, 10, noise, 10).size() == 410);
    CHECK(slice_jitter(t, 100, 50, noise, 2).size() == 18);
  }
  SUBCASE("equals jitter of slice with its own tag") {
    const WindowDataset a = slice_jitter(t, 100, 50, noise, 2);
    const WindowDataset b = jitter(slice(t, 100, 50), noise, 2);
    CHECK(a.method == AugmentationMethod::slicing_jittering);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a.windows[k].samples == b.windows[k].samples);
  }
  SUBCASE("zero sigma repeats the slices") {
    const WindowDataset a = slice_jitter(t, 100, 50, NoiseSpec{Vector6d::Zero(), 2}, 3);
    const WindowDataset s = slice(t, 100, 50);
    for (std::size_t k = 0; k < a.size(); ++k)
      CHECK(a.windows[k].samples == s.windows[k / 3].samples);
  }
}

TEST_CASE("dataset directory round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "shipid_test_dataset";
  std::filesystem::remove_all(dir);
  const WindowDataset ds =
      slice_jitter(oracle::wavy_trajectory(60), 20, 15, NoiseSpec{kTableSigma, 3}, 2);
  save_dataset(ds, dir);
  const WindowDataset back = load_dataset(dir);
  CHECK(back.method == ds.method);
  CHECK(back.params.window_length == 20);
  CHECK(back.params.stride == 15);
  CHECK(back.params.replicates == 2);
  REQUIRE(back.size() == ds.size());
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const Window& a = ds.windows[k];
    const Window& b = back.windows[k];
    CHECK(a.source_id == b.source_id);
    CHECK(a.start_index == b.start_index);
    CHECK(a.replicate == b.replicate);
    for (std::size_t i = 0; i < a.length(); ++i) {
      CHECK((a.samples[i].ship.vector() - b.samples[i].ship.vector()).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
  std::filesystem::remove_all(dir);
}
