#include "shipid/augmentation.hpp"

#include "shipid/error.hpp"
#include "shipid/random.hpp"
#include "shipid/timeseries.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace shipid {

namespace {

double to_unit_open(std::uint64_t bits) {
  // (0, 1): never exactly zero so the logarithm below stays finite.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

void check_window_length(std::size_t window_length) {
  if (window_length < 2) throw ConfigError("window length must be at least 2");
}

Window copy_window(const Trajectory& traj, std::size_t start, std::size_t length) {
  Window w;
  w.source_id = traj.id();
  w.start_index = start;
  w.samples.assign(traj.samples().begin() + static_cast<std::ptrdiff_t>(start),
                   traj.samples().begin() + static_cast<std::ptrdiff_t>(start + length));
  return w;
}

}  // namespace

std::string_view to_string(AugmentationMethod method) {
  switch (method) {
    case AugmentationMethod::reference:
      return "reference";
    case AugmentationMethod::slicing:
      return "slicing";
    case AugmentationMethod::jittering:
      return "jittering";
    case AugmentationMethod::slicing_jittering:
      return "slicing_jittering";
  }
  return "unknown";
}

AugmentationMethod parse_augmentation_method(std::string_view name) {
  for (auto m : {AugmentationMethod::reference, AugmentationMethod::slicing,
                 AugmentationMethod::jittering, AugmentationMethod::slicing_jittering}) {
    if (to_string(m) == name) return m;
  }
  throw DataError("unknown augmentation method '" + std::string(name) + "'");
}

NoiseSpec NoiseSpec::from_variance(const Vector6d& variance, std::uint64_t seed) {
  if ((variance.array() < 0.0).any()) throw ConfigError("noise variance must be non-negative");
  return {variance.cwiseSqrt(), seed};
}

std::size_t reference_window_count(std::size_t n, std::size_t window_length) {
  return n / window_length;
}

std::size_t slice_window_count(std::size_t n, std::size_t window_length, std::size_t stride) {
  if (n < window_length) return 0;
  return (n - window_length) / stride + 1;
}

WindowDataset split_reference(const Trajectory& traj, std::size_t window_length) {
  return split_reference(std::span<const Trajectory>(&traj, 1), window_length);
}

WindowDataset split_reference(std::span<const Trajectory> trajs, std::size_t window_length) {
  check_window_length(window_length);
  WindowDataset ds;
  ds.method = AugmentationMethod::reference;
  ds.params.window_length = window_length;
  for (const Trajectory& traj : trajs) {
    const std::size_t k_n = reference_window_count(traj.size(), window_length);
    if (k_n == 0) {
      throw DataError("trajectory shorter than window: '" + traj.id() + "' has " +
                      std::to_string(traj.size()) + " samples, window is " +
                      std::to_string(window_length));
    }
    for (std::size_t k = 0; k < k_n; ++k) {
      ds.windows.push_back(copy_window(traj, k * window_length, window_length));
    }
  }
  return ds;
}

WindowDataset slice(const Trajectory& traj, std::size_t window_length, std::size_t stride) {
  return slice(std::span<const Trajectory>(&traj, 1), window_length, stride);
}

WindowDataset slice(std::span<const Trajectory> trajs, std::size_t window_length,
                    std::size_t stride) {
  check_window_length(window_length);
  if (stride < 1) throw ConfigError("slice stride must be at least 1");
  WindowDataset ds;
  ds.method = AugmentationMethod::slicing;
  ds.params.window_length = window_length;
  ds.params.stride = stride;
  for (const Trajectory& traj : trajs) {
    if (traj.size() < window_length) {
      throw DataError("trajectory shorter than window: '" + traj.id() + "'");
    }
    for (std::size_t phi = 0; phi + window_length <= traj.size(); phi += stride) {
      ds.windows.push_back(copy_window(traj, phi, window_length));
    }
  }
  return ds;
}

std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double keyed_normal(std::uint64_t seed, std::uint64_t source_key, std::uint64_t replicate,
                    std::uint64_t time_index, std::uint64_t channel) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ source_key);
  h = splitmix64(h ^ replicate);
  h = splitmix64(h ^ time_index);
  h = splitmix64(h ^ channel);
  const double u1 = to_unit_open(h);
  const double u2 = to_unit_open(splitmix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

WindowDataset jitter(const WindowDataset& base, const NoiseSpec& noise, int replicates) {
  if (replicates < 1) throw ConfigError("jitter needs at least one replicate");
  if ((noise.sigma.array() < 0.0).any() || !noise.sigma.allFinite()) {
    throw ConfigError("noise sigma must be finite and non-negative");
  }
  WindowDataset ds;
  ds.method = base.method == AugmentationMethod::slicing ? AugmentationMethod::slicing_jittering
                                                         : AugmentationMethod::jittering;
  ds.params = base.params;
  ds.params.replicates = replicates;
  ds.params.noise = noise;
  ds.windows.reserve(base.size() * static_cast<std::size_t>(replicates));
  for (const Window& w : base.windows) {
    const std::uint64_t key = stable_hash(w.source_id);
    for (int m = 1; m <= replicates; ++m) {
      Window out = w;
      out.replicate = m;
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        Vector6d x = out.samples[i].ship.vector();
        for (int c = 0; c < 6; ++c) {
          if (noise.sigma[c] == 0.0) continue;
          x[c] += noise.sigma[c] * keyed_normal(noise.seed, key, static_cast<std::uint64_t>(m),
                                                w.start_index + i, static_cast<std::uint64_t>(c));
        }
        out.samples[i].ship = ShipState::from_vector(x);
      }
      ds.windows.push_back(std::move(out));
    }
  }
  return ds;
}

WindowDataset slice_jitter(const Trajectory& traj, std::size_t window_length, std::size_t stride,
                           const NoiseSpec& noise, int replicates) {
  return jitter(slice(traj, window_length, stride), noise, replicates);
}

WindowDataset slice_jitter(std::span<const Trajectory> trajs, std::size_t window_length,
                           std::size_t stride, const NoiseSpec& noise, int replicates) {
  return jitter(slice(trajs, window_length, stride), noise, replicates);
}

void save_dataset(const WindowDataset& ds, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["format_version"] = 1;
  manifest["method"] = std::string(to_string(ds.method));
  manifest["window_length"] = ds.params.window_length;
  manifest["stride"] = ds.params.stride;
  manifest["replicates"] = ds.params.replicates;
  manifest["noise_sigma"] =
      std::vector<double>(ds.params.noise.sigma.data(), ds.params.noise.sigma.data() + 6);
  manifest["noise_seed"] = ds.params.noise.seed;
  auto& entries = manifest["windows"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const Window& w = ds.windows[k];
    char name[64];
    std::snprintf(name, sizeof name, "window_%06zu.csv", k);
    save_trajectory(Trajectory(w.source_id, w.samples), dir / name);
    entries.push_back({{"file", name},
                       {"source_id", w.source_id},
                       {"start_index", w.start_index},
                       {"replicate", w.replicate}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

WindowDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
    WindowDataset ds;
    ds.method = parse_augmentation_method(manifest.at("method").get<std::string>());
    ds.params.window_length = manifest.at("window_length").get<std::size_t>();
    ds.params.stride = manifest.at("stride").get<std::size_t>();
    ds.params.replicates = manifest.at("replicates").get<int>();
    const auto sigma = manifest.at("noise_sigma").get<std::vector<double>>();
    if (sigma.size() != 6) throw DataError("noise_sigma must have 6 entries");
    ds.params.noise.sigma = Eigen::Map<const Vector6d>(sigma.data());
    ds.params.noise.seed = manifest.at("noise_seed").get<std::uint64_t>();
    for (const auto& e : manifest.at("windows")) {
      Window w;
      w.source_id = e.at("source_id").get<std::string>();
      w.start_index = e.at("start_index").get<std::size_t>();
      w.replicate = e.at("replicate").get<int>();
      w.samples = load_trajectory(dir / e.at("file").get<std::string>()).samples();
      if (w.length() != ds.params.window_length) {
        throw DataError("window length mismatch in " + e.at("file").get<std::string>());
      }
      ds.windows.push_back(std::move(w));
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid dataset manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace shipid
