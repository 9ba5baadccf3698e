#pragma once

#include "shipid/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shipid {

// Fixed-length training segment copied out of a source trajectory.
struct Window {
  std::string source_id;
  std::size_t start_index = 0;  // offset into the source trajectory
  int replicate = 0;            // jitter replicate, 1..M; 0 when not jittered
  std::vector<Sample> samples;

  std::size_t length() const { return samples.size(); }
};

enum class AugmentationMethod { reference, slicing, jittering, slicing_jittering };

std::string_view to_string(AugmentationMethod method);
AugmentationMethod parse_augmentation_method(std::string_view name);

// Diagonal Gaussian noise on ship states, as standard deviations in
// ShipState order.
struct NoiseSpec {
  Vector6d sigma = Vector6d::Zero();
  std::uint64_t seed = 0;

  static NoiseSpec from_variance(const Vector6d& variance, std::uint64_t seed);
};

struct AugmentationParams {
  std::size_t window_length = 0;  // I
  std::size_t stride = 0;         // S, slicing only
  int replicates = 0;             // M, jittering only
  NoiseSpec noise;                // jittering only
};

struct WindowDataset {
  std::vector<Window> windows;
  AugmentationMethod method = AugmentationMethod::reference;
  AugmentationParams params;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  std::size_t window_length() const { return params.window_length; }
};

// Closed-form window counts for one trajectory of n samples.
std::size_t reference_window_count(std::size_t n, std::size_t window_length);
std::size_t slice_window_count(std::size_t n, std::size_t window_length, std::size_t stride);

// Non-overlapping windows at offsets 0, I, 2I, ...; the remainder is dropped.
WindowDataset split_reference(const Trajectory& traj, std::size_t window_length);
WindowDataset split_reference(std::span<const Trajectory> trajs, std::size_t window_length);

// Overlapping windows at offsets 0, S, 2S, ... not exceeding n - I.
WindowDataset slice(const Trajectory& traj, std::size_t window_length, std::size_t stride);
WindowDataset slice(std::span<const Trajectory> trajs, std::size_t window_length,
                    std::size_t stride);

// M noisy replicates of every base window. Only ship states are perturbed.
// The draw for a sample depends on (seed, source id, replicate, absolute time
// index in the source, channel) so overlapping slices share noise at a common
// time step within a replicate.
WindowDataset jitter(const WindowDataset& base, const NoiseSpec& noise, int replicates);

WindowDataset slice_jitter(const Trajectory& traj, std::size_t window_length, std::size_t stride,
                           const NoiseSpec& noise, int replicates);
WindowDataset slice_jitter(std::span<const Trajectory> trajs, std::size_t window_length,
                           std::size_t stride, const NoiseSpec& noise, int replicates);

// Standard normal draw that is a pure function of its key.
double keyed_normal(std::uint64_t seed, std::uint64_t source_key, std::uint64_t replicate,
                    std::uint64_t time_index, std::uint64_t channel);

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view text);

// Directory layout: manifest.json plus window_<k>.csv in dataset order.
void save_dataset(const WindowDataset& ds, const std::filesystem::path& dir);
WindowDataset load_dataset(const std::filesystem::path& dir);

}  // namespace shipid
