#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "choreokit/pose.hpp"

namespace choreokit {

// The retrieval store: fixed-length pose fragments, optionally with their
// precomputed embeddings. Immutable after construction by convention.
struct FragmentDatabase {
  std::vector<PoseFragment> fragments;
  int fps = kDefaultFps;
  Resolution resolution{};
  int duration_s = 4;
  // Byte offset of each record in the file it was last saved to or loaded
  // from, keyed by fragment id. Empty for a database that never touched disk.
  std::map<std::string, std::uint64_t> index;

  std::size_t size() const { return fragments.size(); }
  bool empty() const { return fragments.empty(); }
  std::size_t frames_per_fragment() const {
    return static_cast<std::size_t>(duration_s) * static_cast<std::size_t>(fps);
  }
  bool has_embeddings() const;
  std::size_t embedding_dim() const;

  // Structural equality (ignores the on-disk index).
  friend bool operator==(const FragmentDatabase& a, const FragmentDatabase& b) {
    return a.fragments == b.fragments && a.fps == b.fps &&
           a.resolution == b.resolution && a.duration_s == b.duration_s;
  }
};

inline constexpr std::uint32_t kDatabaseVersion = 1;

// Fragments must agree on fps, resolution and duration. An empty list gives
// an empty database with default metadata.
FragmentDatabase build_database(std::vector<PoseFragment> fragments);

void save_database(FragmentDatabase& db, const std::filesystem::path& path);
FragmentDatabase load_database(const std::filesystem::path& path);

// In-memory variants of the binary format (used by save/load and tests).
std::string serialize_database(const FragmentDatabase& db,
                               std::map<std::string, std::uint64_t>* index = nullptr);
FragmentDatabase deserialize_database(const std::string& bytes);

}  // namespace choreokit
