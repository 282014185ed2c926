#include "choreokit/database.hpp"

#include "binary_io.hpp"
#include "choreokit/error.hpp"
#include "file_util.hpp"

namespace choreokit {

namespace {
constexpr std::string_view kMagic = "CKDB";
}

bool FragmentDatabase::has_embeddings() const {
  return !fragments.empty() && fragments.front().embedding.has_value();
}

std::size_t FragmentDatabase::embedding_dim() const {
  return has_embeddings() ? static_cast<std::size_t>(fragments.front().embedding->size()) : 0;
}

FragmentDatabase build_database(std::vector<PoseFragment> fragments) {
  FragmentDatabase db;
  if (fragments.empty()) return db;
  const PoseFragment& first = fragments.front();
  db.fps = first.frames.fps;
  db.resolution = first.frames.resolution;
  db.duration_s = first.duration_s;
  const bool embedded = first.embedding.has_value();
  const auto dim = embedded ? first.embedding->size() : 0;
  for (const PoseFragment& f : fragments) {
    if (f.duration_s != db.duration_s || f.frames.fps != db.fps)
      throw InvariantError("build_database: fragment " + f.id() +
                           " has a different duration or fps");
    if (f.frames.resolution != db.resolution)
      throw InvariantError("build_database: fragment " + f.id() + " has a different resolution");
    if (f.length() != db.frames_per_fragment())
      throw InvariantError("build_database: fragment " + f.id() + " has " +
                           std::to_string(f.length()) + " frames, expected " +
                           std::to_string(db.frames_per_fragment()));
    if (f.embedding.has_value() != embedded || (embedded && f.embedding->size() != dim))
      throw InvariantError("build_database: inconsistent embeddings at " + f.id());
  }
  db.fragments = std::move(fragments);
  return db;
}

std::string serialize_database(const FragmentDatabase& db,
                               std::map<std::string, std::uint64_t>* index) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kDatabaseVersion);
  w.u32(static_cast<std::uint32_t>(db.fps));
  w.u32(static_cast<std::uint32_t>(db.resolution.width));
  w.u32(static_cast<std::uint32_t>(db.resolution.height));
  w.u32(static_cast<std::uint32_t>(db.duration_s));
  w.u32(static_cast<std::uint32_t>(db.frames_per_fragment()));
  w.u32(static_cast<std::uint32_t>(db.embedding_dim()));
  w.u64(db.fragments.size());
  for (const PoseFragment& f : db.fragments) {
    const std::size_t length_pos = w.size();
    if (index) (*index)[f.id()] = length_pos;
    w.u64(0);
    w.str(f.source_id);
    w.i64(f.start_frame);
    w.u32(static_cast<std::uint32_t>(f.frames.size()));
    for (const PoseFrame& frame : f.frames.frames) {
      w.i64(frame.frame_index);
      for (const Keypoint& k : frame.keypoints) {
        w.f64(k.x);
        w.f64(k.y);
        w.f64(k.confidence);
      }
    }
    w.u8(f.embedding ? 1 : 0);
    if (f.embedding) {
      w.u32(static_cast<std::uint32_t>(f.embedding->size()));
      for (Eigen::Index i = 0; i < f.embedding->size(); ++i) w.f64((*f.embedding)(i));
    }
    w.patch_u64(length_pos, w.size() - length_pos - 8);
  }
  return std::move(w.bytes());
}

FragmentDatabase deserialize_database(const std::string& bytes) {
  detail::ByteReader r(bytes);
  if (bytes.size() < 4 || r.raw(4) != kMagic) throw FormatError("not a fragment database (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kDatabaseVersion)
    throw FormatError("incompatible database version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kDatabaseVersion) + ")");
  FragmentDatabase db;
  db.fps = static_cast<int>(r.u32());
  db.resolution.width = static_cast<int>(r.u32());
  db.resolution.height = static_cast<int>(r.u32());
  db.duration_s = static_cast<int>(r.u32());
  const std::uint32_t frames_per_fragment = r.u32();
  const std::uint32_t embedding_dim = r.u32();
  const std::uint64_t count = r.u64();
  if (db.fps <= 0 || frames_per_fragment != db.frames_per_fragment())
    throw FormatError("inconsistent database header");

  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t record_pos = r.position();
    const std::uint64_t length = r.u64();
    if (length > r.remaining()) throw FormatError("truncated fragment record " + std::to_string(i));
    const std::size_t end = r.position() + length;
    PoseFragment f;
    f.duration_s = db.duration_s;
    f.source_id = r.str();
    f.start_frame = r.i64();
    const std::uint32_t n = r.u32();
    if (n != frames_per_fragment) throw FormatError("fragment record " + std::to_string(i) + " has wrong length");
    f.frames.fps = db.fps;
    f.frames.resolution = db.resolution;
    f.frames.frames.resize(n);
    for (PoseFrame& frame : f.frames.frames) {
      frame.frame_index = r.i64();
      for (Keypoint& k : frame.keypoints) {
        k.x = r.f64();
        k.y = r.f64();
        k.confidence = r.f64();
      }
    }
    if (r.u8() != 0) {
      const std::uint32_t dim = r.u32();
      if (dim != embedding_dim) throw FormatError("embedding dimension mismatch in record " + std::to_string(i));
      EmbeddingVec e(dim);
      for (std::uint32_t d = 0; d < dim; ++d) e(d) = r.f64();
      f.embedding = std::move(e);
    } else if (embedding_dim != 0) {
      throw FormatError("record " + std::to_string(i) + " lacks an embedding");
    }
    if (r.position() != end) throw FormatError("fragment record " + std::to_string(i) + " length mismatch");
    db.index[f.id()] = record_pos;
    db.fragments.push_back(std::move(f));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last fragment record");
  return db;
}

void save_database(FragmentDatabase& db, const std::filesystem::path& path) {
  std::map<std::string, std::uint64_t> index;
  detail::write_file(path, serialize_database(db, &index));
  db.index = std::move(index);
}

FragmentDatabase load_database(const std::filesystem::path& path) {
  return deserialize_database(detail::read_file(path));
}

}  // namespace choreokit
