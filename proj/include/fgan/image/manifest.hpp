#pragma once

#include <filesystem>
#include <vector>

#include "fgan/core/error.hpp"
#include "fgan/corpus/record.hpp"

namespace fgan::image {

FGAN_DEFINE_ERROR(MissingImage);
FGAN_DEFINE_ERROR(CorruptManifest);

inline constexpr const char* kManifestName = "manifest.jsonl";

/// One line of manifest.jsonl. `record.image_path` is relative to the dataset directory.
struct ManifestEntry {
  corpus::FormulaRecord record;
  std::vector<int> token_ids;
  int height = 0, width = 0;

  bool operator==(const ManifestEntry&) const = default;
};

/// Writes dir/manifest.jsonl atomically (temporary file then rename), creating dir if needed.
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& dir);

/// Reads dir/manifest.jsonl. With `strict`, every referenced image must exist.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir, bool strict = true);

}  // namespace fgan::image
