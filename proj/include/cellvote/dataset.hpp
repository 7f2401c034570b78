#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cellvote/annotation.hpp"

namespace cellvote {

struct IngestOptions {
  // Also require every crop_path (relative to the manifest directory) to exist.
  bool require_crops = false;
};

// Ground-truth manifest: "crop_path,label,source_image_id" per line, header
// optional. The item id is the crop file stem. Throws MissingFile,
// ParseError (with line number) or DuplicateItem (naming the id).
std::vector<GroundTruthRecord> ingest_dataset(const std::filesystem::path& manifest,
                                              const IngestOptions& options = {});

void write_truth_manifest(std::ostream& out, std::span<const GroundTruthRecord> records);

std::array<int, kNumClasses> class_histogram(std::span<const GroundTruthRecord> records);

using TruthIndex = std::unordered_map<std::string, CellClass>;
TruthIndex index_truth(std::span<const GroundTruthRecord> records);

}  // namespace cellvote
