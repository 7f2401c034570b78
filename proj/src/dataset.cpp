#include "cellvote/dataset.hpp"

#include <fstream>
#include <ostream>
#include <unordered_set>

#include "cellvote/error.hpp"
#include "cellvote/records.hpp"

namespace cellvote {

namespace fs = std::filesystem;

std::vector<GroundTruthRecord> ingest_dataset(const fs::path& manifest, const IngestOptions& options) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::MissingFile, "cannot open manifest '" + manifest.string() + "'");

  std::vector<GroundTruthRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "crop_path") continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 3)
      throw Error(ErrorKind::ParseError,
                  where + "expected crop_path,label,source_image_id, found " +
                      std::to_string(fields.size()) + " fields");
    if (fields[0].empty() || fields[2].empty())
      throw Error(ErrorKind::ParseError, where + "empty crop path or source image id");
    CellClass label;
    try {
      label = parse_cell_class(fields[1]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + e.what());
    }
    std::string item_id = fs::path(fields[0]).stem().string();
    if (item_id.empty()) throw Error(ErrorKind::ParseError, where + "crop path has no file name");
    if (!seen.insert(item_id).second)
      throw Error(ErrorKind::DuplicateItem, where + "duplicate item id '" + item_id + "'");
    if (options.require_crops) {
      const fs::path crop = manifest.parent_path() / fields[0];
      if (!fs::exists(crop))
        throw Error(ErrorKind::MissingFile, where + "crop file '" + crop.string() + "' not found");
    }
    records.emplace_back(std::move(item_id), label, fields[2], fields[0]);
  }
  return records;
}

void write_truth_manifest(std::ostream& out, std::span<const GroundTruthRecord> records) {
  out << "crop_path,label,source_image_id\n";
  for (const auto& r : records)
    out << r.crop_path() << ',' << to_string(r.true_label()) << ',' << r.source_image_id() << '\n';
}

std::array<int, kNumClasses> class_histogram(std::span<const GroundTruthRecord> records) {
  std::array<int, kNumClasses> histogram{};
  for (const auto& r : records) ++histogram[index_of(r.true_label())];
  return histogram;
}

TruthIndex index_truth(std::span<const GroundTruthRecord> records) {
  TruthIndex index;
  index.reserve(records.size());
  for (const auto& r : records) index.emplace(r.item_id(), r.true_label());
  return index;
}

}  // namespace cellvote
