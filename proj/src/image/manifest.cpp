#include "fgan/image/manifest.hpp"

#include <fstream>
#include <json.hpp>

namespace fgan::image {

using nlohmann::json;

void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto final_path = dir / kManifestName;
  const auto tmp_path = dir / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp_path.string());
    for (const auto& e : entries) {
      json row = {{"id", e.record.id},
                  {"latex", e.record.source_latex},
                  {"tokens", e.record.tokens},
                  {"token_ids", e.token_ids},
                  {"domain", domain_name(e.record.domain)},
                  {"image", e.record.image_path ? json(*e.record.image_path) : json(nullptr)},
                  {"height", e.height},
                  {"width", e.width}};
      out << row.dump() << '\n';
    }
    if (!out) throw IoError("short write to " + tmp_path.string());
  }
  std::filesystem::rename(tmp_path, final_path);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir, bool strict) {
  const auto path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    ManifestEntry e;
    try {
      const json row = json::parse(line);
      e.record.id = row.at("id").get<std::string>();
      e.record.source_latex = row.at("latex").get<std::string>();
      e.record.tokens = row.at("tokens").get<corpus::TokenSequence>();
      e.token_ids = row.at("token_ids").get<std::vector<int>>();
      e.record.domain = parse_domain(row.at("domain").get<std::string>());
      if (!row.at("image").is_null()) e.record.image_path = row.at("image").get<std::string>();
      e.height = row.at("height").get<int>();
      e.width = row.at("width").get<int>();
    } catch (const json::exception& ex) {
      throw CorruptManifest(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw CorruptManifest(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
    if (strict && e.record.image_path && !std::filesystem::exists(dir / *e.record.image_path))
      throw MissingImage((dir / *e.record.image_path).string() + " referenced by record " + e.record.id);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fgan::image
