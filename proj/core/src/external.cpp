#include <algorithm>

#include <nlohmann/json.hpp>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"
#include "dvauth/nws.hpp"

namespace fs = std::filesystem;

namespace dvauth {
namespace {

constexpr std::string_view kDvexMagic = "DVEX";
constexpr std::uint32_t kDvexVersion = 1;

}  // namespace

fs::path dvex_sidecar_path(const fs::path& dvex_path) {
  fs::path p = dvex_path;
  p += ".tokens.json";
  return p;
}

void write_dvex(const fs::path& path, const DvexRecord& record) {
  const auto n = record.actual.rows();
  const auto d = record.actual.cols();
  if (record.predicted.rows() != n || record.predicted.cols() != d) {
    throw ContractError("DVEX actual/predicted shapes differ");
  }
  if (static_cast<std::size_t>(n) != record.tokens.size()) {
    throw ContractError("DVEX token list length differs from matrix rows");
  }
  io::ByteWriter w;
  w.magic(kDvexMagic);
  w.u32(kDvexVersion);
  w.u8(static_cast<std::uint8_t>(record.mode));
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(d));
  w.matrix(record.actual);
  w.matrix(record.predicted);
  w.write_file(path);

  nlohmann::json side;
  side["doc_id"] = record.doc_id;
  side["tokens"] = record.tokens;
  io::write_file_text(dvex_sidecar_path(path), side.dump());
}

DvexRecord read_dvex(const fs::path& path) {
  auto r = io::ByteReader::from_file(path);
  r.expect_magic(kDvexMagic);
  if (const auto v = r.u32(); v != kDvexVersion) {
    throw FormatError(path.string() + ": unsupported DVEX version " + std::to_string(v));
  }
  DvexRecord rec;
  const auto mode = r.u8();
  if (mode > 1) throw FormatError(path.string() + ": bad mode byte " + std::to_string(mode));
  rec.mode = static_cast<Mode>(mode);
  const auto n = r.u32();
  const auto d = r.u32();
  rec.actual = r.matrix(n, d);
  rec.predicted = r.matrix(n, d);
  r.expect_end();

  const auto side_path = dvex_sidecar_path(path);
  try {
    const auto side = nlohmann::json::parse(io::read_file_text(side_path));
    rec.doc_id = side.at("doc_id").get<std::string>();
    rec.tokens = side.at("tokens").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side_path.string() + ": " + e.what());
  }
  if (rec.tokens.size() != n) {
    throw FormatError(side_path.string() + ": " + std::to_string(rec.tokens.size()) +
                      " tokens for n=" + std::to_string(n));
  }
  return rec;
}

ExternalNws::ExternalNws(std::vector<DvexRecord> records) {
  if (records.empty()) throw ConfigError("external backend has no DVEX records");
  mode_ = records.front().mode;
  dim_ = static_cast<int>(records.front().actual.cols());
  for (auto& rec : records) {
    if (rec.mode != mode_ || rec.actual.cols() != dim_) {
      throw FormatError("DVEX record '" + rec.doc_id + "' disagrees on mode or dimension");
    }
    auto [it, inserted] = records_.try_emplace(rec.doc_id);
    if (!inserted) throw FormatError("duplicate DVEX doc_id '" + rec.doc_id + "'");
    it->second = std::move(rec);
  }
}

bool ExternalNws::contains(std::string_view doc_id) const {
  return records_.find(doc_id) != records_.end();
}

EncodedDocument ExternalNws::encode(std::string key, std::string_view text) const {
  EncodedDocument doc;
  doc.key = std::move(key);
  doc.surface = tokenize(text);
  return doc;
}

Prediction ExternalNws::predict(const EncodedDocument& doc) const {
  const auto it = records_.find(doc.key);
  if (it == records_.end()) throw ConfigError("no DVEX record for document '" + doc.key + "'");
  const DvexRecord& rec = it->second;
  const auto common = std::min(rec.tokens.size(), doc.surface.size());
  for (std::size_t i = 0; i < common; ++i) {
    if (rec.tokens[i] != doc.surface[i]) {
      throw AlignmentError(i, "DVEX tokens for '" + doc.key + "' diverge at index " +
                                  std::to_string(i) + ": '" + rec.tokens[i] + "' vs '" +
                                  doc.surface[i] + "'");
    }
  }
  if (rec.tokens.size() != doc.surface.size()) {
    throw AlignmentError(common, "DVEX tokens for '" + doc.key + "' have length " +
                                     std::to_string(rec.tokens.size()) + ", document has " +
                                     std::to_string(doc.surface.size()));
  }
  Prediction p;
  p.mode = rec.mode;
  p.valid_from = rec.mode == Mode::causal ? 1 : 0;
  p.actual = rec.actual;
  p.predicted = rec.predicted;
  return p;
}

ExternalNws load_external(const fs::path& path) {
  std::vector<DvexRecord> recs;
  recs.push_back(read_dvex(path));
  return ExternalNws(std::move(recs));
}

ExternalNws load_external_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("external DVEX directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".dvex") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DvexRecord> recs;
  for (const auto& f : files) recs.push_back(read_dvex(f));
  return ExternalNws(std::move(recs));
}

}  // namespace dvauth
