#include <gtest/gtest.h>

#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dvauth/binary_io.hpp"
#include "dvauth/deviation.hpp"
#include "dvauth/error.hpp"
#include "dvauth/nws.hpp"
#include "support/test_support.hpp"

using namespace dvauth;
using namespace dvauth::testing;

namespace {

// Independent little-endian encoder for the expected byte image.
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

DvexRecord sample_record(Mode mode, int n = 4, int d = 8, std::uint64_t seed = 1) {
  Rng rng(seed);
  std::string text;
  for (int i = 0; i < n; ++i) text += "t" + std::to_string(i) + " ";
  return random_record(rng, "EN001/unknown", text, mode, d);
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  io::write_file_text(p, std::string(b.begin(), b.end()));
}

}  // namespace

TEST(Dvex, ByteLayout) {
  TempDir dir;
  DvexRecord r;
  r.mode = Mode::masked;
  r.actual.resize(2, 3);
  r.actual << 1, 2, 3, 4, 5, 6;
  r.predicted.resize(2, 3);
  r.predicted << -1, 0.5f, 0.25f, 7, 8, 9;
  r.doc_id = "P/doc";
  r.tokens = {"a", "b"};
  write_dvex(dir / "x.dvex", r);

  std::vector<std::uint8_t> expected{'D', 'V', 'E', 'X'};
  put_u32(expected, 1);
  expected.push_back(1);
  put_u32(expected, 2);
  put_u32(expected, 3);
  for (float f : {1.f, 2.f, 3.f, 4.f, 5.f, 6.f}) put_f32(expected, f);
  for (float f : {-1.f, 0.5f, 0.25f, 7.f, 8.f, 9.f}) put_f32(expected, f);
  EXPECT_EQ(io::read_file_bytes(dir / "x.dvex"), expected);

  const auto side = nlohmann::json::parse(io::read_file_text(dir / "x.dvex.tokens.json"));
  EXPECT_EQ(side["doc_id"], "P/doc");
  EXPECT_EQ(side["tokens"], nlohmann::json({"a", "b"}));
}

TEST(Dvex, RoundTripReplaysMatricesExactly) {
  TempDir dir;
  const auto rec = sample_record(Mode::masked);
  write_dvex(dir / "doc.dvex", rec);
  const auto back = read_dvex(dir / "doc.dvex");
  EXPECT_EQ(back.mode, Mode::masked);
  EXPECT_EQ(back.actual, rec.actual);
  EXPECT_EQ(back.predicted, rec.predicted);
  EXPECT_EQ(back.tokens, rec.tokens);

  const auto nws = load_external(dir / "doc.dvex");
  EXPECT_EQ(nws.dim(), 8);
  const auto doc = nws.encode("EN001/unknown", "t0 t1 t2 t3");
  const auto pred = predict_sequence(nws, doc);
  EXPECT_EQ(pred.actual, rec.actual);
  EXPECT_EQ(pred.predicted, rec.predicted);
  EXPECT_EQ(pred.valid_from, 0u);

  const auto dvs = compute_dvs(nws, doc);
  ASSERT_EQ(dvs.size(), 4u);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) {
      EXPECT_NEAR(dvs.vectors(i, j), static_cast<double>(rec.predicted(i, j)) - rec.actual(i, j), 1e-6);
    }
  }
}

TEST(Dvex, CausalRecordSkipsFirstRow) {
  TempDir dir;
  write_dvex(dir / "c.dvex", sample_record(Mode::causal));
  const auto nws = load_external(dir / "c.dvex");
  EXPECT_EQ(nws.mode(), Mode::causal);
  EXPECT_EQ(compute_dvs(nws, nws.encode("EN001/unknown", "t0 t1 t2 t3")).size(), 3u);
}

TEST(Dvex, TruncatedOrCorruptFilesAreFormatErrors) {
  TempDir dir;
  write_dvex(dir / "ok.dvex", sample_record(Mode::masked));
  const auto bytes = io::read_file_bytes(dir / "ok.dvex");
  std::filesystem::copy_file(dir / "ok.dvex.tokens.json", dir / "bad.dvex.tokens.json");

  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bytes.size() - 1}) {
    write_bytes(dir / "bad.dvex", std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut)));
    EXPECT_THROW(read_dvex(dir / "bad.dvex"), FormatError) << cut;
  }
  auto extra = bytes;
  extra.push_back(0);
  write_bytes(dir / "bad.dvex", extra);
  EXPECT_THROW(read_dvex(dir / "bad.dvex"), FormatError);

  auto magic = bytes;
  magic[3] = 'Y';
  write_bytes(dir / "bad.dvex", magic);
  EXPECT_THROW(read_dvex(dir / "bad.dvex"), FormatError);

  auto version = bytes;
  version[4] = 2;
  write_bytes(dir / "bad.dvex", version);
  EXPECT_THROW(read_dvex(dir / "bad.dvex"), FormatError);

  auto mode = bytes;
  mode[8] = 7;
  write_bytes(dir / "bad.dvex", mode);
  EXPECT_THROW(read_dvex(dir / "bad.dvex"), FormatError);
}

TEST(Dvex, SidecarProblemsAreFormatErrors) {
  TempDir dir;
  write_dvex(dir / "d.dvex", sample_record(Mode::masked));
  io::write_file_text(dir / "d.dvex.tokens.json", R"({"doc_id": "EN001/unknown", "tokens": ["t0"]})");
  EXPECT_THROW(read_dvex(dir / "d.dvex"), FormatError);
  io::write_file_text(dir / "d.dvex.tokens.json", "{");
  EXPECT_THROW(read_dvex(dir / "d.dvex"), FormatError);
}

TEST(Dvex, WriterRejectsInconsistentRecords) {
  TempDir dir;
  auto r = sample_record(Mode::masked);
  r.tokens.pop_back();
  EXPECT_THROW(write_dvex(dir / "x.dvex", r), ContractError);
}

TEST(ExternalNws, AlignmentErrorReportsFirstDivergence) {
  DvexRecord r = sample_record(Mode::masked, 2, 3);
  r.tokens = {"a", "b"};
  const ExternalNws nws(std::vector<DvexRecord>{r});
  try {
    nws.predict(nws.encode("EN001/unknown", "a c"));
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  try {
    nws.predict(nws.encode("EN001/unknown", "a b extra"));
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_EQ(e.index(), 2u);
  }
  EXPECT_THROW(nws.predict(nws.encode("EN009/unknown", "a b")), ConfigError);
}

TEST(ExternalNws, DirectoryLoadAndConsistencyChecks) {
  TempDir dir;
  auto a = sample_record(Mode::masked, 3, 4, 1);
  a.doc_id = "P1/known01";
  auto b = sample_record(Mode::masked, 3, 4, 2);
  b.doc_id = "P1/unknown";
  write_dvex(dir / "a.dvex", a);
  write_dvex(dir / "b.dvex", b);
  const auto nws = load_external_dir(dir.path());
  EXPECT_EQ(nws.size(), 2u);
  EXPECT_TRUE(nws.contains("P1/known01"));
  EXPECT_TRUE(nws.contains("P1/unknown"));

  auto dup = b;
  EXPECT_THROW(ExternalNws(std::vector<DvexRecord>{b, dup}), FormatError);
  auto other = sample_record(Mode::causal, 3, 4, 3);
  other.doc_id = "P2/unknown";
  EXPECT_THROW(ExternalNws(std::vector<DvexRecord>{a, other}), FormatError);
  EXPECT_THROW(ExternalNws(std::vector<DvexRecord>{}), ConfigError);
  EXPECT_THROW(load_external_dir(dir / "missing"), ConfigError);
}
