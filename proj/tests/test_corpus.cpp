#include <gtest/gtest.h>

#include <numeric>
#include <vector>

#include "dvauth/binary_io.hpp"
#include "dvauth/corpus.hpp"
#include "dvauth/error.hpp"
#include "dvauth/rng.hpp"
#include "support/test_support.hpp"

using namespace dvauth;
using dvauth::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void make_problem(const fs::path& root, const std::string& id, int known, bool unknown = true) {
  fs::create_directories(root / id);
  for (int k = 1; k <= known; ++k) {
    io::write_file_text(root / id / ("known0" + std::to_string(k) + ".txt"), id + " known text " + std::to_string(k));
  }
  if (unknown) io::write_file_text(root / id / "unknown.txt", id + " unknown text");
}

std::vector<std::size_t> lengths(const std::vector<SegmentRange>& rs) {
  std::vector<std::size_t> out;
  for (const auto& r : rs) out.push_back(r.size());
  return out;
}

}  // namespace

TEST(LoadDataset, LabeledTree) {
  TempDir dir;
  const auto root = dir / "pan";
  make_problem(root, "EN002", 1);
  make_problem(root, "EN001", 2);
  io::write_file_text(dir / "truth.txt", "EN001 Y\nEN002 N\n");

  const auto data = load_dataset(root, dir / "truth.txt");
  EXPECT_EQ(data.name, "pan");
  ASSERT_EQ(data.problems.size(), 2u);
  EXPECT_EQ(data.problems[0].id, "EN001");
  EXPECT_EQ(data.problems[0].known.size(), 2u);
  EXPECT_EQ(data.problems[0].known[0].id, "known01");
  EXPECT_EQ(data.problems[0].known[1].text, "EN001 known text 2");
  EXPECT_EQ(data.problems[0].unknown.role, Role::unknown);
  EXPECT_EQ(data.problems[0].label, true);
  EXPECT_EQ(data.problems[1].label, false);
  EXPECT_TRUE(data.labeled());
  EXPECT_EQ(data.positive_count(), 1u);

  const auto unlabeled = load_dataset(root);
  ASSERT_EQ(unlabeled.problems.size(), 2u);
  for (const auto& p : unlabeled.problems) EXPECT_FALSE(p.label.has_value());
  EXPECT_FALSE(unlabeled.labeled());
}

TEST(LoadDataset, MissingUnknownNamesProblem) {
  TempDir dir;
  make_problem(dir.path(), "EN001", 1);
  make_problem(dir.path(), "EN003", 1, false);
  try {
    load_dataset(dir.path());
    FAIL() << "expected StructuralError";
  } catch (const StructuralError& e) {
    EXPECT_EQ(e.problem_id(), "EN003");
    EXPECT_NE(std::string(e.what()).find("EN003"), std::string::npos);
  }
}

TEST(LoadDataset, TruthMismatchIsConsistencyError) {
  TempDir dir;
  const auto root = dir / "pan";
  make_problem(root, "EN001", 1);
  io::write_file_text(dir / "extra.txt", "EN001 Y\nEN009 N\n");
  EXPECT_THROW(load_dataset(root, dir / "extra.txt"), ConsistencyError);
  io::write_file_text(dir / "missing.txt", "\n");
  EXPECT_THROW(load_dataset(root, dir / "missing.txt"), ConsistencyError);
  io::write_file_text(dir / "bad.txt", "EN001 maybe\n");
  EXPECT_THROW(load_dataset(root, dir / "bad.txt"), ConsistencyError);
}

TEST(LoadDataset, NonUtf8NamesFile) {
  TempDir dir;
  make_problem(dir.path(), "EN001", 1);
  io::write_file_text(dir / "EN001" / "known01.txt", "bad \xC3\x28 bytes");
  try {
    load_dataset(dir.path());
    FAIL() << "expected DecodeError";
  } catch (const DecodeError& e) {
    EXPECT_NE(e.file().find("known01.txt"), std::string::npos);
  }
}

TEST(LoadDataset, BlankDocumentIsRejected) {
  TempDir dir;
  make_problem(dir.path(), "EN001", 1);
  io::write_file_text(dir / "EN001" / "unknown.txt", " \n\t ");
  EXPECT_THROW(load_dataset(dir.path()), StructuralError);
}

TEST(LoadDataset, ImbalanceOnlyWarns) {
  TempDir dir;
  const auto root = dir / "pan";
  for (const char* id : {"A", "B", "C"}) make_problem(root, id, 1);
  io::write_file_text(dir / "truth.txt", "A Y\nB Y\nC Y\n");
  EXPECT_EQ(load_dataset(root, dir / "truth.txt").positive_count(), 3u);
}

TEST(LoadDataset, DeterministicAndRoundTripsThroughWrite) {
  TempDir dir;
  const auto root = dir / "pan";
  make_problem(root, "EN001", 3);
  make_problem(root, "EN002", 1);
  io::write_file_text(dir / "truth.txt", "EN002 N\nEN001 Y\n");
  const auto a = load_dataset(root, dir / "truth.txt");
  const auto b = load_dataset(root, dir / "truth.txt");
  EXPECT_EQ(a, b);

  write_dataset(a, dir / "copy", dir / "copy_truth.txt");
  auto c = load_dataset(dir / "copy", dir / "copy_truth.txt");
  c.name = a.name;
  EXPECT_EQ(c, a);
}

TEST(SegmentRanges, WorkedExamples) {
  EXPECT_EQ(lengths(segment_ranges(300)), (std::vector<std::size_t>{128, 128, 44}));
  EXPECT_EQ(lengths(segment_ranges(260)), (std::vector<std::size_t>{128, 128}));
  EXPECT_EQ(lengths(segment_ranges(128)), (std::vector<std::size_t>{128}));
  EXPECT_TRUE(segment_ranges(0).empty());
  EXPECT_TRUE(segment_ranges(31).empty());
  EXPECT_EQ(lengths(segment_ranges(32)), (std::vector<std::size_t>{32}));
}

TEST(SegmentRanges, RejectsBadBounds) {
  EXPECT_THROW(segment_ranges(10, 16, 32), ContractError);
  EXPECT_THROW(segment_ranges(10, 16, 0), ContractError);
}

TEST(SegmentDocument, ConcatenationPlusTailReproducesSource) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.below(700);
    const std::size_t min_tail = 1 + rng.below(40);
    const std::size_t max_len = min_tail + rng.below(150);
    std::vector<TokenId> doc(n);
    for (auto& t : doc) t = static_cast<TokenId>(rng.below(1000));

    const auto segs = segment_document(doc, max_len, min_tail);
    std::vector<TokenId> joined;
    std::size_t expected_offset = 0;
    for (const auto& s : segs) {
      EXPECT_EQ(s.offset, expected_offset);
      EXPECT_GE(s.tokens.size(), min_tail);
      EXPECT_LE(s.tokens.size(), max_len);
      joined.insert(joined.end(), s.tokens.begin(), s.tokens.end());
      expected_offset += s.tokens.size();
    }
    const std::vector<TokenId> tail(doc.begin() + static_cast<std::ptrdiff_t>(joined.size()), doc.end());
    EXPECT_LT(tail.size(), min_tail);
    joined.insert(joined.end(), tail.begin(), tail.end());
    EXPECT_EQ(joined, doc);
  }
}

TEST(Utf8, Validation) {
  EXPECT_TRUE(is_valid_utf8("plain"));
  EXPECT_TRUE(is_valid_utf8("\xE2\x82\xAC \xF0\x9F\x98\x80"));
  EXPECT_FALSE(is_valid_utf8("\xC0\xAF"));          // overlong
  EXPECT_FALSE(is_valid_utf8("\xED\xA0\x80"));      // surrogate
  EXPECT_FALSE(is_valid_utf8("\xF4\x90\x80\x80"));  // beyond U+10FFFF
  EXPECT_FALSE(is_valid_utf8("\xE2\x82"));          // truncated
}
