#include <algorithm>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "nestrec/matrix_io.hpp"
#include "nestrec/random.hpp"

using namespace nestrec;

TEST(Seeds, DerivedStreamsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, "psi", 3), derive_seed(7, "psi", 3));
  EXPECT_NE(derive_seed(7, "psi", 3), derive_seed(7, "psi", 4));
  EXPECT_NE(derive_seed(7, "psi", 3), derive_seed(7, "w", 3));
  EXPECT_NE(derive_seed(7, "psi", 3), derive_seed(8, "psi", 3));
  // FNV-1a reference values.
  EXPECT_EQ(tag_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(tag_hash("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Seeds, EnginesReproduce) {
  Engine a = make_engine(11, "x"), b = make_engine(11, "x");
  const Matrix ma = gaussian_matrix(4, 5, 2.0, a);
  const Matrix mb = gaussian_matrix(4, 5, 2.0, b);
  EXPECT_EQ(ma, mb);
}

TEST(RandomSubset, SortedDistinctInRange) {
  Engine e = make_engine(3, "subset");
  for (int t = 0; t < 200; ++t) {
    const auto s = random_subset(30, 7, e);
    ASSERT_EQ(s.size(), 7u);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    EXPECT_EQ(std::set<Index>(s.begin(), s.end()).size(), 7u);
    EXPECT_GE(s.front(), 0);
    EXPECT_LT(s.back(), 30);
  }
  EXPECT_TRUE(random_subset(5, 0, e).empty());
  EXPECT_EQ(random_subset(4, 4, e), (std::vector<Index>{0, 1, 2, 3}));
  EXPECT_THROW(random_subset(3, 4, e), DimensionError);
}

TEST(MatrixIo, ByteLayoutIsRowMajorLittleEndian) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  std::ostringstream out;
  write_matrix(out, m);
  const std::string bytes = out.str();
  ASSERT_EQ(bytes.size(), 4u + 16u + 6u * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "NRM1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);
  for (int i = 5; i < 12; ++i) EXPECT_EQ(bytes[i], 0);
  double second = 0;
  std::memcpy(&second, bytes.data() + 20 + 8, 8);  // host is little-endian here
  EXPECT_EQ(second, 2.0);                           // row-major: (0,1) comes second
}

TEST(MatrixIo, RoundTripIsExact) {
  Engine e = make_engine(5, "io");
  const Matrix m = gaussian_matrix(7, 4, 1e-3, e);
  std::stringstream buf;
  write_matrix(buf, m);
  EXPECT_EQ(read_matrix(buf), m);

  const auto path = std::filesystem::temp_directory_path() / "nestrec_io_roundtrip.nrm";
  save_matrix(path, m);
  EXPECT_EQ(load_matrix(path), m);
  std::filesystem::remove(path);

  std::stringstream empty;
  write_matrix(empty, Matrix(0, 3));
  const Matrix back = read_matrix(empty);
  EXPECT_EQ(back.rows(), 0);
  EXPECT_EQ(back.cols(), 3);
}

TEST(MatrixIo, RejectsCorruptInput) {
  std::stringstream bad_magic("NRM2xxxxxxxxxxxxxxxx");
  EXPECT_THROW(read_matrix(bad_magic), IoError);

  Matrix m = Matrix::Ones(3, 3);
  std::stringstream buf;
  write_matrix(buf, m);
  std::string truncated = buf.str();
  truncated.resize(truncated.size() - 5);
  std::stringstream cut(truncated);
  EXPECT_THROW(read_matrix(cut), IoError);

  EXPECT_THROW(load_matrix("/nonexistent/dir/file.nrm"), IoError);
}
