#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oja/engine.hpp"
#include "oja/stream_io.hpp"

using namespace oja;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

ErrorCode code_of(const std::function<void()>& f, std::size_t* line = nullptr) {
  try {
    f();
  } catch (const LineError& e) {
    if (line) *line = e.line();
    return e.code();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

void drain(SampleSource& s) {
  Vector x(static_cast<Eigen::Index>(s.dim()));
  while (s.next(x)) {
  }
}

}  // namespace

TEST(CsvStream, ReadsRows) {
  const auto path = temp_file("oja_three.csv", "1,2\n3,4\n5,6\n");
  FileSampleSource src(path, 2);
  EXPECT_EQ(src.format(), StreamFormat::Csv);
  Vector x(2);
  std::vector<double> got;
  while (src.next(x)) got.insert(got.end(), {x(0), x(1)});
  EXPECT_EQ(got, (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(src.rows_read(), 3u);
  std::remove(path.c_str());
}

TEST(CsvStream, RowLengthMismatchReportsLine) {
  const auto path = temp_file("oja_short.csv", "1,2\n3\n");
  std::size_t line = 0;
  EXPECT_EQ(code_of([&] {
              FileSampleSource src(path, 2);
              drain(src);
            }, &line),
            ErrorCode::RowLengthMismatch);
  EXPECT_EQ(line, 2u);
  std::remove(path.c_str());
}

TEST(CsvStream, NonFiniteValue) {
  const auto path = temp_file("oja_nan.csv", "1,2\nnan,1\n");
  std::size_t line = 0;
  EXPECT_EQ(code_of([&] {
              FileSampleSource src(path, 2);
              drain(src);
            }, &line),
            ErrorCode::NonFiniteValue);
  EXPECT_EQ(line, 2u);
  std::remove(path.c_str());
}

TEST(BinaryStream, BadHeader) {
  const auto path = temp_file("oja_bad.bin", "NOPE0000");
  EXPECT_EQ(code_of([&] { FileSampleSource src(path, 2, StreamFormat::Binary); }), ErrorCode::BadHeader);
  std::remove(path.c_str());
}

TEST(BinaryStream, MissingFileIsIo) {
  EXPECT_EQ(code_of([] { FileSampleSource src("/nonexistent/oja.bin", 2); }), ErrorCode::Io);
}

TEST(BinaryStream, RoundTripGivesSameIterate) {
  Vector lam(3);
  lam << 3, 2, 1;
  const CovSpec spec = make_spec(lam, 1, 7);
  const auto path = (std::filesystem::temp_directory_path() / "oja_rt.bin").string();
  SyntheticStream out(spec, 4, 300);
  EXPECT_EQ(export_stream(path, out, StreamFormat::Binary), 300u);

  SyntheticStream mem(spec, 4, 300);
  const OjaState a = run(init_state(3, 1, 4), mem, 300, Schedule::harmonic(2, 1), Normalizer::qr()).state;
  auto file = ingest_stream(path, 3);
  const OjaState b = run(init_state(3, 1, 4), *file, 300, Schedule::harmonic(2, 1), Normalizer::qr()).state;
  EXPECT_TRUE(a.u == b.u);
  std::remove(path.c_str());
}

TEST(CsvStream, ExportRoundTripIsExact) {
  Vector lam(2);
  lam << 2, 1;
  const CovSpec spec = make_spec(lam, 1);
  const auto path = (std::filesystem::temp_directory_path() / "oja_rt.csv").string();
  SyntheticStream out(spec, 1, 50);
  export_stream(path, out, StreamFormat::Csv);
  const Matrix expected = draw_samples(spec, 1, 50);
  FileSampleSource src(path, 2);
  Vector x(2);
  for (Eigen::Index i = 0; i < 50; ++i) {
    ASSERT_TRUE(src.next(x));
    EXPECT_TRUE(x == expected.row(i).transpose());
  }
  EXPECT_FALSE(src.next(x));
  std::remove(path.c_str());
}
