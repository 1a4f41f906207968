#include "oja/stream_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <string_view>
#include <vector>

namespace oja {

namespace {

constexpr std::array<char, 4> kMagic{'O', 'J', 'A', 'S'};

static_assert(std::endian::native == std::endian::little, "binary stream I/O assumes a little-endian host");

std::uint32_t read_u32(const char* p) {
  std::uint32_t v = 0;
  std::memcpy(&v, p, sizeof v);
  return v;
}

void write_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

StreamFormat stream_format_from_string(const std::string& name) {
  if (name == "auto") return StreamFormat::Auto;
  if (name == "csv") return StreamFormat::Csv;
  if (name == "binary") return StreamFormat::Binary;
  fail(ErrorCode::InvalidArgument, "unknown stream format '" + name + "'");
}

FileSampleSource::FileSampleSource(const std::string& path, std::size_t d, StreamFormat format)
    : in_(path, std::ios::binary), d_(d), format_(format) {
  if (!in_) fail(ErrorCode::Io, "cannot open sample file '" + path + "'");
  if (d_ < 1) fail(ErrorCode::BadDims, "sample file dimension must be >= 1");

  std::array<char, 16> header{};
  in_.read(header.data(), header.size());
  const auto got = static_cast<std::size_t>(in_.gcount());
  const bool has_magic = got >= 4 && std::memcmp(header.data(), kMagic.data(), 4) == 0;

  if (format_ == StreamFormat::Auto) format_ = has_magic ? StreamFormat::Binary : StreamFormat::Csv;
  if (format_ == StreamFormat::Binary) {
    if (!has_magic || got < header.size()) fail(ErrorCode::BadHeader, "'" + path + "': missing OJAS header");
    const std::uint32_t file_d = read_u32(header.data() + 4);
    if (file_d != d_) {
      fail(ErrorCode::BadHeader, "'" + path + "': header dimension " + std::to_string(file_d) +
                                     " differs from expected " + std::to_string(d_));
    }
  } else {
    in_.clear();
    in_.seekg(0);
  }
}

bool FileSampleSource::next(Eigen::Ref<Vector> out) {
  if (static_cast<std::size_t>(out.size()) != d_) fail(ErrorCode::BadDims, "output vector has wrong length");
  return format_ == StreamFormat::Binary ? next_binary(out) : next_csv(out);
}

bool FileSampleSource::next_csv(Eigen::Ref<Vector> out) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const std::string_view body = trim(line);
    if (body.empty()) continue;

    std::size_t field = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view cell =
          trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (field >= d_) {
        throw LineError(ErrorCode::RowLengthMismatch, line_, "expected " + std::to_string(d_) + " fields");
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw LineError(ErrorCode::NonFiniteValue, line_, "cannot parse '" + std::string(cell) + "' as a number");
      }
      if (!std::isfinite(v)) throw LineError(ErrorCode::NonFiniteValue, line_, "non-finite value");
      out(static_cast<Eigen::Index>(field++)) = v;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (field != d_) {
      throw LineError(ErrorCode::RowLengthMismatch, line_,
                      "expected " + std::to_string(d_) + " fields, found " + std::to_string(field));
    }
    ++rows_;
    return true;
  }
  return false;
}

bool FileSampleSource::next_binary(Eigen::Ref<Vector> out) {
  std::vector<double> row(d_);
  in_.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(d_ * sizeof(double)));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == 0) return false;
  ++line_;
  if (got != d_ * sizeof(double)) throw LineError(ErrorCode::RowLengthMismatch, line_, "truncated row");
  for (std::size_t i = 0; i < d_; ++i) {
    if (!std::isfinite(row[i])) throw LineError(ErrorCode::NonFiniteValue, line_, "non-finite value");
    out(static_cast<Eigen::Index>(i)) = row[i];
  }
  ++rows_;
  return true;
}

std::unique_ptr<SampleSource> ingest_stream(const std::string& path, std::size_t d, StreamFormat format) {
  return std::make_unique<FileSampleSource>(path, d, format);
}

std::size_t export_stream(const std::string& path, SampleSource& source, StreamFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  const std::size_t d = source.dim();
  Vector x(static_cast<Eigen::Index>(d));
  std::size_t rows = 0;
  if (format == StreamFormat::Csv) {
    std::array<char, 32> buf{};
    while (source.next(x)) {
      for (std::size_t i = 0; i < d; ++i) {
        if (i) os.put(',');
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x(static_cast<Eigen::Index>(i)));
        os.write(buf.data(), res.ptr - buf.data());
      }
      os.put('\n');
      ++rows;
    }
  } else {
    os.write(kMagic.data(), kMagic.size());
    write_u32(os, static_cast<std::uint32_t>(d));
    write_u32(os, 0);
    write_u32(os, 0);  // pad to 16 bytes
    while (source.next(x)) {
      os.write(reinterpret_cast<const char*>(x.data()), static_cast<std::streamsize>(d * sizeof(double)));
      ++rows;
    }
  }
  if (!os) fail(ErrorCode::Io, "failed writing '" + path + "'");
  return rows;
}

}  // namespace oja
