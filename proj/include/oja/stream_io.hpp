#pragma once

// Sample files. Two layouts are understood:
//   * headerless CSV, one sample per line, d comma-separated numbers;
//   * binary: 16-byte header {"OJAS", u32 d, u32 reserved, u32 pad} followed by rows of
//     d little-endian IEEE-754 doubles.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>

#include "oja/sampler.hpp"

namespace oja {

enum class StreamFormat { Auto, Csv, Binary };

StreamFormat stream_format_from_string(const std::string& name);

/// Single-pass reader. Errors carry the 1-based line (CSV) or row (binary).
class FileSampleSource final : public SampleSource {
 public:
  FileSampleSource(const std::string& path, std::size_t d, StreamFormat format = StreamFormat::Auto);

  std::size_t dim() const override { return d_; }
  bool next(Eigen::Ref<Vector> out) override;
  StreamFormat format() const noexcept { return format_; }
  std::size_t rows_read() const noexcept { return rows_; }

 private:
  bool next_csv(Eigen::Ref<Vector> out);
  bool next_binary(Eigen::Ref<Vector> out);

  std::ifstream in_;
  std::size_t d_;
  StreamFormat format_;
  std::size_t line_ = 0;
  std::size_t rows_ = 0;
};

std::unique_ptr<SampleSource> ingest_stream(const std::string& path, std::size_t d,
                                            StreamFormat format = StreamFormat::Auto);

/// Drains `source` into a file; returns the number of rows written.
std::size_t export_stream(const std::string& path, SampleSource& source, StreamFormat format);

}  // namespace oja
