#pragma once

#include <string>
#include <vector>

#include "hybridcp/completion.hpp"

namespace hybridcp {

// Binary containers, little-endian, each opening with a 4-byte magic:
//   TNS3  u64 I, J, K, then IJK doubles in (i, j, k) row-major order
//   MSK3  u64 I, J, K, u64 count, then count 1-based (i, j, k) u64 triples
//   CPM1  u64 I, J, K, R, then A, B, C column-major, then alpha
//   MAT1  u64 rows, cols, then the entries column-major

void write_tensor(const std::string& path, const Tensor3& t);
Tensor3 read_tensor(const std::string& path);

void write_mask(const std::string& path, const Mask& mask);
Mask read_mask(const std::string& path);

void write_model(const std::string& path, const CPModel& m);
CPModel read_model(const std::string& path);

void write_matrix(const std::string& path, const Matrix& m);
Matrix read_matrix(const std::string& path);

/// True when the file starts with "P3" or "P6".
bool looks_like_ppm(const std::string& path);

/// P3 or P6 pixmap with maxval 255 as an (height, width, 3) tensor of samples / 255.
Tensor3 parse_ppm(const std::string& bytes);
Tensor3 load_ppm(const std::string& path);

/// Samples are scaled by 255, rounded half up and clamped to [0, 255].
std::string encode_ppm(const Tensor3& image, bool binary = true);
void save_ppm(const std::string& path, const Tensor3& image, bool binary = true);

/// iteration,residual,lambda,wall_ms
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace_csv(const std::string& path);

/// One row per entry: index,value, under the given column names.
void write_series_csv(const std::string& path, const std::string& header,
                      const std::vector<double>& values);

/// Whole file as bytes; DataError when it cannot be opened.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

} // namespace hybridcp
