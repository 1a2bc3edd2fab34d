#include "hybridcp/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hybridcp/error.hpp"

namespace hybridcp {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
public:
  explicit Writer(const char* magic) { bytes_.append(magic, 4); }

  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void matrix(const Matrix& m) {
    for (Index c = 0; c < m.cols(); ++c)
      for (Index r = 0; r < m.rows(); ++r) f64(m(r, c));
  }
  const std::string& bytes() const { return bytes_; }

private:
  void raw(const void* p, std::size_t n) { bytes_.append(static_cast<const char*>(p), n); }
  std::string bytes_;
};

class Reader {
public:
  Reader(std::string bytes, const char* magic, const std::string& path) : bytes_(std::move(bytes)) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw FormatError(path + ": not a " + std::string(magic, 4) + " file (bad magic)");
    }
    pos_ = 4;
  }

  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v, "u64 field");
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v, "double payload");
    return v;
  }
  Index extent(const char* what) {
    const std::size_t at = pos_;
    const std::uint64_t v = u64();
    if (v == 0 || v > (std::uint64_t{1} << 40)) throw ParseError(std::string("invalid ") + what, at);
    return static_cast<Index>(v);
  }
  Matrix matrix(Index rows, Index cols) {
    need(static_cast<std::size_t>(rows * cols) * sizeof(double), "matrix payload");
    Matrix m(rows, cols);
    for (Index c = 0; c < cols; ++c)
      for (Index r = 0; r < rows; ++r) m(r, c) = f64();
    return m;
  }
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw ParseError(std::string("truncated ") + what, bytes_.size());
  }
  void finish() const {
    if (pos_ != bytes_.size()) throw ParseError("trailing bytes after payload", pos_);
  }
  std::size_t pos() const { return pos_; }

private:
  void raw(void* p, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

} // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path);
}

void write_tensor(const std::string& path, const Tensor3& t) {
  Writer w("TNS3");
  w.u64(static_cast<std::uint64_t>(t.dims().I));
  w.u64(static_cast<std::uint64_t>(t.dims().J));
  w.u64(static_cast<std::uint64_t>(t.dims().K));
  for (double v : t.values()) w.f64(v);
  write_file(path, w.bytes());
}

Tensor3 read_tensor(const std::string& path) {
  Reader r(read_file(path), "TNS3", path);
  Dims d;
  d.I = r.extent("I");
  d.J = r.extent("J");
  d.K = r.extent("K");
  r.need(static_cast<std::size_t>(d.size()) * sizeof(double), "tensor payload");
  std::vector<double> values(static_cast<std::size_t>(d.size()));
  for (double& v : values) v = r.f64();
  r.finish();
  return Tensor3(d, std::move(values));
}

void write_mask(const std::string& path, const Mask& mask) {
  Writer w("MSK3");
  w.u64(static_cast<std::uint64_t>(mask.dims().I));
  w.u64(static_cast<std::uint64_t>(mask.dims().J));
  w.u64(static_cast<std::uint64_t>(mask.dims().K));
  w.u64(mask.count());
  for (const auto& [i, j, k] : mask.observed()) {
    w.u64(static_cast<std::uint64_t>(i + 1));
    w.u64(static_cast<std::uint64_t>(j + 1));
    w.u64(static_cast<std::uint64_t>(k + 1));
  }
  write_file(path, w.bytes());
}

Mask read_mask(const std::string& path) {
  Reader r(read_file(path), "MSK3", path);
  Dims d;
  d.I = r.extent("I");
  d.J = r.extent("J");
  d.K = r.extent("K");
  const std::size_t count_at = r.pos();
  const std::uint64_t count = r.u64();
  if (count > static_cast<std::uint64_t>(d.size())) throw ParseError("more triples than entries", count_at);
  r.need(count * 3 * sizeof(std::uint64_t), "mask triples");
  std::vector<Triple> observed;
  observed.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    const std::size_t at = r.pos();
    Triple t{};
    const Index lim[3] = {d.I, d.J, d.K};
    for (int c = 0; c < 3; ++c) {
      const std::uint64_t v = r.u64();
      if (v < 1 || v > static_cast<std::uint64_t>(lim[c])) throw ParseError("mask index out of range", at);
      t[static_cast<std::size_t>(c)] = static_cast<Index>(v - 1);
    }
    observed.push_back(t);
  }
  r.finish();
  return Mask(d, std::move(observed));
}

void write_model(const std::string& path, const CPModel& m) {
  m.validate();
  Writer w("CPM1");
  w.u64(static_cast<std::uint64_t>(m.A.rows()));
  w.u64(static_cast<std::uint64_t>(m.B.rows()));
  w.u64(static_cast<std::uint64_t>(m.C.rows()));
  w.u64(static_cast<std::uint64_t>(m.rank()));
  w.matrix(m.A);
  w.matrix(m.B);
  w.matrix(m.C);
  w.matrix(m.alpha);
  write_file(path, w.bytes());
}

CPModel read_model(const std::string& path) {
  Reader r(read_file(path), "CPM1", path);
  const Index I = r.extent("I");
  const Index J = r.extent("J");
  const Index K = r.extent("K");
  const Index R = r.extent("R");
  CPModel m;
  m.A = r.matrix(I, R);
  m.B = r.matrix(J, R);
  m.C = r.matrix(K, R);
  m.alpha = r.matrix(R, 1);
  r.finish();
  return m;
}

void write_matrix(const std::string& path, const Matrix& m) {
  Writer w("MAT1");
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  w.matrix(m);
  write_file(path, w.bytes());
}

Matrix read_matrix(const std::string& path) {
  Reader r(read_file(path), "MAT1", path);
  const Index rows = r.extent("rows");
  const Index cols = r.extent("cols");
  Matrix m = r.matrix(rows, cols);
  r.finish();
  return m;
}

bool looks_like_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char head[2] = {0, 0};
  if (!in.read(head, 2)) return false;
  return head[0] == 'P' && (head[1] == '3' || head[1] == '6');
}

namespace {

class PpmScanner {
public:
  explicit PpmScanner(const std::string& b) : b_(b) {}

  void skip_space() {
    while (pos < b_.size()) {
      const auto c = static_cast<unsigned char>(b_[pos]);
      if (c == '#') {
        while (pos < b_.size() && b_[pos] != '\n') ++pos;
      } else if (std::isspace(c)) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space();
    const std::size_t start = pos;
    long v = 0;
    while (pos < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos]))) {
      v = v * 10 + (b_[pos] - '0');
      if (v > 1'000'000'000L) throw ParseError(std::string(what) + " is too large", start);
      ++pos;
    }
    if (pos == start) {
      if (pos >= b_.size()) throw ParseError(std::string("truncated before ") + what, pos);
      throw ParseError(std::string("expected ") + what, pos);
    }
    return v;
  }

  std::size_t pos = 0;

private:
  const std::string& b_;
};

} // namespace

Tensor3 parse_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '3' && bytes[1] != '6')) {
    throw ParseError("missing P3/P6 magic", 0);
  }
  const bool binary = bytes[1] == '6';
  PpmScanner s(bytes);
  s.pos = 2;
  s.skip_space();
  const std::size_t width_at = s.pos;
  const long width = s.number("width");
  const long height = s.number("height");
  if (width < 1 || height < 1) throw ParseError("image extents must be positive", width_at);
  s.skip_space();
  const std::size_t maxval_at = s.pos;
  const long maxval = s.number("maxval");
  if (maxval != 255) throw ParseError("unsupported maxval " + std::to_string(maxval), maxval_at);

  const Dims d{height, width, 3};
  Tensor3 t(d);
  auto values = t.values();
  if (binary) {
    if (s.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[s.pos]))) {
      throw ParseError("expected whitespace after maxval", s.pos);
    }
    ++s.pos;
    const auto n = static_cast<std::size_t>(d.size());
    if (bytes.size() - s.pos < n) throw ParseError("truncated pixel data", bytes.size());
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = static_cast<double>(static_cast<unsigned char>(bytes[s.pos + i])) / 255.0;
    }
  } else {
    for (double& v : values) {
      s.skip_space();
      const std::size_t at = s.pos;
      const long sample = s.number("sample");
      if (sample > 255) throw ParseError("sample exceeds maxval", at);
      v = static_cast<double>(sample) / 255.0;
    }
  }
  return t;
}

Tensor3 load_ppm(const std::string& path) { return parse_ppm(read_file(path)); }

std::string encode_ppm(const Tensor3& image, bool binary) {
  const Dims d = image.dims();
  if (d.K != 3) throw ArgumentError("pixmap tensors need exactly 3 channels");
  std::string out = (binary ? "P6\n" : "P3\n") + std::to_string(d.J) + " " + std::to_string(d.I) + "\n255\n";
  std::size_t col = 0;
  for (double v : image.values()) {
    const double scaled = std::floor(v * 255.0 + 0.5);
    const int q = std::isnan(scaled) ? 0 : static_cast<int>(std::clamp(scaled, 0.0, 255.0));
    if (binary) {
      out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
    } else {
      out += std::to_string(q);
      out.push_back(++col % 12 == 0 ? '\n' : ' ');
    }
  }
  if (!binary && out.back() == ' ') out.back() = '\n';
  return out;
}

void save_ppm(const std::string& path, const Tensor3& image, bool binary) {
  write_file(path, encode_ppm(image, binary));
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "iteration,residual,lambda,wall_ms\n" << std::setprecision(17);
  for (const TraceRow& row : trace) {
    out << row.iteration << ',' << row.residual << ',' << row.lambda << ',' << row.wall_ms << '\n';
  }
  write_file(path, out.str());
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  if (!std::getline(in, line) || line.rfind("iteration,residual,lambda", 0) != 0) {
    throw ParseError("missing trace header", 0);
  }
  offset += line.size() + 1;
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      TraceRow row;
      char c1 = 0, c2 = 0, c3 = 0;
      std::istringstream ls(line);
      if (!(ls >> row.iteration >> c1 >> row.residual >> c2 >> row.lambda >> c3 >> row.wall_ms) || c1 != ',' ||
          c2 != ',' || c3 != ',') {
        throw ParseError("malformed trace row", offset);
      }
      rows.push_back(row);
    }
    offset += line.size() + 1;
  }
  return rows;
}

void write_series_csv(const std::string& path, const std::string& header,
                      const std::vector<double>& values) {
  std::ostringstream out;
  out << header << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << i + 1 << ',' << values[i] << '\n';
  write_file(path, out.str());
}

} // namespace hybridcp
