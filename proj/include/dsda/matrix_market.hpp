#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "dsda/matkit.hpp"

namespace dsda {

namespace mm {

enum class Layout { coordinate, array };
enum class Field { real, integer, complex, pattern };
enum class Symmetry { general, symmetric, skew, hermitian };

struct Header {
  Layout layout = Layout::array;
  Field field = Field::real;
  Symmetry symmetry = Symmetry::general;
};

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next line that is neither blank nor a comment; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '%') continue;
      return true;
    }
    return false;
  }

  bool raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ParseError, source_ + ":" + std::to_string(line_no_) + ": " + what);
  }

  int line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string source_;
  int line_no_ = 0;
};

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline Header parse_header(LineReader& rd) {
  std::string line;
  if (!rd.raw(line)) rd.fail("empty file");
  std::istringstream ss(line);
  std::string banner, object, layout, field, sym;
  ss >> banner >> object >> layout >> field >> sym;
  if (banner != "%%MatrixMarket") rd.fail("missing %%MatrixMarket banner");
  if (lower(object) != "matrix") rd.fail("unsupported object '" + object + "'");
  Header h;
  layout = lower(layout);
  if (layout == "coordinate") h.layout = Layout::coordinate;
  else if (layout == "array") h.layout = Layout::array;
  else rd.fail("unknown format '" + layout + "'");
  field = lower(field);
  if (field == "real" || field == "double") h.field = Field::real;
  else if (field == "integer") h.field = Field::integer;
  else if (field == "complex") h.field = Field::complex;
  else if (field == "pattern") h.field = Field::pattern;
  else rd.fail("unknown field '" + field + "'");
  sym = lower(sym);
  if (sym == "general") h.symmetry = Symmetry::general;
  else if (sym == "symmetric") h.symmetry = Symmetry::symmetric;
  else if (sym == "skew-symmetric") h.symmetry = Symmetry::skew;
  else if (sym == "hermitian") h.symmetry = Symmetry::hermitian;
  else rd.fail("unknown symmetry '" + sym + "'");
  return h;
}

inline double parse_value(LineReader& rd, const std::string& tok) {
  const char* b = tok.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e == b || *e != '\0') rd.fail("bad number '" + tok + "'");
  if (!std::isfinite(v)) rd.fail("non-finite entry '" + tok + "'");
  return v;
}

inline long long parse_index(LineReader& rd, const std::string& tok) {
  const char* b = tok.c_str();
  char* e = nullptr;
  const long long v = std::strtoll(b, &e, 10);
  if (e == b || *e != '\0') rd.fail("bad integer '" + tok + "'");
  return v;
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

template <typename Scalar>
Scalar make_value(double re, double im) {
  if constexpr (std::is_same_v<Scalar, double>) {
    (void)im;
    return re;
  } else {
    return Scalar(re, im);
  }
}

template <typename Scalar>
Scalar conj_of(Scalar v) {
  if constexpr (std::is_same_v<Scalar, double>) return v;
  else return std::conj(v);
}

template <typename Scalar>
Mat<Scalar> read(std::istream& in, const std::string& source) {
  constexpr bool kComplex = !std::is_same_v<Scalar, double>;
  LineReader rd(in, source);
  const Header h = parse_header(rd);
  if (h.field == Field::pattern) {
    throw Error(ErrorCode::UnsupportedField, source + ": pattern matrices carry no values");
  }
  if (h.field == Field::complex && !kComplex) {
    throw Error(ErrorCode::UnsupportedField, source + ": complex entries need the complex loader");
  }
  if (h.symmetry == Symmetry::hermitian && h.field != Field::complex) {
    throw Error(ErrorCode::UnsupportedField, source + ": hermitian symmetry requires complex entries");
  }
  const int per_entry = h.field == Field::complex ? 2 : 1;

  std::string line;
  if (!rd.next(line)) rd.fail("missing size line");
  const auto size = tokens(line);
  const std::size_t want = h.layout == Layout::coordinate ? 3 : 2;
  if (size.size() != want) rd.fail("size line needs " + std::to_string(want) + " integers");
  const long long rows = parse_index(rd, size[0]);
  const long long cols = parse_index(rd, size[1]);
  if (rows < 0 || cols < 0) rd.fail("negative dimension");
  if (h.symmetry != Symmetry::general && rows != cols) rd.fail("symmetric storage needs a square matrix");

  Mat<Scalar> m = Mat<Scalar>::Zero(rows, cols);
  auto place = [&](long long i, long long j, Scalar v) {
    m(i, j) = v;
    if (i == j) return;
    switch (h.symmetry) {
      case Symmetry::general: break;
      case Symmetry::symmetric: m(j, i) = v; break;
      case Symmetry::skew: m(j, i) = -v; break;
      case Symmetry::hermitian: m(j, i) = conj_of(v); break;
    }
  };
  auto read_value = [&](const std::vector<std::string>& t, std::size_t at) {
    const double re = parse_value(rd, t[at]);
    const double im = per_entry == 2 ? parse_value(rd, t[at + 1]) : 0.0;
    return make_value<Scalar>(re, im);
  };

  if (h.layout == Layout::coordinate) {
    const long long nnz = parse_index(rd, size[2]);
    if (nnz < 0) rd.fail("negative entry count");
    for (long long e = 0; e < nnz; ++e) {
      if (!rd.next(line)) rd.fail("unexpected end of file after " + std::to_string(e) + " of " +
                                  std::to_string(nnz) + " entries");
      const auto t = tokens(line);
      if (t.size() != std::size_t(2 + per_entry)) rd.fail("malformed entry");
      const long long i = parse_index(rd, t[0]) - 1;
      const long long j = parse_index(rd, t[1]) - 1;
      if (i < 0 || i >= rows || j < 0 || j >= cols) rd.fail("index out of range");
      if (h.symmetry == Symmetry::skew && i == j) rd.fail("skew-symmetric storage excludes the diagonal");
      place(i, j, read_value(t, 2));
    }
  } else {
    // column-major; symmetric layouts list the lower triangle only
    for (long long j = 0; j < cols; ++j) {
      const long long first = h.symmetry == Symmetry::general ? 0
                              : h.symmetry == Symmetry::skew  ? j + 1
                                                              : j;
      for (long long i = first; i < rows; ++i) {
        if (!rd.next(line)) rd.fail("unexpected end of file in array data");
        const auto t = tokens(line);
        if (t.size() != std::size_t(per_entry)) rd.fail("malformed array entry");
        place(i, j, read_value(t, 0));
      }
    }
  }
  if (rd.next(line)) rd.fail("trailing data after the last entry");
  return m;
}

template <typename Scalar>
Mat<Scalar> load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read<Scalar>(in, path);
}

}  // namespace mm

/// Real general, symmetric or skew-symmetric data in coordinate or array layout.
inline MatrixR load_matrix_market(const std::string& path) { return mm::load<double>(path); }

/// Same as load_matrix_market, plus complex and hermitian files.
inline MatrixC load_matrix_market_complex(const std::string& path) { return mm::load<Complex>(path); }

inline MatrixR read_matrix_market(std::istream& in, const std::string& source = "<stream>") {
  return mm::read<double>(in, source);
}

inline MatrixC read_matrix_market_complex(std::istream& in, const std::string& source = "<stream>") {
  return mm::read<Complex>(in, source);
}

/// Array layout, general symmetry, 17 significant digits (exact round trip).
template <typename Scalar>
void write_matrix_market(std::ostream& out, const Mat<Scalar>& m) {
  constexpr bool kComplex = !std::is_same_v<Scalar, double>;
  out << "%%MatrixMarket matrix array " << (kComplex ? "complex" : "real") << " general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  char buf[80];
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if constexpr (kComplex) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", m(i, j).real(), m(i, j).imag());
      } else {
        std::snprintf(buf, sizeof buf, "%.17g\n", m(i, j));
      }
      out << buf;
    }
  }
}

template <typename Scalar>
void save_matrix_market(const std::string& path, const Mat<Scalar>& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_matrix_market(out, m);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace dsda
