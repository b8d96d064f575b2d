#include "specmatch/io.hpp"

#include <array>
#include <cctype>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "specmatch/errors.hpp"

namespace specmatch {

namespace {

constexpr std::array<char, 4> kMagic{'S', 'P', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxDims = 8;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                              static_cast<char>((v >> 16) & 0xFF),
                              static_cast<char>((v >> 24) & 0xFF)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in, const char* what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw ParseError(std::string("SPMT: truncated ") + what);
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

float checked_float(double v) {
  const auto f = static_cast<float>(v);
  if (!std::isfinite(f)) throw DomainError("value not representable as finite float32");
  return f;
}

}  // namespace

void write_spmt(std::ostream& out, const SpmtTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > kMaxDims) {
    throw SizeError("SPMT: ndim must be in 1..8");
  }
  std::size_t count = 1;
  for (auto d : tensor.dims) {
    if (d == 0) throw SizeError("SPMT: zero-length dimension");
    count *= d;
  }
  if (count != tensor.values.size()) throw SizeError("SPMT: payload does not match dims");
  out.write(kMagic.data(), 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_u32(out, d);
  for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

SpmtTensor read_spmt(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw ParseError("SPMT: bad magic");
  if (const auto version = get_u32(in, "version"); version != kVersion) {
    throw ParseError("SPMT: unsupported version " + std::to_string(version));
  }
  const auto ndim = get_u32(in, "ndim");
  if (ndim == 0 || ndim > kMaxDims) throw ParseError("SPMT: ndim must be in 1..8");
  SpmtTensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = get_u32(in, "dims");
    if (d == 0) throw ParseError("SPMT: zero-length dimension");
    count *= d;
    if (count > (std::uint64_t{1} << 32)) throw ParseError("SPMT: tensor too large");
    t.dims.push_back(d);
  }
  t.values.resize(static_cast<std::size_t>(count));
  for (auto& v : t.values) {
    v = std::bit_cast<float>(get_u32(in, "payload"));
    if (!std::isfinite(v)) throw ParseError("SPMT: non-finite payload value");
  }
  return t;
}

void save_spmt(const std::filesystem::path& path, const SpmtTensor& tensor) {
  auto out = open_out(path);
  write_spmt(out, tensor);
  finish(out, path);
}

SpmtTensor load_spmt(const std::filesystem::path& path) {
  auto in = open_in(path);
  SpmtTensor t = read_spmt(in);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("SPMT: trailing bytes after payload");
  return t;
}

SpmtTensor to_spmt(const Field2D& field) {
  SpmtTensor t;
  t.dims = {static_cast<std::uint32_t>(field.channels()), static_cast<std::uint32_t>(field.height()),
            static_cast<std::uint32_t>(field.width())};
  t.values.reserve(field.size());
  for (double v : field.data()) t.values.push_back(checked_float(v));
  return t;
}

SpmtTensor to_spmt(const TokenMatrix& tokens) {
  SpmtTensor t;
  if (tokens.grid()) {
    t.dims = {static_cast<std::uint32_t>(tokens.grid()->height),
              static_cast<std::uint32_t>(tokens.grid()->width),
              static_cast<std::uint32_t>(tokens.dims())};
  } else {
    t.dims = {static_cast<std::uint32_t>(tokens.tokens()), static_cast<std::uint32_t>(tokens.dims())};
  }
  t.values.reserve(tokens.values().size());
  for (double v : tokens.values()) t.values.push_back(checked_float(v));
  return t;
}

Field2D field_from_spmt(const SpmtTensor& tensor) {
  std::vector<double> data(tensor.values.begin(), tensor.values.end());
  if (tensor.dims.size() == 2) return Field2D(1, tensor.dims[0], tensor.dims[1], std::move(data));
  if (tensor.dims.size() == 3) {
    return Field2D(tensor.dims[0], tensor.dims[1], tensor.dims[2], std::move(data));
  }
  throw SizeError("SPMT: a field needs dims (H, W) or (C, H, W), got ndim " +
                  std::to_string(tensor.dims.size()));
}

TokenMatrix tokens_from_spmt(const SpmtTensor& tensor) {
  std::vector<double> data(tensor.values.begin(), tensor.values.end());
  if (tensor.dims.size() == 2) return TokenMatrix(tensor.dims[0], tensor.dims[1], std::move(data));
  if (tensor.dims.size() == 3) {
    const GridShape grid{tensor.dims[0], tensor.dims[1]};
    return TokenMatrix(grid.height * grid.width, tensor.dims[2], std::move(data), grid);
  }
  throw SizeError("SPMT: tokens need dims (T, D) or (h, w, D), got ndim " +
                  std::to_string(tensor.dims.size()));
}

Field2D load_pgm(const std::filesystem::path& path) {
  auto in = open_in(path);
  auto next_token = [&]() {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw ParseError("PGM: truncated header");
    return tok;
  };
  if (next_token() != "P5") throw ParseError("PGM: only binary P5 is supported");
  std::size_t w = 0, h = 0;
  unsigned maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = static_cast<unsigned>(std::stoul(next_token()));
  } catch (const std::logic_error&) {
    throw ParseError("PGM: malformed header");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 255) {
    throw ParseError("PGM: need positive size and 8-bit maxval");
  }
  std::vector<unsigned char> raw(w * h);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw ParseError("PGM: truncated pixel data");
  }
  std::vector<double> data(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] > maxval) throw ParseError("PGM: sample exceeds maxval");
    data[i] = static_cast<double>(raw[i]) / static_cast<double>(maxval);
  }
  return Field2D(1, h, w, std::move(data));
}

Field2D load_field(const std::filesystem::path& path) {
  std::array<char, 2> head{};
  {
    auto in = open_in(path);
    in.read(head.data(), 2);
  }
  if (head[0] == 'P' && head[1] == '5') return load_pgm(path);
  return field_from_spmt(load_spmt(path));
}

void save_field(const std::filesystem::path& path, const Field2D& field) {
  save_spmt(path, to_spmt(field));
}

std::string format_g9(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.9g", v);
  return buf.data();
}

void write_psd_csv(std::ostream& out, const RadialPSD& psd) {
  out << "radius,power,count\n";
  for (std::size_t b = 0; b < psd.bins(); ++b) {
    out << format_g9(psd.radius[b]) << ',' << format_g9(psd.power[b]) << ',' << psd.count[b] << '\n';
  }
}

RadialPSD read_psd_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("PSD CSV: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "radius,power,count") throw ParseError("PSD CSV: expected header radius,power,count");
  RadialPSD psd;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c) ||
        c.find(',') != std::string::npos) {
      throw ParseError("PSD CSV: row " + std::to_string(row) + " needs three columns");
    }
    try {
      std::size_t used = 0;
      psd.radius.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument("radius");
      psd.power.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument("power");
      const auto n = std::stoll(c, &used);
      if (used != c.size() || n < 0) throw std::invalid_argument("count");
      psd.count.push_back(static_cast<std::size_t>(n));
    } catch (const std::logic_error&) {
      throw ParseError("PSD CSV: malformed number on row " + std::to_string(row));
    }
  }
  if (psd.bins() == 0) throw ParseError("PSD CSV: no rows");
  try {
    psd.validate();
  } catch (const std::exception& e) {
    throw ParseError(std::string("PSD CSV: ") + e.what());
  }
  return psd;
}

void save_psd_csv(const std::filesystem::path& path, const RadialPSD& psd) {
  auto out = open_out(path);
  write_psd_csv(out, psd);
  finish(out, path);
}

RadialPSD load_psd_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_psd_csv(in);
}

void write_gcurve_csv(std::ostream& out, const GCurve& curve) {
  out << "t,radius,snr,g\n";
  for (const auto& p : curve.points) {
    out << p.t << ',' << format_g9(p.radius) << ',' << format_g9(p.snr) << ',' << format_g9(p.g)
        << '\n';
  }
}

}  // namespace specmatch
