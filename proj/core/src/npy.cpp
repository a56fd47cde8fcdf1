#include "segfuse/npy.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "segfuse/error.hpp"

namespace segfuse {

static_assert(std::endian::native == std::endian::little,
              "NPY payloads are read and written as little-endian host memory");

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreludeSize = 10;  // magic(6) + version(2) + header_len(2)
constexpr std::size_t kHeaderAlign = 64;

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    out += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) out += ",";
    if (i + 1 < shape.size()) out += " ";
  }
  out += ")";
  return out;
}

// Minimal reader for the Python dict literal in an NPY header.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  std::string_view value_of(std::string_view key) const {
    const std::string quoted = "'" + std::string(key) + "'";
    auto pos = text_.find(quoted);
    if (pos == std::string_view::npos) throw FormatError("npy header lacks key " + quoted);
    pos = text_.find(':', pos + quoted.size());
    if (pos == std::string_view::npos) throw FormatError("npy header: missing ':' after " + quoted);
    ++pos;
    while (pos < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos]))) ++pos;
    return text_.substr(pos);
  }

  std::string descr() const {
    auto v = value_of("descr");
    if (v.empty() || v.front() != '\'') throw FormatError("npy header: descr is not a string");
    auto end = v.find('\'', 1);
    if (end == std::string_view::npos) throw FormatError("npy header: unterminated descr");
    return std::string(v.substr(1, end - 1));
  }

  bool fortran_order() const {
    auto v = value_of("fortran_order");
    if (v.starts_with("False")) return false;
    if (v.starts_with("True")) return true;
    throw FormatError("npy header: fortran_order is not a bool");
  }

  std::vector<std::size_t> shape() const {
    auto v = value_of("shape");
    if (v.empty() || v.front() != '(') throw FormatError("npy header: shape is not a tuple");
    auto end = v.find(')');
    if (end == std::string_view::npos) throw FormatError("npy header: unterminated shape");
    std::vector<std::size_t> dims;
    std::size_t i = 1;
    while (i < end) {
      const char ch = v[i];
      if (std::isdigit(static_cast<unsigned char>(ch))) {
        std::size_t dim = 0;
        while (i < end && std::isdigit(static_cast<unsigned char>(v[i]))) {
          dim = dim * 10 + static_cast<std::size_t>(v[i] - '0');
          ++i;
        }
        dims.push_back(dim);
      } else if (ch == ',' || std::isspace(static_cast<unsigned char>(ch)) || ch == 'L') {
        ++i;
      } else {
        throw FormatError("npy header: bad character in shape");
      }
    }
    return dims;
  }

 private:
  std::string_view text_;
};

void require_rank(const NpyArray& a, std::initializer_list<std::size_t> ranks, const char* role) {
  for (auto r : ranks) {
    if (a.shape.size() == r) return;
  }
  std::ostringstream msg;
  msg << role << ": unexpected rank " << a.shape.size() << " (shape " << shape_string(a.shape) << ")";
  throw SchemaError(msg.str());
}

void require_dtype(const NpyArray& a, NpyDtype dtype, const char* role) {
  if (a.dtype != dtype) {
    throw SchemaError(std::string(role) + ": expected dtype " +
                      (dtype == NpyDtype::kFloat32 ? "<f4" : "|u1"));
  }
}

int checked_dim(std::size_t d, const char* role) {
  if (d == 0 || d > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw SchemaError(std::string(role) + ": dimension out of range");
  }
  return static_cast<int>(d);
}

}  // namespace

std::size_t NpyArray::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string encode_npy(const NpyArray& array) {
  if (array.shape.empty()) throw ValidationError("npy: rank-0 arrays are not supported");
  const std::size_t count = array.element_count();
  if (count == 0) throw ValidationError("npy: refusing to write zero-sized array " + shape_string(array.shape));
  const bool is_float = array.dtype == NpyDtype::kFloat32;
  if (is_float) {
    if (array.floats.size() != count) throw ValidationError("npy: payload size does not match shape");
    for (std::size_t i = 0; i < count; ++i) {
      if (!std::isfinite(array.floats[i])) {
        throw ValidationError("npy: non-finite value at flat index " + std::to_string(i));
      }
    }
  } else if (array.bytes.size() != count) {
    throw ValidationError("npy: payload size does not match shape");
  }

  std::string header = "{'descr': '";
  header += is_float ? "<f4" : "|u1";
  header += "', 'fortran_order': False, 'shape': " + shape_string(array.shape) + ", }";
  const std::size_t unpadded = kPreludeSize + header.size() + 1;
  const std::size_t padded = (unpadded + kHeaderAlign - 1) / kHeaderAlign * kHeaderAlign;
  header.append(padded - unpadded, ' ');
  header.push_back('\n');
  if (header.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("npy: header too long for format version 1.0");
  }

  std::string out(kMagic);
  out.push_back('\x01');
  out.push_back('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>(len >> 8));
  out += header;
  if (is_float) {
    out.append(reinterpret_cast<const char*>(array.floats.data()), count * sizeof(float));
  } else {
    out.append(reinterpret_cast<const char*>(array.bytes.data()), count);
  }
  return out;
}

NpyArray decode_npy(std::string_view file) {
  if (file.size() < kPreludeSize || file.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("npy: missing magic sequence");
  }
  const auto major = static_cast<unsigned char>(file[6]);
  const auto minor = static_cast<unsigned char>(file[7]);
  if (major != 1 || minor != 0) {
    throw FormatError("npy: unsupported format version " + std::to_string(major) + "." +
                      std::to_string(minor));
  }
  const std::size_t header_len = static_cast<unsigned char>(file[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(file[9])) << 8);
  if (file.size() < kPreludeSize + header_len) throw FormatError("npy: truncated header");
  const HeaderParser parser(file.substr(kPreludeSize, header_len));

  NpyArray out;
  const std::string descr = parser.descr();
  if (descr == "<f4") {
    out.dtype = NpyDtype::kFloat32;
  } else if (descr == "|u1" || descr == "<u1" || descr == "u1") {
    out.dtype = NpyDtype::kUInt8;
  } else {
    throw SchemaError("npy: unsupported dtype '" + descr + "'");
  }
  if (parser.fortran_order()) throw SchemaError("npy: Fortran-ordered arrays are not supported");
  out.shape = parser.shape();
  if (out.shape.empty()) throw SchemaError("npy: rank-0 arrays are not supported");

  const std::size_t count = out.element_count();
  const std::size_t elem = out.dtype == NpyDtype::kFloat32 ? sizeof(float) : 1;
  const std::string_view payload = file.substr(kPreludeSize + header_len);
  if (payload.size() != count * elem) {
    throw FormatError("npy: payload holds " + std::to_string(payload.size()) + " bytes, shape " +
                      shape_string(out.shape) + " needs " + std::to_string(count * elem));
  }
  if (out.dtype == NpyDtype::kFloat32) {
    out.floats.resize(count);
    std::memcpy(out.floats.data(), payload.data(), payload.size());
  } else {
    out.bytes.assign(payload.begin(), payload.end());
  }
  return out;
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  try {
    return decode_npy(contents);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_npy(const std::filesystem::path& path, const NpyArray& array) {
  const std::string bytes = encode_npy(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

NpyArray to_npy(const ProbTensor& t) {
  NpyArray a;
  a.dtype = NpyDtype::kFloat32;
  a.shape = {static_cast<std::size_t>(t.height()), static_cast<std::size_t>(t.width()),
             static_cast<std::size_t>(t.classes())};
  a.floats.assign(t.data().begin(), t.data().end());
  return a;
}

NpyArray to_npy(const LabelMask& m) {
  NpyArray a;
  a.dtype = NpyDtype::kUInt8;
  a.shape = {static_cast<std::size_t>(m.height()), static_cast<std::size_t>(m.width())};
  a.bytes.assign(m.data().begin(), m.data().end());
  return a;
}

NpyArray to_npy(const PriorField& p) {
  NpyArray a;
  a.dtype = NpyDtype::kFloat32;
  if (p.mode() == PriorMode::kGlobal) {
    a.shape = {static_cast<std::size_t>(p.classes())};
  } else {
    a.shape = {static_cast<std::size_t>(p.height()), static_cast<std::size_t>(p.width()),
               static_cast<std::size_t>(p.classes())};
  }
  a.floats.assign(p.data().begin(), p.data().end());
  return a;
}

ProbTensor prob_tensor_from_npy(const NpyArray& a) {
  require_dtype(a, NpyDtype::kFloat32, "probability tensor");
  require_rank(a, {3}, "probability tensor");
  return ProbTensor(checked_dim(a.shape[0], "probability tensor"),
                    checked_dim(a.shape[1], "probability tensor"),
                    checked_dim(a.shape[2], "probability tensor"), a.floats);
}

LabelMask label_mask_from_npy(const NpyArray& a) {
  require_dtype(a, NpyDtype::kUInt8, "label mask");
  require_rank(a, {2}, "label mask");
  return LabelMask(checked_dim(a.shape[0], "label mask"), checked_dim(a.shape[1], "label mask"),
                   a.bytes);
}

PriorField prior_field_from_npy(const NpyArray& a) {
  require_dtype(a, NpyDtype::kFloat32, "prior field");
  require_rank(a, {1, 3}, "prior field");
  PriorField out = a.shape.size() == 1
                       ? PriorField::global(checked_dim(a.shape[0], "prior field"), a.floats)
                       : PriorField::positional(checked_dim(a.shape[0], "prior field"),
                                                checked_dim(a.shape[1], "prior field"),
                                                checked_dim(a.shape[2], "prior field"), a.floats);
  out.check_row_sums();
  return out;
}

namespace {

template <typename T, typename Convert>
T read_typed(const std::filesystem::path& path, Convert convert) {
  const NpyArray a = read_npy(path);
  try {
    return convert(a);
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace

ProbTensor read_prob_tensor(const std::filesystem::path& path) {
  return read_typed<ProbTensor>(path, prob_tensor_from_npy);
}

LabelMask read_label_mask(const std::filesystem::path& path) {
  return read_typed<LabelMask>(path, label_mask_from_npy);
}

PriorField read_prior_field(const std::filesystem::path& path) {
  return read_typed<PriorField>(path, prior_field_from_npy);
}

void write_tensor(const ProbTensor& tensor, const std::filesystem::path& path) {
  write_npy(path, to_npy(tensor));
}

void write_tensor(const LabelMask& mask, const std::filesystem::path& path) {
  write_npy(path, to_npy(mask));
}

void write_tensor(const PriorField& priors, const std::filesystem::path& path) {
  write_npy(path, to_npy(priors));
}

void write_heatmap(const std::filesystem::path& path, int height, int width,
                   std::span<const double> values) {
  NpyArray a;
  a.dtype = NpyDtype::kFloat32;
  a.shape = {static_cast<std::size_t>(height), static_cast<std::size_t>(width)};
  a.floats.assign(values.begin(), values.end());
  write_npy(path, a);
}

}  // namespace segfuse
