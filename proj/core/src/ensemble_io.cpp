#include "kdvlab/ensemble_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "kdvlab/errors.hpp"

namespace kdvlab {
namespace {

constexpr char kMagic[4] = {'K', 'D', 'V', 'E'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 8 + 1;

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(value) >> (8 * i)));
  }
}

void put_f64(std::vector<std::uint8_t>& out, double value) {
  put(out, std::bit_cast<std::uint64_t>(value));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated ensemble file");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_ensemble(const WeightedEnsemble& ens) {
  const std::size_t m = ens.cutoff();
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderSize + ens.size() * (8 + 16 * m));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kEnsembleFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m));
  put<std::uint64_t>(out, ens.size());
  put<std::uint8_t>(out, ens.provenance().resampled ? 1 : 0);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    put_f64(out, ens.weight(i));
    for (const Complex& c : ens.sample(i).amplitudes()) {
      put_f64(out, c.real());
      put_f64(out, c.imag());
    }
  }
  return out;
}

WeightedEnsemble decode_ensemble(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a KDVE ensemble file");
  }
  Reader r(bytes);
  r.get<std::uint32_t>();  // magic
  const auto version = r.get<std::uint32_t>();
  if (version != kEnsembleFormatVersion) {
    throw FormatError("unsupported KDVE version " + std::to_string(version));
  }
  const auto m = r.get<std::uint32_t>();
  const auto n = r.get<std::uint64_t>();
  const auto flags = r.get<std::uint8_t>();
  if (m == 0 || n == 0) throw FormatError("KDVE file declares an empty ensemble");
  if (r.remaining() / (8 + 16 * static_cast<std::uint64_t>(m)) < n ||
      r.remaining() != n * (8 + 16 * static_cast<std::uint64_t>(m))) {
    throw FormatError("KDVE payload size does not match its header");
  }
  std::vector<TorusField> samples;
  std::vector<double> weights;
  samples.reserve(n);
  weights.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    weights.push_back(r.get_f64());
    std::vector<Complex> modes(m);
    for (auto& c : modes) {
      const double re = r.get_f64();
      c = Complex(re, r.get_f64());
    }
    samples.emplace_back(std::move(modes));
  }
  Provenance prov{"file", 0, (flags & 1u) != 0};
  try {
    return WeightedEnsemble(std::move(samples), std::move(weights), {}, prov);
  } catch (const ContractError& e) {
    throw FormatError(std::string("invalid KDVE contents: ") + e.what());
  }
}

void write_ensemble(const std::filesystem::path& path, const WeightedEnsemble& ens) {
  const auto bytes = encode_ensemble(ens);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

WeightedEnsemble read_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_ensemble(bytes);
}

}  // namespace kdvlab
