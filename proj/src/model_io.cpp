#include "dropwatch/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "dropwatch/error.hpp"

namespace dropwatch {

namespace {

constexpr char kMagic[8] = {'D', 'W', 'M', 'O', 'D', 'E', 'L', '\0'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error("model file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::uint64_t n) {
    if (n > (data_.size() - pos_) / 8) throw Error("model file truncated");
    std::vector<double> out(n);
    for (double& v : out) v = f64();
    return out;
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const Predictor& model,
                                          const std::optional<NormalizationParams>& norm) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.kind()));
  w.u32(norm ? 1 : 0);
  if (norm) {
    w.f64(norm->min);
    w.f64(norm->max);
  }
  switch (model.kind()) {
    case ModelKind::baseline: {
      w.f64(static_cast<const BaselineModel&>(model).threshold());
      break;
    }
    case ModelKind::fourier: {
      const auto& m = static_cast<const FourierModel&>(model);
      w.i64(m.period_points());
      w.u64(m.harmonics());
      w.f64s(m.amplitudes());
      w.f64s(m.phases());
      break;
    }
    case ModelKind::mlp: {
      const auto& m = static_cast<const MlpModel&>(model);
      w.u32(m.features().use_derivative ? 1 : 0);
      w.u64(m.widths().size());
      for (std::size_t width : m.widths()) w.u64(width);
      w.u64(m.params().size());
      w.f64s(m.params());
      break;
    }
  }
  return w.take();
}

ModelFile deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (std::memcmp(r.bytes(sizeof kMagic).data(), kMagic, sizeof kMagic) != 0) {
    throw Error("not a model file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error("unsupported model format version " + std::to_string(version));
  }
  const std::uint32_t kind = r.u32();
  ModelFile file;
  const std::uint32_t has_norm = r.u32();
  if (has_norm > 1) throw Error("model file: bad normalization flag");
  if (has_norm) {
    NormalizationParams p;
    p.min = r.f64();
    p.max = r.f64();
    file.normalization = p;
  }
  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::baseline:
      file.model = std::make_unique<BaselineModel>(r.f64());
      break;
    case ModelKind::fourier: {
      const std::int64_t period = r.i64();
      const std::uint64_t h = r.u64();
      auto amps = r.f64s(h + 1);
      auto phases = r.f64s(h + 1);
      file.model = std::make_unique<FourierModel>(period, std::move(amps), std::move(phases));
      break;
    }
    case ModelKind::mlp: {
      FeatureConfig features{r.u32() != 0};
      const std::uint64_t n = r.u64();
      if (n > 4096) throw Error("model file: implausible layer count");
      std::vector<std::size_t> widths(n);
      for (auto& w : widths) w = r.u64();
      auto params = r.f64s(r.u64());
      file.model = std::make_unique<MlpModel>(std::move(widths), std::move(params), features);
      break;
    }
    default:
      throw Error("model file: unknown model kind " + std::to_string(kind));
  }
  if (!r.at_end()) throw Error("model file has trailing bytes");
  return file;
}

void save_model(const std::string& path, const Predictor& model,
                const std::optional<NormalizationParams>& norm) {
  const auto bytes = serialize_model(model, norm);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace dropwatch
