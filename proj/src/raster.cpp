#include "acdkit/raster.hpp"

#include "acdkit/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace acdkit {

namespace fs = std::filesystem;

std::string to_string(const Dims& d) {
  return std::to_string(d.width) + "x" + std::to_string(d.height);
}

Raster::Raster(Eigen::Index width, Eigen::Index height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorKind::InvalidArgument, "raster dimensions must be >= 1");
  }
  pixels_ = ImageF::Zero(height, width);
}

Raster::Raster(Eigen::Index width, Eigen::Index height, std::span<const float> data)
    : Raster(width, height) {
  if (static_cast<Eigen::Index>(data.size()) != width * height) {
    throw Error(ErrorKind::DimensionMismatch,
                "data length " + std::to_string(data.size()) + " != " +
                    std::to_string(width * height));
  }
  std::copy(data.begin(), data.end(), pixels_.data());
}

Raster::Raster(ImageF pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rows() < 1 || pixels_.cols() < 1) {
    throw Error(ErrorKind::InvalidArgument, "raster dimensions must be >= 1");
  }
}

bool Raster::identical(const Raster& other) const {
  return dims() == other.dims() &&
         std::memcmp(pixels_.data(), other.pixels_.data(),
                     sizeof(float) * static_cast<std::size_t>(pixels_.size())) == 0;
}

CoregisteredPair make_pair(Raster a, Raster b) {
  if (a.dims() != b.dims()) {
    throw Error(ErrorKind::DimensionMismatch,
                "t0 is " + to_string(a.dims()) + ", t1 is " + to_string(b.dims()));
  }
  return {std::move(a), std::move(b)};
}

GroundTruth::GroundTruth(Mask inner, Mask outer)
    : inner_(std::move(inner)), outer_(std::move(outer)) {
  if (inner_.rows() != outer_.rows() || inner_.cols() != outer_.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "inner and outer masks differ in size");
  }
  if ((inner_ && !outer_).any()) {
    throw Error(ErrorKind::MaskInconsistent, "inner mask is not contained in outer mask");
  }
}

namespace {

fs::path stem_of(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".json" || ext == ".r32") {
    auto p = path;
    return p.replace_extension();
  }
  return path;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

}  // namespace

fs::path r32_header_path(const fs::path& path) {
  auto p = stem_of(path);
  p += ".json";
  return p;
}

fs::path r32_payload_path(const fs::path& path) {
  auto p = stem_of(path);
  p += ".r32";
  return p;
}

Raster load_raster(const fs::path& path) {
  const auto header_path = r32_header_path(path);
  const auto payload_path = r32_payload_path(path);
  for (const auto& p : {header_path, payload_path}) {
    if (!fs::exists(p)) throw Error(ErrorKind::NotFound, p.string());
  }

  nlohmann::json header;
  {
    std::ifstream in(header_path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + header_path.string());
    header = nlohmann::json::parse(in, nullptr, false);
  }
  if (header.is_discarded() || !header.is_object()) {
    throw Error(ErrorKind::FormatError, header_path.string() + ": header is not a JSON object");
  }
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!header.contains(key)) {
      throw Error(ErrorKind::FormatError, header_path.string() + ": missing \"" + key + "\"");
    }
    return header[key];
  };
  if (field("magic") != "R32") throw Error(ErrorKind::FormatError, "bad magic");
  if (field("dtype") != "f32le") throw Error(ErrorKind::FormatError, "unsupported dtype");
  if (field("order") != "row-major") throw Error(ErrorKind::FormatError, "unsupported order");
  const auto& w = field("width");
  const auto& h = field("height");
  if (!w.is_number_unsigned() || !h.is_number_unsigned() || w.get<std::int64_t>() < 1 ||
      h.get<std::int64_t>() < 1) {
    throw Error(ErrorKind::FormatError, "width/height must be positive integers");
  }
  const auto width = w.get<Eigen::Index>();
  const auto height = h.get<Eigen::Index>();

  std::ifstream in(payload_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + payload_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto expected = static_cast<std::size_t>(width * height) * sizeof(float);
  if (bytes.size() != expected) {
    throw Error(ErrorKind::FormatError, payload_path.string() + ": payload is " +
                                            std::to_string(bytes.size()) + " bytes, expected " +
                                            std::to_string(expected));
  }

  ImageF pixels(height, width);
  float* out = pixels.data();
  for (Eigen::Index i = 0; i < pixels.size(); ++i) {
    std::uint32_t word;
    std::memcpy(&word, bytes.data() + i * sizeof(float), sizeof(word));
    const auto value = std::bit_cast<float>(to_le(word));
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::FormatError,
                  payload_path.string() + ": non-finite value at index " + std::to_string(i));
    }
    out[i] = value;
  }
  return Raster(std::move(pixels));
}

void save_raster(const Raster& raster, const fs::path& path) {
  const auto header_path = r32_header_path(path);
  const auto payload_path = r32_payload_path(path);

  nlohmann::ordered_json header = {{"magic", "R32"},
                                   {"width", raster.width()},
                                   {"height", raster.height()},
                                   {"dtype", "f32le"},
                                   {"order", "row-major"}};
  {
    std::ofstream out(header_path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + header_path.string());
    out << header.dump() << '\n';
    if (!out) throw Error(ErrorKind::IoError, "write failed: " + header_path.string());
  }

  std::vector<char> bytes(raster.data().size() * sizeof(float));
  std::size_t offset = 0;
  for (float v : raster.data()) {
    const auto word = to_le(std::bit_cast<std::uint32_t>(v));
    std::memcpy(bytes.data() + offset, &word, sizeof(word));
    offset += sizeof(word);
  }
  std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + payload_path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + payload_path.string());
}

Mask mask_from_raster(const Raster& raster) {
  const auto& px = raster.pixels();
  if (!(px == 0.0f || px == 1.0f).all()) {
    throw Error(ErrorKind::FormatError, "mask values must be exactly 0 or 1");
  }
  return px == 1.0f;
}

Raster raster_from_mask(const Mask& mask) {
  return Raster(mask.cast<float>().eval());
}

Mask load_mask(const fs::path& path) { return mask_from_raster(load_raster(path)); }

void save_mask(const Mask& mask, const fs::path& path) {
  save_raster(raster_from_mask(mask), path);
}

GroundTruth load_ground_truth(const fs::path& inner_path,
                              const std::optional<fs::path>& outer_path, const Dims& grid) {
  Mask inner = load_mask(inner_path);
  Mask outer = outer_path ? load_mask(*outer_path) : inner;
  for (const auto* m : {&inner, &outer}) {
    const Dims d{m->cols(), m->rows()};
    if (d != grid) {
      throw Error(ErrorKind::DimensionMismatch,
                  "mask is " + to_string(d) + ", rasters are " + to_string(grid));
    }
  }
  return GroundTruth(std::move(inner), std::move(outer));
}

}  // namespace acdkit
