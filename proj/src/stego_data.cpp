#include "scf/stego_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "scf/error.hpp"
#include "scf/parallel.hpp"

namespace scf {

namespace {
constexpr std::uint64_t kCoverStream = 1;
constexpr std::uint64_t kEmbedStream = 2;
constexpr std::uint64_t kSplitStream = 3;
constexpr std::uint8_t kDatasetVersion = 1;
}  // namespace

void DatasetConfig::validate() const {
  if (n_pairs < 10) throw InvalidArgument("n_pairs must be at least 10");
  if (!(payload > 0.0 && payload <= 1.0)) throw InvalidArgument("payload must be in (0, 1]");
  if (image_size < 8 || image_size > 65535) throw InvalidArgument("image_size must be in [8, 65535]");
  if (blur_radius < 0) throw InvalidArgument("blur_radius must be non-negative");
  if (blur_passes < 1) throw InvalidArgument("blur_passes must be at least 1");
}

std::size_t changed_pixel_count(double payload, std::size_t pixels) {
  // The small slack keeps e.g. 0.1 * 100 from rounding up to 11.
  const double exact = payload * static_cast<double>(pixels);
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(k, 1, pixels);
}

ImageSample gen_cover(const DatasetConfig& cfg, Rng& rng) {
  const int n = cfg.image_size;
  const int r = cfg.blur_radius;
  int side = n + 2 * r * cfg.blur_passes;
  std::vector<double> field(static_cast<std::size_t>(side) * side);
  for (double& v : field) v = rng.gaussian();

  // Each pass is a valid-mode box average, shrinking the field by 2r.
  const double inv = 1.0 / static_cast<double>((2 * r + 1) * (2 * r + 1));
  for (int pass = 0; pass < cfg.blur_passes && r > 0; ++pass) {
    const int out_side = side - 2 * r;
    std::vector<double> next(static_cast<std::size_t>(out_side) * out_side);
    for (int y = 0; y < out_side; ++y) {
      for (int x = 0; x < out_side; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy <= 2 * r; ++dy) {
          for (int dx = 0; dx <= 2 * r; ++dx) acc += field[(y + dy) * side + (x + dx)];
        }
        next[y * out_side + x] = acc * inv;
      }
    }
    field = std::move(next);
    side = out_side;
  }
  std::vector<double> blurred(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) blurred[y * n + x] = field[y * side + x];
  }

  const auto [lo, hi] = std::minmax_element(blurred.begin(), blurred.end());
  const double mn = *lo;
  const double span = *hi - *lo;
  ImageSample img{n, n, std::vector<std::uint8_t>(blurred.size()), 0, 0};
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    const double v = span > 0.0 ? (blurred[i] - mn) / span * 255.0 : 128.0;
    img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return img;
}

ImageSample embed_pm1(const ImageSample& cover, double payload, Rng& rng) {
  if (!(payload > 0.0 && payload <= 1.0)) throw InvalidArgument("payload must be in (0, 1]");
  ImageSample stego = cover;
  stego.label = 1;
  const std::size_t pixels = cover.pixels.size();
  const std::size_t k = changed_pixel_count(payload, pixels);

  std::vector<std::size_t> order(pixels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(pixels - i);
    std::swap(order[i], order[j]);
    auto& px = stego.pixels[order[i]];
    const bool up = rng.uniform() < 0.5;
    if (px == 0) {
      px = 1;
    } else if (px == 255) {
      px = 254;
    } else {
      px = static_cast<std::uint8_t>(up ? px + 1 : px - 1);
    }
  }
  return stego;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

const std::vector<std::uint32_t>& DatasetSplits::operator[](Split s) const {
  switch (s) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

DatasetSplits split_pairs(std::size_t n_pairs, std::uint64_t seed) {
  if (n_pairs < 10) throw InvalidArgument("n_pairs must be at least 10");
  std::vector<std::uint32_t> ids(n_pairs);
  std::iota(ids.begin(), ids.end(), 0u);
  Rng rng = Rng(seed).derive(kSplitStream);
  for (std::size_t i = n_pairs - 1; i > 0; --i) std::swap(ids[i], ids[rng.uniform_index(i + 1)]);

  const std::size_t n_train = n_pairs * 6 / 10;
  const std::size_t n_val = n_pairs / 10;
  DatasetSplits s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
               ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<std::size_t> Dataset::split_indices(Split s) const {
  std::vector<std::size_t> out;
  const auto& ids = splits[s];
  out.reserve(ids.size() * 2);
  for (std::uint32_t id : ids) {
    out.push_back(2 * static_cast<std::size_t>(id));
    out.push_back(2 * static_cast<std::size_t>(id) + 1);
  }
  return out;
}

std::pair<ImageSample, ImageSample> generate_pair(const DatasetConfig& cfg, std::size_t k) {
  const Rng root(cfg.seed);
  Rng cover_rng = root.derive(kCoverStream).derive(k);
  Rng embed_rng = root.derive(kEmbedStream).derive(k);
  ImageSample cover = gen_cover(cfg, cover_rng);
  cover.pair_id = static_cast<std::uint32_t>(k);
  ImageSample stego = embed_pm1(cover, cfg.payload, embed_rng);
  return {std::move(cover), std::move(stego)};
}

Dataset build_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.config = cfg;
  ds.images.resize(2 * cfg.n_pairs);
  parallel_for(cfg.n_pairs, [&](std::size_t k) {
    auto [cover, stego] = generate_pair(cfg, k);
    ds.images[2 * k] = std::move(cover);
    ds.images[2 * k + 1] = std::move(stego);
  });
  ds.splits = split_pairs(cfg.n_pairs, cfg.seed);
  return ds;
}

Matrix images_matrix(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) return {};
  const std::size_t pixels = ds.images[indices[0]].pixels.size();
  Matrix m(indices.size(), pixels);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& img = ds.images.at(indices[r]);
    if (img.pixels.size() != pixels) throw InvalidArgument("images_matrix: mixed image sizes");
    auto row = m.row(r);
    for (std::size_t i = 0; i < pixels; ++i) row[i] = img.pixels[i] / 255.0;
  }
  return m;
}

std::vector<Label> labels_of(const Dataset& ds, std::span<const std::size_t> indices) {
  std::vector<Label> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(ds.images.at(i).label);
  return out;
}

std::vector<unsigned char> encode_dataset(const Dataset& ds) {
  const auto n = static_cast<std::uint16_t>(ds.config.image_size);
  detail::ByteWriter w;
  w.tag("SCFD");
  w.u8(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(ds.images.size()));
  w.u16(n);
  w.u16(n);
  w.u8(static_cast<std::uint8_t>(std::lround(ds.config.payload * 100.0)));
  w.u64(ds.config.seed);
  for (const auto& img : ds.images) {
    w.u32(img.pair_id);
    w.u8(static_cast<std::uint8_t>(img.label));
    w.raw(img.pixels);
  }
  w.seal();
  return w.take();
}

Dataset decode_dataset(std::span<const unsigned char> bytes) {
  const std::string what = "dataset";
  detail::ByteReader r(detail::open_sealed(bytes, "SCFD", kDatasetVersion, what), what);
  const std::uint32_t count = r.u32("image count");
  const std::uint16_t h = r.u16("height");
  const std::uint16_t w = r.u16("width");
  const std::uint8_t payload = r.u8("payload");
  const std::uint64_t seed = r.u64("seed");
  if (h != w) r.fail("width", "images must be square");
  if (h < 8) r.fail("height", std::to_string(h));
  if (payload == 0 || payload > 100) r.fail("payload", std::to_string(payload));
  if (count % 2 != 0 || count / 2 < 10) r.fail("image count", std::to_string(count));

  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  if (r.remaining() != count * (pixels + 5)) {
    r.fail("image count", std::to_string(count) + " images do not match the body size");
  }

  Dataset ds;
  ds.config.n_pairs = count / 2;
  ds.config.image_size = h;
  ds.config.payload = payload / 100.0;
  ds.config.blur_radius = -1;
  ds.config.blur_passes = -1;
  ds.config.seed = seed;
  ds.images.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& img = ds.images[i];
    img.height = h;
    img.width = w;
    img.pair_id = r.u32("pair_id");
    const std::uint8_t label = r.u8("label");
    if (label > 1) r.fail("label", std::to_string(label));
    img.label = label;
    if (img.pair_id != i / 2 || label != i % 2) r.fail("pair layout", "image " + std::to_string(i));
    const auto px = r.raw(pixels, "pixels");
    img.pixels.assign(px.begin(), px.end());
  }
  ds.splits = split_pairs(ds.config.n_pairs, seed);
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  detail::write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(detail::read_file(path));
}

}  // namespace scf
