#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "scf/matrix.hpp"
#include "scf/rng.hpp"
#include "scf/rss.hpp"

namespace scf {

struct ImageSample {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
  Label label = 0;                   // 0 = cover, 1 = stego
  std::uint32_t pair_id = 0;         // links a stego to its cover

  friend bool operator==(const ImageSample&, const ImageSample&) = default;
};

struct DatasetConfig {
  std::size_t n_pairs = 2000;
  int image_size = 16;
  double payload = 0.4;   // fraction of pixels changed by +-1
  int blur_radius = 2;    // box blur half-width; -1 when unknown (loaded from file)
  int blur_passes = 2;    // box blur repetitions; -1 when unknown
  std::uint64_t seed = 1;

  void validate() const;
};

/// Number of pixels the embedder changes: ceil(payload * pixels).
std::size_t changed_pixel_count(double payload, std::size_t pixels);

/// Smooth synthetic cover: i.i.d. Gaussian field, box-blurred blur_passes
/// times with the given radius, affinely stretched to span [0, 255] and
/// rounded. The field is generated with a margin so every pass is a full
/// (unpadded) average.
ImageSample gen_cover(const DatasetConfig& cfg, Rng& rng);

/// +-1 embedding at ceil(payload * H * W) distinct uniformly chosen pixels.
/// Pixels at 0 always move up and pixels at 255 always move down.
ImageSample embed_pm1(const ImageSample& cover, double payload, Rng& rng);

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct DatasetSplits {
  std::vector<std::uint32_t> train, val, test;  // pair ids, ascending
  const std::vector<std::uint32_t>& operator[](Split s) const;
  friend bool operator==(const DatasetSplits&, const DatasetSplits&) = default;
};

/// Seeded 6:1:3 partition of pair ids 0..n_pairs-1.
DatasetSplits split_pairs(std::size_t n_pairs, std::uint64_t seed);

// Images are stored pairwise: index 2k is cover k, index 2k+1 its stego.
struct Dataset {
  DatasetConfig config;
  std::vector<ImageSample> images;
  DatasetSplits splits;

  std::size_t pair_count() const noexcept { return images.size() / 2; }
  /// Image indices of a split, cover then stego for each pair id.
  std::vector<std::size_t> split_indices(Split s) const;
};

/// The cover and stego of pair k, regenerated on their own derived streams.
std::pair<ImageSample, ImageSample> generate_pair(const DatasetConfig& cfg, std::size_t k);

Dataset build_dataset(const DatasetConfig& cfg);

/// Pixels of the selected images scaled to [0, 1], one image per row.
Matrix images_matrix(const Dataset& ds, std::span<const std::size_t> indices);
std::vector<Label> labels_of(const Dataset& ds, std::span<const std::size_t> indices);

/// "SCFD" v1: u32 image count, u16 height, u16 width, u8 payload*100, u64
/// seed; per image u32 pair_id, u8 label, H*W pixels; trailing CRC-32 of all
/// preceding bytes. All integers little-endian.
std::vector<unsigned char> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const unsigned char> bytes);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace scf
