#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace synapse {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raw IDX tensor (big-endian header already decoded).
struct IdxTensor {
    std::vector<std::size_t> dims;
    std::vector<std::uint8_t> data;
};

/// Reads an IDX file, transparently inflating gzip. Validates the
/// magic number (0x803 images / 0x801 labels), dimension header and
/// payload length; throws DataError with a specific message otherwise.
IdxTensor load_idx(const std::filesystem::path& path);

/// 28x28 intensities in [0,1] -> 14x14, non-overlapping 2x2 max.
std::vector<double> maxpool_2x2(std::span<const double> image28);

/// Strict threshold: pixel -> 1 iff intensity > 0.5.
std::vector<std::uint8_t> binarize(std::span<const double> image);

/// 14x14 binary images for the full task: the 60k training-file
/// images followed by the 10k test-file images, with a seeded
/// 50k/10k train/validation split of the former.
struct BinarizedDataset {
    std::size_t input_dim = 0;
    std::vector<std::uint8_t> pixels;  ///< image-major, input_dim per image
    std::vector<std::uint8_t> labels;
    std::vector<std::uint32_t> train_indices;
    std::vector<std::uint32_t> validation_indices;
    std::vector<std::uint32_t> test_indices;
    std::uint64_t split_seed = 0;

    std::size_t image_count() const { return labels.size(); }
    std::span<const std::uint8_t> image(std::size_t i) const {
        return {pixels.data() + i * input_dim, input_dim};
    }
};

/// Seeded permutation split of n images: first `train` go to the
/// training set, the remainder to validation.
void split_train_validation(BinarizedDataset& ds, std::uint64_t seed,
                            std::size_t train = 50000,
                            std::size_t validation = 10000);

/// The hardware-verification subset: the first n test images in file
/// order.
std::vector<std::uint32_t> test_subset_first(const BinarizedDataset& ds,
                                             std::size_t n = 600);

/// Canonical file basenames looked up in the data directory (also
/// with a .gz suffix).
extern const char* const kMnistFiles[4];

/// Full pipeline: load the four IDX files from data_dir, normalize,
/// maxpool, binarize, split. Missing files raise a DataError naming
/// exactly what was expected.
BinarizedDataset build_dataset(const std::filesystem::path& data_dir,
                               std::uint64_t split_seed);

/// Versioned, endian-fixed, bit-packed cache of a built dataset.
void save_dataset_cache(const std::filesystem::path& path,
                        const BinarizedDataset& ds);
BinarizedDataset load_dataset_cache(const std::filesystem::path& path);

BinarizedDataset load_or_build(const std::filesystem::path& data_dir,
                               const std::filesystem::path& cache_path,
                               std::uint64_t split_seed);

/// Downloads the canonical archives into data_dir and verifies their
/// md5 checksums. Requires network access; pre-placing the files makes
/// this unnecessary.
void fetch_mnist(const std::filesystem::path& data_dir);

/// md5 hex digest of a file (checksum recording in run manifests).
std::string md5_file(const std::filesystem::path& path);

}  // namespace synapse
