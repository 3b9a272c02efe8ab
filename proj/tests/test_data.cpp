#include <doctest.h>

#include <zlib.h>

#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "synapse/data.hpp"
#include "synapse/random.hpp"

using namespace synapse;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_images(const std::filesystem::path& path,
                      std::uint32_t count, std::uint32_t rows,
                      std::uint32_t cols,
                      const std::vector<std::uint8_t>& payload,
                      std::uint32_t magic = 0x803) {
    std::ofstream out(path, std::ios::binary);
    write_be32(out, magic);
    write_be32(out, count);
    write_be32(out, rows);
    write_be32(out, cols);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    write_be32(out, 0x801);
    write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

void gzip_file(const std::filesystem::path& src,
               const std::filesystem::path& dst) {
    std::ifstream in(src, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    gzFile gz = gzopen(dst.string().c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(gz);
}

std::filesystem::path mnist_dir() {
    if (const char* env = std::getenv("SYNAPSE_DATA_DIR")) return env;
    return "/root/mnist";
}

bool mnist_available() {
    const auto dir = mnist_dir();
    for (const char* const name : kMnistFiles)
        if (!std::filesystem::exists(dir / name) &&
            !std::filesystem::exists(dir / (std::string(name) + ".gz")))
            return false;
    return true;
}

}  // namespace

TEST_CASE("maxpool takes the block maximum") {
    std::vector<double> img(28 * 28, 0.0);
    // block (0,0): max 0.9 hidden at (1,1); block (6,3): single 0.4
    img[0 * 28 + 0] = 0.1;
    img[1 * 28 + 1] = 0.9;
    img[12 * 28 + 7] = 0.4;
    const auto pooled = maxpool_2x2(img);
    REQUIRE(pooled.size() == 196);
    CHECK(pooled[0] == 0.9);
    CHECK(pooled[6 * 14 + 3] == 0.4);
    double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    CHECK(total == doctest::Approx(0.9 + 0.4));
    CHECK_THROWS_AS(maxpool_2x2(std::vector<double>(27 * 27)),
                    std::invalid_argument);
}

TEST_CASE("binarize uses a strict 0.5 threshold") {
    const std::vector<double> img{0.0, 0.5, 0.5000001, 1.0, 128.0 / 255.0,
                                  127.0 / 255.0};
    const auto bits = binarize(img);
    CHECK(bits == std::vector<std::uint8_t>{0, 0, 1, 1, 1, 0});
}

TEST_CASE("maxpool then binarize is idempotent on binary images") {
    Rng rng(3);
    std::vector<double> img(28 * 28);
    for (auto& p : img) p = uniform01(rng) < 0.3 ? 1.0 : 0.0;
    const auto once = binarize(maxpool_2x2(img));
    std::vector<double> again(once.begin(), once.end());
    CHECK(binarize(again) == once);
}

TEST_CASE("split is a disjoint cover with the requested sizes") {
    BinarizedDataset ds;
    ds.input_dim = 1;
    ds.pixels.assign(100, 0);
    ds.labels.assign(100, 0);
    split_train_validation(ds, 7, 80, 20);
    CHECK(ds.train_indices.size() == 80);
    CHECK(ds.validation_indices.size() == 20);
    std::set<std::uint32_t> all(ds.train_indices.begin(),
                                ds.train_indices.end());
    all.insert(ds.validation_indices.begin(), ds.validation_indices.end());
    CHECK(all.size() == 100);
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == 99);

    BinarizedDataset same = ds, other = ds;
    split_train_validation(same, 7, 80, 20);
    split_train_validation(other, 8, 80, 20);
    CHECK(same.train_indices == ds.train_indices);
    CHECK(other.train_indices != ds.train_indices);
}

TEST_CASE("test_subset_first keeps file order and bounds-checks") {
    BinarizedDataset ds;
    ds.test_indices = {60000, 60001, 60002};
    const auto subset = test_subset_first(ds, 2);
    CHECK(subset == std::vector<std::uint32_t>{60000, 60001});
    CHECK_THROWS_AS(test_subset_first(ds, 4), std::invalid_argument);
}

TEST_CASE("load_idx reads raw and gzipped tensors identically") {
    const auto raw = temp_file("idx_ok");
    const auto gz = temp_file("idx_ok.gz");
    std::vector<std::uint8_t> payload(2 * 3 * 4);
    for (std::size_t i = 0; i < payload.size(); ++i)
        payload[i] = static_cast<std::uint8_t>(i * 7);
    write_idx_images(raw, 2, 3, 4, payload);
    gzip_file(raw, gz);

    const IdxTensor a = load_idx(raw);
    const IdxTensor b = load_idx(gz);
    CHECK(a.dims == std::vector<std::size_t>{2, 3, 4});
    CHECK(a.data == payload);
    CHECK(b.dims == a.dims);
    CHECK(b.data == a.data);

    std::filesystem::remove(raw);
    std::filesystem::remove(gz);
}

TEST_CASE("load_idx failure modes carry distinct messages") {
    const auto path = temp_file("idx_bad");

    SUBCASE("missing file") {
        std::filesystem::remove(path);
        CHECK_THROWS_WITH_AS(load_idx(path),
                             doctest::Contains("open"), DataError);
    }
    SUBCASE("bad magic") {
        write_idx_images(path, 1, 2, 2, std::vector<std::uint8_t>(4),
                         0xdeadbeef);
        CHECK_THROWS_WITH_AS(load_idx(path),
                             doctest::Contains("magic"), DataError);
    }
    SUBCASE("truncated payload") {
        write_idx_images(path, 2, 2, 2, std::vector<std::uint8_t>(5));
        CHECK_THROWS_WITH_AS(load_idx(path),
                             doctest::Contains("length"), DataError);
    }
    SUBCASE("trailing bytes") {
        write_idx_images(path, 1, 2, 2, std::vector<std::uint8_t>(9));
        CHECK_THROWS_AS(load_idx(path), DataError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("tiny end-to-end dataset build") {
    const auto dir = temp_file("mini_mnist");
    std::filesystem::create_directories(dir);
    // 3 training images, 2 test images, all 28x28
    const std::size_t px = 28 * 28;
    std::vector<std::uint8_t> train_payload(3 * px, 0), test_payload(2 * px, 0);
    // image 0: byte 128 at (0,0) -> normalized 128/255 > 0.5 -> pooled bit 1
    train_payload[0] = 128;
    // image 1: byte 127 everywhere stays below the threshold
    std::fill(train_payload.begin() + px, train_payload.begin() + 2 * px, 127);
    // test image 1: saturated
    std::fill(test_payload.begin() + px, test_payload.end(), 255);
    write_idx_images(dir / kMnistFiles[0], 3, 28, 28, train_payload);
    write_idx_labels(dir / kMnistFiles[1], {1, 2, 0});
    write_idx_images(dir / kMnistFiles[2], 2, 28, 28, test_payload);
    write_idx_labels(dir / kMnistFiles[3], {3, 4});

    // the canonical 50k/10k split needs 60k images; split by hand after
    BinarizedDataset ds;
    CHECK_THROWS_AS(build_dataset(dir, 0), std::exception);

    // assemble the same pipeline manually to pin the pixel semantics
    const IdxTensor imgs = load_idx(dir / kMnistFiles[0]);
    std::vector<double> img0(px);
    for (std::size_t i = 0; i < px; ++i) img0[i] = imgs.data[i] / 255.0;
    const auto bits0 = binarize(maxpool_2x2(img0));
    CHECK(bits0[0] == 1);
    CHECK(std::accumulate(bits0.begin(), bits0.end(), 0) == 1);

    std::vector<double> img1(px);
    for (std::size_t i = 0; i < px; ++i) img1[i] = imgs.data[px + i] / 255.0;
    const auto bits1 = binarize(maxpool_2x2(img1));
    CHECK(std::accumulate(bits1.begin(), bits1.end(), 0) == 0);

    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset cache round-trips exactly") {
    BinarizedDataset ds;
    ds.input_dim = 9;
    Rng rng(13);
    for (int i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < ds.input_dim; ++j)
            ds.pixels.push_back(uniform01(rng) < 0.5 ? 1 : 0);
        ds.labels.push_back(static_cast<std::uint8_t>(uniform_below(10, rng)));
    }
    split_train_validation(ds, 21, 30, 10);
    ds.test_indices = {1, 5, 9};

    const auto path = temp_file("synapse_cache.bin");
    save_dataset_cache(path, ds);
    const BinarizedDataset back = load_dataset_cache(path);
    CHECK(back.input_dim == ds.input_dim);
    CHECK(back.pixels == ds.pixels);
    CHECK(back.labels == ds.labels);
    CHECK(back.train_indices == ds.train_indices);
    CHECK(back.validation_indices == ds.validation_indices);
    CHECK(back.test_indices == ds.test_indices);
    CHECK(back.split_seed == ds.split_seed);

    // corrupting the magic must be detected
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(load_dataset_cache(path), DataError);
    std::filesystem::remove(path);
}

TEST_CASE("md5 digest of a known payload") {
    const auto path = temp_file("md5_probe");
    std::ofstream(path, std::ios::binary) << "abc";
    CHECK(md5_file(path) == "900150983cd24fb0d6963f7d28e17f72");
    std::filesystem::remove(path);
}

TEST_CASE("canonical dataset builds with the documented shape") {
    if (!mnist_available()) {
        MESSAGE("canonical image files not present; skipping");
        return;
    }
    const BinarizedDataset ds = build_dataset(mnist_dir(), 0);
    CHECK(ds.image_count() == 70000);
    CHECK(ds.input_dim == 196);
    CHECK(ds.train_indices.size() == 50000);
    CHECK(ds.validation_indices.size() == 10000);
    CHECK(ds.test_indices.size() == 10000);
    CHECK(ds.test_indices.front() == 60000);
    CHECK(ds.test_indices.back() == 69999);
    for (std::uint8_t p : ds.image(0)) CHECK(p <= 1);
    std::set<std::uint8_t> label_set(ds.labels.begin(), ds.labels.end());
    CHECK(label_set.size() == 10);
    CHECK(*label_set.rbegin() == 9);

    // cache round-trip on the real thing
    const auto path = temp_file("synapse_full_cache.bin");
    save_dataset_cache(path, ds);
    const BinarizedDataset back = load_dataset_cache(path);
    CHECK(back.pixels == ds.pixels);
    CHECK(back.train_indices == ds.train_indices);
    std::filesystem::remove(path);
}
