#include "synapse/data.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>

#include "synapse/random.hpp"

namespace synapse {

const char* const kMnistFiles[4] = {
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
};

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_gzip(const std::vector<std::uint8_t>& raw) {
    return raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& raw) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
        throw DataError("zlib init failed");
    std::vector<std::uint8_t> out;
    out.reserve(raw.size() * 4);
    std::array<std::uint8_t, 1 << 16> buf;
    zs.next_in = const_cast<Bytef*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw DataError("corrupt gzip stream");
        }
        out.insert(out.end(), buf.data(),
                   buf.data() + (buf.size() - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw DataError("truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

IdxTensor load_idx(const std::filesystem::path& path) {
    std::vector<std::uint8_t> raw = read_file(path);
    if (is_gzip(raw)) raw = gunzip(raw);
    if (raw.size() < 4) throw DataError("IDX header truncated: " + path.string());
    const std::uint32_t magic = be32(raw.data());
    std::size_t ndim;
    if (magic == 0x00000803)
        ndim = 3;
    else if (magic == 0x00000801)
        ndim = 1;
    else
        throw DataError("bad IDX magic number in " + path.string());
    if (raw.size() < 4 + 4 * ndim)
        throw DataError("IDX dimension header truncated: " + path.string());

    IdxTensor t;
    std::size_t total = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const std::uint32_t dim = be32(raw.data() + 4 + 4 * i);
        t.dims.push_back(dim);
        if (dim != 0 && total > SIZE_MAX / dim)
            throw DataError("IDX dimension overflow in " + path.string());
        total *= dim;
    }
    const std::size_t payload = raw.size() - 4 - 4 * ndim;
    if (payload != total)
        throw DataError("IDX payload length mismatch in " + path.string() +
                        " (header says " + std::to_string(total) + ", file has " +
                        std::to_string(payload) + " bytes)");
    t.data.assign(raw.begin() + static_cast<std::ptrdiff_t>(4 + 4 * ndim),
                  raw.end());
    return t;
}

std::vector<double> maxpool_2x2(std::span<const double> image28) {
    if (image28.size() != 28 * 28)
        throw std::invalid_argument("maxpool_2x2 expects a 28x28 image");
    std::vector<double> out(14 * 14);
    for (std::size_t r = 0; r < 14; ++r)
        for (std::size_t c = 0; c < 14; ++c) {
            const std::size_t r0 = 2 * r, c0 = 2 * c;
            double m = image28[r0 * 28 + c0];
            m = std::max(m, image28[r0 * 28 + c0 + 1]);
            m = std::max(m, image28[(r0 + 1) * 28 + c0]);
            m = std::max(m, image28[(r0 + 1) * 28 + c0 + 1]);
            out[r * 14 + c] = m;
        }
    return out;
}

std::vector<std::uint8_t> binarize(std::span<const double> image) {
    std::vector<std::uint8_t> out(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        out[i] = image[i] > 0.5 ? 1 : 0;
    return out;
}

void split_train_validation(BinarizedDataset& ds, std::uint64_t seed,
                            std::size_t train, std::size_t validation) {
    const std::size_t n = train + validation;
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    Rng rng = make_stream(seed, "split");
    shuffle_indices(perm, rng);
    ds.train_indices.assign(perm.begin(),
                            perm.begin() + static_cast<std::ptrdiff_t>(train));
    ds.validation_indices.assign(
        perm.begin() + static_cast<std::ptrdiff_t>(train), perm.end());
    ds.split_seed = seed;
}

std::vector<std::uint32_t> test_subset_first(const BinarizedDataset& ds,
                                             std::size_t n) {
    if (n > ds.test_indices.size())
        throw std::invalid_argument("subset larger than the test set");
    return {ds.test_indices.begin(),
            ds.test_indices.begin() + static_cast<std::ptrdiff_t>(n)};
}

namespace {

std::filesystem::path locate(const std::filesystem::path& dir,
                             const char* name) {
    if (std::filesystem::exists(dir / name)) return dir / name;
    if (std::filesystem::exists(dir / (std::string(name) + ".gz")))
        return dir / (std::string(name) + ".gz");
    throw DataError("missing data file: expected " + (dir / name).string() +
                    " (or .gz); run the data command with --fetch or place the "
                    "canonical files there");
}

void append_images(BinarizedDataset& ds, const IdxTensor& images,
                   const IdxTensor& labels, const char* what) {
    if (images.dims.size() != 3 || images.dims[1] != 28 || images.dims[2] != 28)
        throw DataError(std::string(what) + ": expected Nx28x28 images");
    if (labels.dims.size() != 1 || labels.dims[0] != images.dims[0])
        throw DataError(std::string(what) + ": image/label count mismatch");
    std::vector<double> raw(28 * 28);
    for (std::size_t n = 0; n < images.dims[0]; ++n) {
        if (labels.data[n] > 9)
            throw DataError(std::string(what) + ": label out of range 0-9");
        const std::uint8_t* px = images.data.data() + n * 28 * 28;
        for (std::size_t i = 0; i < 28 * 28; ++i)
            raw[i] = static_cast<double>(px[i]) / 255.0;
        const std::vector<std::uint8_t> bits = binarize(maxpool_2x2(raw));
        ds.pixels.insert(ds.pixels.end(), bits.begin(), bits.end());
        ds.labels.push_back(labels.data[n]);
    }
}

}  // namespace

BinarizedDataset build_dataset(const std::filesystem::path& data_dir,
                               std::uint64_t split_seed) {
    BinarizedDataset ds;
    ds.input_dim = 14 * 14;
    const IdxTensor train_images = load_idx(locate(data_dir, kMnistFiles[0]));
    const IdxTensor train_labels = load_idx(locate(data_dir, kMnistFiles[1]));
    const IdxTensor test_images = load_idx(locate(data_dir, kMnistFiles[2]));
    const IdxTensor test_labels = load_idx(locate(data_dir, kMnistFiles[3]));
    if (train_images.dims[0] != 60000)
        throw DataError("training file must contain 60000 images");
    append_images(ds, train_images, train_labels, "train");
    append_images(ds, test_images, test_labels, "test");
    split_train_validation(ds, split_seed);
    ds.test_indices.resize(test_images.dims[0]);
    for (std::size_t i = 0; i < ds.test_indices.size(); ++i)
        ds.test_indices[i] = static_cast<std::uint32_t>(60000 + i);
    return ds;
}

namespace {

constexpr char kCacheMagic[8] = {'S', 'Y', 'N', 'B', 'I', 'N', '0', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
    std::uint8_t b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("dataset cache truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void put_indices(std::ostream& out, const std::vector<std::uint32_t>& v) {
    put_u64(out, v.size());
    for (std::uint32_t x : v) put_u64(out, x);
}

std::vector<std::uint32_t> get_indices(std::istream& in) {
    std::vector<std::uint32_t> v(get_u64(in));
    for (auto& x : v) x = static_cast<std::uint32_t>(get_u64(in));
    return v;
}

}  // namespace

void save_dataset_cache(const std::filesystem::path& path,
                        const BinarizedDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write cache " + path.string());
    out.write(kCacheMagic, sizeof kCacheMagic);
    put_u64(out, ds.input_dim);
    put_u64(out, ds.image_count());
    put_u64(out, ds.split_seed);
    out.write(reinterpret_cast<const char*>(ds.labels.data()),
              static_cast<std::streamsize>(ds.labels.size()));
    // bit-packed pixels, LSB-first within each byte
    const std::size_t nbits = ds.pixels.size();
    std::vector<std::uint8_t> packed((nbits + 7) / 8, 0);
    for (std::size_t i = 0; i < nbits; ++i)
        if (ds.pixels[i]) packed[i / 8] |= std::uint8_t(1u << (i % 8));
    out.write(reinterpret_cast<const char*>(packed.data()),
              static_cast<std::streamsize>(packed.size()));
    put_indices(out, ds.train_indices);
    put_indices(out, ds.validation_indices);
    put_indices(out, ds.test_indices);
    if (!out) throw DataError("write failure on cache " + path.string());
}

BinarizedDataset load_dataset_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read cache " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCacheMagic, 8) != 0)
        throw DataError("not a dataset cache (bad magic): " + path.string());
    BinarizedDataset ds;
    ds.input_dim = get_u64(in);
    const std::size_t count = get_u64(in);
    ds.split_seed = get_u64(in);
    ds.labels.resize(count);
    in.read(reinterpret_cast<char*>(ds.labels.data()),
            static_cast<std::streamsize>(count));
    const std::size_t nbits = count * ds.input_dim;
    std::vector<std::uint8_t> packed((nbits + 7) / 8);
    in.read(reinterpret_cast<char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
    if (!in) throw DataError("dataset cache truncated");
    ds.pixels.resize(nbits);
    for (std::size_t i = 0; i < nbits; ++i)
        ds.pixels[i] = (packed[i / 8] >> (i % 8)) & 1u;
    ds.train_indices = get_indices(in);
    ds.validation_indices = get_indices(in);
    ds.test_indices = get_indices(in);
    return ds;
}

BinarizedDataset load_or_build(const std::filesystem::path& data_dir,
                               const std::filesystem::path& cache_path,
                               std::uint64_t split_seed) {
    if (std::filesystem::exists(cache_path)) {
        BinarizedDataset ds = load_dataset_cache(cache_path);
        if (ds.split_seed == split_seed) return ds;
    }
    BinarizedDataset ds = build_dataset(data_dir, split_seed);
    if (!cache_path.empty()) save_dataset_cache(cache_path, ds);
    return ds;
}

}  // namespace synapse
