#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <fstream>

#include "synapse/data.hpp"

namespace synapse {

namespace {

struct ArchiveInfo {
    const char* name;     // uncompressed basename
    const char* md5_gz;   // canonical .gz archive
    const char* md5_raw;  // canonical uncompressed file
};

// Digests of the canonical public distribution.
constexpr ArchiveInfo kArchives[4] = {
    {"train-images-idx3-ubyte", "f68b3c2dcbeaaa9fbdd348bbdeb94873",
     "6bbc9ace898e44ae57da46a324031adb"},
    {"train-labels-idx1-ubyte", "d53e105ee54ea40749a09fcbcd1e9432",
     "a25bea736e30d166cdddb491f175f624"},
    {"t10k-images-idx3-ubyte", "9fb629c4189551a2d022fa330f9573f3",
     "2646ac647ad5339dbf082846283269ea"},
    {"t10k-labels-idx1-ubyte", "ec29112dd5afa0611ce80d1b7f02629c",
     "27ae3e4e09519cfbb04c329615203637"},
};

const char* const kMirrors[] = {
    "https://ossci-datasets.s3.amazonaws.com",
    "http://yann.lecun.com",
};
const char* const kMirrorPaths[] = {"/mnist/", "/exdb/mnist/"};

std::string md5_hex(const void* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
    EVP_DigestUpdate(ctx, data, size);
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

bool present_and_valid(const std::filesystem::path& dir, const ArchiveInfo& a) {
    const auto raw = dir / a.name;
    if (std::filesystem::exists(raw) && md5_file(raw) == a.md5_raw) return true;
    const auto gz = dir / (std::string(a.name) + ".gz");
    if (std::filesystem::exists(gz) && md5_file(gz) == a.md5_gz) return true;
    return false;
}

}  // namespace

std::string md5_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::string bytes{std::istreambuf_iterator<char>(in),
                      std::istreambuf_iterator<char>()};
    return md5_hex(bytes.data(), bytes.size());
}

void fetch_mnist(const std::filesystem::path& data_dir) {
    std::filesystem::create_directories(data_dir);
    for (const ArchiveInfo& a : kArchives) {
        if (present_and_valid(data_dir, a)) continue;
        const std::string gz_name = std::string(a.name) + ".gz";
        std::string body;
        std::string errors;
        for (std::size_t m = 0; m < std::size(kMirrors) && body.empty(); ++m) {
            httplib::Client client(kMirrors[m]);
            client.set_connection_timeout(10);
            client.set_read_timeout(60);
            client.set_follow_location(true);
            auto res = client.Get(std::string(kMirrorPaths[m]) + gz_name);
            if (res && res->status == 200)
                body = std::move(res->body);
            else
                errors += std::string(" ") + kMirrors[m] + " (" +
                          (res ? std::to_string(res->status)
                               : httplib::to_string(res.error())) +
                          ")";
        }
        if (body.empty())
            throw DataError("failed to download " + gz_name +
                            "; tried mirrors:" + errors +
                            ". Place the file in " + data_dir.string() +
                            " manually for offline use.");
        if (md5_hex(body.data(), body.size()) != a.md5_gz)
            throw DataError("checksum mismatch for downloaded " + gz_name);
        std::ofstream out(data_dir / gz_name, std::ios::binary);
        out.write(body.data(), static_cast<std::streamsize>(body.size()));
        if (!out) throw DataError("cannot write " + (data_dir / gz_name).string());
    }
}

}  // namespace synapse
