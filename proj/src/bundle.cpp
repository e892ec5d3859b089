#include "memefuse/bundle.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "memefuse/error.hpp"

namespace memefuse {

namespace {

constexpr char kBundleMagic[] = "MEMEFUSE1";  // 9 bytes, no terminator written
constexpr char kTensorMagic[] = "MFT1";

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in, const std::string& origin) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw DataError("bundle: truncated read in " + origin);
    }
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in, const std::string& origin) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw DataError("bundle: truncated read in " + origin);
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

double get_f64(std::istream& in, const std::string& origin) {
    std::uint64_t bits = get_u64(in, origin);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string get_string(std::istream& in, const std::string& origin) {
    std::uint32_t n = get_u32(in, origin);
    std::string s(n, '\0');
    if (!in.read(s.data(), n)) throw DataError("bundle: truncated read in " + origin);
    return s;
}

}  // namespace

void write_tensor_mft1(std::ostream& out, const Tensor& t) {
    out.write(kTensorMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

Tensor read_tensor_mft1(std::istream& in, const std::string& origin) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0) {
        throw DataError("tensor: bad magic in " + origin);
    }
    std::uint32_t rank = get_u32(in, origin);
    if (rank > 8) throw DataError("tensor: implausible rank in " + origin);
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = get_u32(in, origin);
        count *= shape[i];
    }
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = get_f64(in, origin);
    return Tensor(std::move(shape), std::move(data));
}

void ModelBundle::save(const std::string& path) const {
    // serialize payloads first so the table can carry offsets
    std::ostringstream payload;
    std::vector<std::uint64_t> offsets;
    for (const auto& [name, tensor] : tensors) {
        offsets.push_back(static_cast<std::uint64_t>(payload.tellp()));
        write_tensor_mft1(payload, tensor);
    }

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("bundle: cannot write " + tmp);
        out.write(kBundleMagic, 9);
        put_u32(out, version);
        put_u64(out, lexicon_hash);
        put_u32(out, embedding_dim);
        put_u32(out, static_cast<std::uint32_t>(config.size()));
        for (const auto& [k, v] : config) {
            put_string(out, k);
            put_string(out, v);
        }
        put_u32(out, static_cast<std::uint32_t>(tensors.size()));
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            put_string(out, tensors[i].first);
            const Tensor& t = tensors[i].second;
            put_u32(out, static_cast<std::uint32_t>(t.rank()));
            for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
            put_u64(out, offsets[i]);
        }
        std::string blob = payload.str();
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw DataError("bundle: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ModelBundle ModelBundle::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("bundle: cannot open " + path);
    char magic[9];
    if (!in.read(magic, 9) || std::memcmp(magic, kBundleMagic, 9) != 0) {
        throw DataError("bundle: " + path + " is not a model bundle");
    }
    ModelBundle bundle;
    bundle.version = get_u32(in, path);
    if (bundle.version != 1) {
        throw DataError("bundle: unsupported version " + std::to_string(bundle.version) + " in " +
                        path);
    }
    bundle.lexicon_hash = get_u64(in, path);
    bundle.embedding_dim = get_u32(in, path);
    std::uint32_t n_config = get_u32(in, path);
    for (std::uint32_t i = 0; i < n_config; ++i) {
        std::string k = get_string(in, path);
        std::string v = get_string(in, path);
        bundle.config[k] = v;
    }
    std::uint32_t n_tensors = get_u32(in, path);
    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        Entry e;
        e.name = get_string(in, path);
        std::uint32_t rank = get_u32(in, path);
        if (rank > 8) throw DataError("bundle: implausible tensor rank in " + path);
        for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get_u32(in, path));
        e.offset = get_u64(in, path);
        entries.push_back(std::move(e));
    }
    std::streampos payload_start = in.tellg();
    for (const Entry& e : entries) {
        in.seekg(payload_start + static_cast<std::streamoff>(e.offset));
        Tensor t = read_tensor_mft1(in, path);
        if (t.shape() != e.shape) {
            throw DataError("bundle: table/payload shape mismatch for " + e.name + " in " + path);
        }
        bundle.tensors.emplace_back(e.name, std::move(t));
    }
    return bundle;
}

const Tensor* ModelBundle::find(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return &t;
    }
    return nullptr;
}

}  // namespace memefuse
