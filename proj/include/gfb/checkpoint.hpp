#ifndef GFB_CHECKPOINT_HPP
#define GFB_CHECKPOINT_HPP

// Binary model checkpoint, all integers and doubles little-endian:
//
//   8 bytes  magic "GFBCKPT\0"
//   u32      format version (1)
//   u64      n_nodes, hidden_dim, n_classes
//   u32      genvec kind (0 none, 1 max, 2 mean, 3 diag, 4 topk)
//   u64      k_prime
//   f64      lambda, dropout
//   f64[]    W1 (hidden_dim x n_nodes), row-major
//   f64[]    W2 (n_classes x hidden_dim), row-major
//
// Doubles are stored as their IEEE-754 bit patterns, so a save/load cycle is
// bit-exact.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "gfb/error.hpp"
#include "gfb/model.hpp"

namespace gfb {

inline constexpr std::array<char, 8> checkpoint_magic{'G', 'F', 'B', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t checkpoint_version = 1;

namespace detail {

class ByteWriter {
public:
    void put_u32(std::uint32_t v) { put_le(v, 4); }
    void put_u64(std::uint64_t v) { put_le(v, 8); }
    void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }
    void put_raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    const std::vector<char>& bytes() const noexcept { return bytes_; }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::vector<char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<char>& b) : b_(b) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    double f64() { return std::bit_cast<double>(u64()); }
    void raw(char* out, std::size_t n) {
        need(n);
        std::memcpy(out, b_.data() + pos_, n);
        pos_ += n;
    }
    std::size_t remaining() const noexcept { return b_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (b_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    const std::vector<char>& b_;
    std::size_t pos_ = 0;
};

inline std::uint32_t genvec_code(const std::optional<GenVecOp>& op) {
    if (!op) return 0;
    switch (op->kind) {
    case GenVecKind::MaxVec: return 1;
    case GenVecKind::MeanVec: return 2;
    case GenVecKind::DiagVec: return 3;
    case GenVecKind::TopkVec: return 4;
    case GenVecKind::UpperVec: break;
    }
    throw Error("checkpoint: UpperVec layers cannot be saved");
}

} // namespace detail

inline std::vector<char> serialize_checkpoint(const ModelState& m) {
    detail::ByteWriter w;
    w.put_raw(checkpoint_magic.data(), checkpoint_magic.size());
    w.put_u32(checkpoint_version);
    w.put_u64(m.n_nodes());
    w.put_u64(m.hidden_dim());
    w.put_u64(m.n_classes());
    w.put_u32(detail::genvec_code(m.layer2.genvec));
    w.put_u64(m.layer2.genvec ? m.layer2.genvec->k_prime : 0);
    w.put_f64(m.layer2.lambda);
    w.put_f64(m.dropout);
    for (double v : m.layer1.weight.values()) w.put_f64(v);
    for (double v : m.layer2.weight.values()) w.put_f64(v);
    return w.bytes();
}

inline ModelState deserialize_checkpoint(const std::vector<char>& bytes) {
    detail::ByteReader r(bytes);
    std::array<char, 8> magic{};
    r.raw(magic.data(), magic.size());
    if (magic != checkpoint_magic) throw DataError("checkpoint: bad magic (not a checkpoint file)");
    const auto version = r.u32();
    if (version != checkpoint_version)
        throw DataError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                        std::to_string(checkpoint_version) + ")");
    const auto n_nodes = r.u64(), hidden = r.u64(), n_classes = r.u64();
    const auto code = r.u32();
    const auto k_prime = r.u64();
    if (n_nodes == 0 || hidden == 0 || n_classes == 0) throw DataError("checkpoint: zero dimension");
    const std::uint64_t n_values = hidden * n_nodes + n_classes * hidden;
    if (r.remaining() != 16 + 8 * n_values)
        throw DataError("checkpoint: size does not match stored shape (" + std::to_string(hidden) + "x" +
                        std::to_string(n_nodes) + ", " + std::to_string(n_classes) + "x" + std::to_string(hidden) + ")");

    ModelState m;
    m.layer2.lambda = r.f64();
    m.dropout = r.f64();
    switch (code) {
    case 0: m.layer2.genvec.reset(); break;
    case 1: m.layer2.genvec = GenVecOp{GenVecKind::MaxVec, k_prime}; break;
    case 2: m.layer2.genvec = GenVecOp{GenVecKind::MeanVec, k_prime}; break;
    case 3: m.layer2.genvec = GenVecOp{GenVecKind::DiagVec, k_prime}; break;
    case 4: m.layer2.genvec = GenVecOp{GenVecKind::TopkVec, k_prime}; break;
    default: throw DataError("checkpoint: unknown genvec code " + std::to_string(code));
    }
    m.layer1 = {DenseMatrix(hidden, n_nodes), Activation::Relu};
    for (double& v : m.layer1.weight.values()) v = r.f64();
    m.layer2.weight = DenseMatrix(n_classes, hidden);
    for (double& v : m.layer2.weight.values()) v = r.f64();
    m.layer2.activation = Activation::Softmax;
    if (!m.layer1.weight.all_finite() || !m.layer2.weight.all_finite() || !std::isfinite(m.layer2.lambda))
        throw DataError("checkpoint: non-finite parameters");
    return m;
}

inline void save_checkpoint(const std::string& path, const ModelState& m) {
    const auto bytes = serialize_checkpoint(m);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path + "'");
}

inline ModelState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_checkpoint(bytes);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

} // namespace gfb

#endif // GFB_CHECKPOINT_HPP
