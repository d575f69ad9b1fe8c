#pragma once

/// Binary snapshot files: "EFRS" magic, explicit little-endian encoding,
/// raw 64-bit floats per staggered field in row-major order. Save/load
/// round-trips are bit-exact.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "efr/errors.hpp"
#include "efr/field.hpp"
#include "efr/grid.hpp"

namespace efr {

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_u64(std::string& buf, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

inline void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

class ByteReader {
public:
    ByteReader(const std::string& data, const std::string& what) : data_(data), what_(what) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    void raw(char* out, std::size_t n) {
        need(n);
        std::memcpy(out, data_.data() + pos_, n);
        pos_ += n;
    }
    bool exhausted() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw IoError(what_ + ": truncated snapshot");
    }
    const std::string& data_;
    std::string what_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline constexpr std::uint32_t kSnapshotVersion = 1;
inline constexpr std::uint32_t kLayoutMacUvp = 1;

struct SnapshotHeader {
    std::uint32_t version = kSnapshotVersion;
    std::uint32_t geometry_kind = 0;  // 0 channel_cylinder, 1 periodic_box
    std::uint32_t nx = 0, ny = 0;
    double lx = 0.0, ly = 0.0;
    double time = 0.0;
    std::uint32_t layout = kLayoutMacUvp;
};

inline void save_snapshot(const std::string& path, const State& s, const Grid& g) {
    std::string buf;
    buf.reserve(64 + 8 * (g.u_size() + g.v_size() + g.cell_count()));
    buf += "EFRS";
    detail::put_u32(buf, kSnapshotVersion);
    detail::put_u32(buf, g.spec().kind == GeometryKind::periodic_box ? 1u : 0u);
    detail::put_u32(buf, static_cast<std::uint32_t>(g.nx()));
    detail::put_u32(buf, static_cast<std::uint32_t>(g.ny()));
    detail::put_f64(buf, g.lx());
    detail::put_f64(buf, g.ly());
    detail::put_f64(buf, s.time);
    detail::put_u32(buf, kLayoutMacUvp);
    detail::put_u64(buf, s.velocity.u_data().size());
    detail::put_u64(buf, s.velocity.v_data().size());
    detail::put_u64(buf, s.pressure.data().size());
    for (const double v : s.velocity.u_data()) detail::put_f64(buf, v);
    for (const double v : s.velocity.v_data()) detail::put_f64(buf, v);
    for (const double v : s.pressure.data()) detail::put_f64(buf, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to " + path);
}

inline SnapshotHeader read_snapshot_header(detail::ByteReader& r, const std::string& path) {
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, "EFRS", 4) != 0) throw IoError(path + ": bad snapshot magic");
    SnapshotHeader h;
    h.version = r.u32();
    if (h.version != kSnapshotVersion)
        throw IoError(path + ": unsupported snapshot version " + std::to_string(h.version));
    h.geometry_kind = r.u32();
    h.nx = r.u32();
    h.ny = r.u32();
    h.lx = r.f64();
    h.ly = r.f64();
    h.time = r.f64();
    h.layout = r.u32();
    if (h.layout != kLayoutMacUvp)
        throw IoError(path + ": unsupported field layout " + std::to_string(h.layout));
    return h;
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

inline State load_snapshot(const std::string& path, const Grid& g) {
    const std::string data = read_file_bytes(path);
    detail::ByteReader r(data, path);
    const SnapshotHeader h = read_snapshot_header(r, path);
    if (static_cast<int>(h.nx) != g.nx() || static_cast<int>(h.ny) != g.ny())
        throw IoError(path + ": snapshot dims do not match the grid");
    if (std::abs(h.lx - g.lx()) > 1e-12 || std::abs(h.ly - g.ly()) > 1e-12)
        throw IoError(path + ": snapshot extent does not match the grid");

    State s(g);
    s.time = h.time;
    const std::uint64_t nu = r.u64(), nv = r.u64(), np = r.u64();
    if (nu != s.velocity.u_data().size() || nv != s.velocity.v_data().size() ||
        np != s.pressure.data().size())
        throw IoError(path + ": payload length does not match the header dims");
    for (double& v : s.velocity.u_data()) v = r.f64();
    for (double& v : s.velocity.v_data()) v = r.f64();
    for (double& v : s.pressure.data()) v = r.f64();
    if (!r.exhausted()) throw IoError(path + ": trailing bytes after payload");
    return s;
}

inline SnapshotHeader peek_snapshot(const std::string& path) {
    const std::string data = read_file_bytes(path);
    detail::ByteReader r(data, path);
    return read_snapshot_header(r, path);
}

/// FNV-1a over file bytes; used for reference-series provenance hashes.
inline std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed = 1469598103934665603ull) {
    std::uint64_t h = seed;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace efr
