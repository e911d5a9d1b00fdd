#pragma once

// Native ensemble file (little-endian):
//   magic "CCEN", u32 version (=1), u32 X, Y, Z, E, V,
//   V variable records { u16 name_len, name, u16 units_len, units, u8 has_sentinel, f32 sentinel },
//   X*Y*Z*E*V f32 values in (variable, member, z, y, x) order.
//
// Raw ingestion reads a headerless f32 payload in the same value order, with
// the shape supplied by a FormatDescriptor.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "corrchord/ensemble/grid.hpp"

namespace corrchord {

inline constexpr char kEnsembleMagic[4] = {'C', 'C', 'E', 'N'};
inline constexpr std::uint32_t kEnsembleVersion = 1;

struct FormatDescriptor {
    enum class Kind { Native, Raw } kind = Kind::Native;
    // Raw only.
    Dims3 dims{};
    std::int64_t members = 0;
    std::vector<VariableMeta> variables;
};

namespace detail {

class ByteReader {
public:
    explicit ByteReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw DataError(std::string("truncated header while reading ") + what + " at byte offset " + std::to_string(pos_));
    }

    template <typename T>
    T read(const char* what) {
        need(sizeof(T), what);
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) v = byteswap(v);
        pos_ += sizeof(T);
        return v;
    }

    std::string read_string(const char* what) {
        const auto len = read<std::uint16_t>(what);
        need(len, what);
        std::string s(bytes_.data() + pos_, len);
        pos_ += len;
        return s;
    }

    std::vector<float> read_floats(std::size_t count) {
        std::vector<float> out(count);
        std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(float));
        if constexpr (std::endian::native == std::endian::big)
            for (auto& f : out) f = byteswap(f);
        pos_ += count * sizeof(float);
        return out;
    }

private:
    template <typename T>
    static T byteswap(T v) {
        char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
        return v;
    }

    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open ensemble file '" + path.string() + "'");
    return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <typename T>
void put(std::string& out, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    out.append(b, sizeof(T));
}

inline void put_string(std::string& out, const std::string& s) {
    if (s.size() > 0xFFFF) throw DataError("string too long for ensemble header: " + s.substr(0, 32) + "...");
    put(out, static_cast<std::uint16_t>(s.size()));
    out.append(s);
}

inline std::vector<float> check_payload(ByteReader& r, std::size_t expected) {
    const std::size_t header_end = r.offset();
    if (r.remaining() % sizeof(float) != 0 || r.remaining() / sizeof(float) != expected)
        throw DataError("size mismatch: header at byte offset " + std::to_string(header_end) + " declares " + std::to_string(expected) +
                        " floats but the payload holds " + std::to_string(r.remaining()) + " bytes (" +
                        std::to_string(r.remaining() / sizeof(float)) + " floats)");
    return r.read_floats(expected);
}

} // namespace detail

/// Serializes a grid into the native format (exact byte image).
inline std::string encode_ensemble(const EnsembleGrid& grid) {
    std::string out;
    out.reserve(64 + grid.raw_bytes());
    out.append(kEnsembleMagic, 4);
    detail::put(out, kEnsembleVersion);
    detail::put(out, static_cast<std::uint32_t>(grid.dims().x));
    detail::put(out, static_cast<std::uint32_t>(grid.dims().y));
    detail::put(out, static_cast<std::uint32_t>(grid.dims().z));
    detail::put(out, static_cast<std::uint32_t>(grid.members()));
    detail::put(out, static_cast<std::uint32_t>(grid.variables().size()));
    for (const auto& v : grid.variables()) {
        detail::put_string(out, v.name);
        detail::put_string(out, v.units);
        detail::put(out, static_cast<std::uint8_t>(v.has_missing_sentinel ? 1 : 0));
        detail::put(out, v.missing_sentinel);
    }
    if constexpr (std::endian::native == std::endian::little) {
        const auto vals = grid.values();
        out.append(reinterpret_cast<const char*>(vals.data()), vals.size_bytes());
    } else {
        for (float f : grid.values()) detail::put(out, f);
    }
    return out;
}

inline void save_ensemble(const EnsembleGrid& grid, const std::filesystem::path& path) {
    const auto bytes = encode_ensemble(grid);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write ensemble file '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline EnsembleGrid decode_ensemble(std::vector<char> bytes) {
    detail::ByteReader r(std::move(bytes));
    r.need(4, "magic");
    char magic[4];
    for (char& c : magic) c = r.read<char>("magic");
    if (std::memcmp(magic, kEnsembleMagic, 4) != 0) throw DataError("malformed header: bad magic at byte offset 0");
    const auto version = r.read<std::uint32_t>("version");
    if (version != kEnsembleVersion) throw DataError("malformed header: unsupported version " + std::to_string(version) + " at byte offset 4");
    Dims3 dims;
    dims.x = r.read<std::uint32_t>("X");
    dims.y = r.read<std::uint32_t>("Y");
    dims.z = r.read<std::uint32_t>("Z");
    const std::int64_t members = r.read<std::uint32_t>("E");
    const auto nvars = r.read<std::uint32_t>("V");
    if (dims.count() == 0 || members < 2 || nvars == 0)
        throw DataError("malformed header: dims " + to_string(dims) + ", E=" + std::to_string(members) + ", V=" + std::to_string(nvars));
    std::vector<VariableMeta> vars(nvars);
    for (auto& v : vars) {
        v.name = r.read_string("variable name");
        v.units = r.read_string("variable units");
        v.has_missing_sentinel = r.read<std::uint8_t>("sentinel flag") != 0;
        v.missing_sentinel = r.read<float>("sentinel");
    }
    const auto expected = static_cast<std::size_t>(dims.count() * members) * nvars;
    auto values = detail::check_payload(r, expected);
    return EnsembleGrid(dims, members, std::move(vars), std::move(values));
}

/// Loads a whole ensemble into memory; throws DataError and leaves nothing behind on failure.
inline EnsembleGrid load_ensemble(const std::filesystem::path& path, const FormatDescriptor& format = {}) {
    if (!std::filesystem::exists(path)) throw DataError("ensemble file not found: '" + path.string() + "'");
    auto bytes = detail::read_file(path);
    if (format.kind == FormatDescriptor::Kind::Native) return decode_ensemble(std::move(bytes));

    if (format.variables.empty() || format.members < 2 || format.dims.count() < 1)
        throw DataError("raw format descriptor needs dims, members >= 2 and at least one variable");
    detail::ByteReader r(std::move(bytes));
    const auto expected = static_cast<std::size_t>(format.dims.count() * format.members) * format.variables.size();
    auto values = detail::check_payload(r, expected);
    return EnsembleGrid(format.dims, format.members, format.variables, std::move(values));
}

} // namespace corrchord
