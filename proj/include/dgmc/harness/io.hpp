#pragma once

// Persistence: the diagnostics CSV and the binary checkpoint.
//
// Checkpoint layout (little-endian): "DGMC", u32 version, u32 dim, u32 n,
// f64 eps, f64 t, n^dim f64 cell values. A run-state trailer may follow the
// cell values; readers of the field alone stop before it.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgmc/allen_cahn.hpp"
#include "dgmc/diagnostics.hpp"
#include "dgmc/grid.hpp"

namespace dgmc::harness {

inline constexpr const char* kCsvHeader =
    "t,E_eps,mass,dissipV,dissipVac,dissipH,discL1,discMax,volume,dgSlack,ediRes,Erel,Ebulk,tilt,rhoDefect";

/// 17 significant digits, so every double round-trips.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_row(const DiagnosticsRecord& r) {
    const double v[] = {r.t,         r.E_eps,   r.mass,   r.dissip_V,       r.dissip_V_ac,
                        r.dissip_H,  r.disc_L1, r.disc_max, r.volume,       r.de_giorgi_slack,
                        r.edi_residual, r.E_rel, r.E_bulk, r.tilt,          r.rho_defect};
    std::string out;
    for (std::size_t i = 0; i < std::size(v); ++i) {
        if (i) out += ',';
        out += format_number(v[i]);
    }
    return out;
}

inline std::string csv_text(const std::vector<DiagnosticsRecord>& rows) {
    std::string s = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) s += csv_row(r) + "\n";
    return s;
}

/// Parses a CSV written by csv_text.
inline std::vector<DiagnosticsRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("unexpected CSV header");
    std::vector<DiagnosticsRecord> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != 15) throw std::runtime_error("CSV row with " + std::to_string(v.size()) + " columns");
        DiagnosticsRecord r;
        r.t = v[0]; r.E_eps = v[1]; r.mass = v[2]; r.dissip_V = v[3]; r.dissip_V_ac = v[4];
        r.dissip_H = v[5]; r.disc_L1 = v[6]; r.disc_max = v[7]; r.volume = v[8]; r.de_giorgi_slack = v[9];
        r.edi_residual = v[10]; r.E_rel = v[11]; r.E_bulk = v[12]; r.tilt = v[13]; r.rho_defect = v[14];
        rows.push_back(r);
    }
    return rows;
}

/// Little-endian byte sink.
class ByteWriter {
public:
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v)); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    const std::vector<unsigned char>& data() const { return buf_; }

private:
    template <class T>
    void put_le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    std::vector<unsigned char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<unsigned char> d) : d_(std::move(d)) {}
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    std::int64_t i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>()); }
    double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
    void bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, d_.data() + pos_, n);
        pos_ += n;
    }
    std::vector<double> f64s() {
        const std::uint64_t n = u64();
        if (n > (d_.size() - pos_) / 8) throw std::runtime_error("corrupt checkpoint: array length");
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    bool at_end() const { return pos_ == d_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > d_.size()) throw std::runtime_error("truncated checkpoint");
    }
    template <class T>
    T get_le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(d_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    std::vector<unsigned char> d_;
    std::size_t pos_ = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_state(ByteWriter& w, const DiffuseState& s) {
    w.bytes("DGMC", 4);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(s.u.spec.dim()));
    w.u32(static_cast<std::uint32_t>(s.u.spec.n()));
    w.f64(s.eps);
    w.f64(s.time);
    for (double v : s.u.data) w.f64(v);
}

/// Reads the header and field; `extent` fixes the box side, which the
/// format does not store.
inline DiffuseState read_state(ByteReader& r, double extent = 1.0) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "DGMC", 4) != 0) throw std::runtime_error("not a checkpoint (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t dim = r.u32();
    const std::uint32_t n = r.u32();
    if (dim < 1 || dim > 3 || n < 8 || n > (1u << 16)) throw std::runtime_error("corrupt checkpoint header");
    DiffuseState s;
    s.eps = r.f64();
    s.time = r.f64();
    s.u = ScalarField(GridSpec(static_cast<int>(dim), extent, static_cast<int>(n)));
    for (double& v : s.u.data) v = r.f64();
    return s;
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace dgmc::harness
