#pragma once

// Tabular and binary exports.
//
// Binary layout shared by marginal flows and density snapshots (all fields
// little-endian):
//
//   offset  size  field
//        0     4  magic "LMVF"
//        4     4  u32 version (1)
//        8     4  u32 kind: 0 = particle marginals, 1 = density grid
//       12     4  u32 reserved (0)
//       16     8  u64 n, values per row
//       24     8  u64 M, number of rows
//       32     8  f64 x0, first grid node (kind 1; 0 otherwise)
//       40     8  f64 dx, grid spacing (kind 1; 0 otherwise)
//       48        M rows of (n + 1) f64: time, then the n values
//
// Particle rows hold the sorted samples of the marginal.

#include "levymv/density_grid.hpp"
#include "levymv/particle_engine.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace levymv {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }
    void row(std::span<const double> values) {
        for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
        out_ << '\n';
    }
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }

private:
    std::ofstream out_;
};

inline void write_two_column(const std::filesystem::path& path, const std::string& xname, const std::string& yname,
                             std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("write_two_column: column lengths differ");
    CsvWriter w(path);
    w.header({xname, yname});
    for (std::size_t i = 0; i < xs.size(); ++i) w.row({xs[i], ys[i]});
}

inline void write_flow_csv(const std::filesystem::path& path, const MarginalFlow& flow) {
    CsvWriter w(path);
    std::vector<std::string> names{"time"};
    for (std::size_t i = 0; i < flow.sample_count(); ++i) names.push_back("x" + std::to_string(i));
    w.header(names);
    std::vector<double> row;
    for (std::size_t k = 0; k < flow.size(); ++k) {
        row.assign(1, flow.times[k]);
        row.insert(row.end(), flow.marginals[k].samples().begin(), flow.marginals[k].samples().end());
        w.row(row);
    }
}

enum class BinaryKind : std::uint32_t { particles = 0, density = 1 };

struct BinaryTable {
    BinaryKind kind = BinaryKind::particles;
    std::uint64_t n = 0;
    double x0 = 0.0;
    double dx = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
};

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> b;
    if (!in.read(reinterpret_cast<char*>(b.data()), sizeof(T))) throw std::runtime_error("binary table: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

inline constexpr char binary_magic[4] = {'L', 'M', 'V', 'F'};
inline constexpr std::uint32_t binary_version = 1;

} // namespace detail

inline void write_binary_table(const std::filesystem::path& path, const BinaryTable& t) {
    if (t.times.size() != t.rows.size()) throw std::invalid_argument("binary table: times and rows disagree");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(detail::binary_magic, 4);
    detail::put_le<std::uint32_t>(out, detail::binary_version);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.kind));
    detail::put_le<std::uint32_t>(out, 0);
    detail::put_le<std::uint64_t>(out, t.n);
    detail::put_le<std::uint64_t>(out, t.rows.size());
    detail::put_le<double>(out, t.x0);
    detail::put_le<double>(out, t.dx);
    for (std::size_t k = 0; k < t.rows.size(); ++k) {
        if (t.rows[k].size() != t.n) throw std::invalid_argument("binary table: row length differs from n");
        detail::put_le<double>(out, t.times[k]);
        for (double v : t.rows[k]) detail::put_le<double>(out, v);
    }
}

inline BinaryTable read_binary_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, detail::binary_magic, 4) != 0) throw std::runtime_error("binary table: bad magic");
    if (detail::get_le<std::uint32_t>(in) != detail::binary_version) throw std::runtime_error("binary table: unsupported version");
    BinaryTable t;
    const auto kind = detail::get_le<std::uint32_t>(in);
    if (kind > 1) throw std::runtime_error("binary table: unknown kind");
    t.kind = static_cast<BinaryKind>(kind);
    detail::get_le<std::uint32_t>(in);
    t.n = detail::get_le<std::uint64_t>(in);
    const auto rows = detail::get_le<std::uint64_t>(in);
    t.x0 = detail::get_le<double>(in);
    t.dx = detail::get_le<double>(in);
    for (std::uint64_t k = 0; k < rows; ++k) {
        t.times.push_back(detail::get_le<double>(in));
        auto& row = t.rows.emplace_back(t.n);
        for (auto& v : row) v = detail::get_le<double>(in);
    }
    return t;
}

inline void write_flow_binary(const std::filesystem::path& path, const MarginalFlow& flow) {
    BinaryTable t;
    t.kind = BinaryKind::particles;
    t.n = flow.sample_count();
    t.times = flow.times;
    for (const auto& m : flow.marginals) t.rows.emplace_back(m.samples().begin(), m.samples().end());
    write_binary_table(path, t);
}

inline MarginalFlow read_flow_binary(const std::filesystem::path& path) {
    auto t = read_binary_table(path);
    if (t.kind != BinaryKind::particles) throw std::runtime_error("binary table: not a particle flow");
    MarginalFlow flow;
    flow.times = std::move(t.times);
    for (auto& r : t.rows) flow.marginals.emplace_back(std::move(r));
    flow.validate();
    return flow;
}

inline void write_density_binary(const std::filesystem::path& path, std::span<const double> times, std::span<const DensityGrid> grids) {
    if (times.size() != grids.size() || grids.empty()) throw std::invalid_argument("write_density_binary: need one time per grid");
    BinaryTable t;
    t.kind = BinaryKind::density;
    t.n = grids.front().size();
    t.x0 = grids.front().x(0);
    t.dx = grids.front().dx();
    t.times.assign(times.begin(), times.end());
    for (const auto& g : grids) t.rows.emplace_back(g.values().begin(), g.values().end());
    write_binary_table(path, t);
}

/// Reads one number per line; blank lines, '#' comments and a non-numeric
/// first line (a header) are skipped.
inline std::vector<double> read_samples(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sample file " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r,");
        double v = 0.0;
        const auto res = std::from_chars(line.data() + first, line.data() + last + 1, v);
        if (res.ec != std::errc() || res.ptr != line.data() + last + 1) {
            if (out.empty() && lineno == 1) continue;
            throw std::runtime_error("sample file " + path.string() + ": cannot parse line " + std::to_string(lineno));
        }
        out.push_back(v);
    }
    if (out.empty()) throw std::runtime_error("sample file " + path.string() + " holds no values");
    return out;
}

} // namespace levymv
