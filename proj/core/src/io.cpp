#include "itomc/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace itomc {

namespace {
constexpr char kMagic[4] = {'I', 'T', 'O', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "ITOM I/O assumes a little-endian host");

template <class T> void put(std::ostream &os, T v) {
    os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
template <class T> T get(std::istream &is) {
    T v{};
    is.read(reinterpret_cast<char *>(&v), sizeof v);
    if (!is) throw std::runtime_error("truncated ITOM file");
    return v;
}

std::ofstream open_out(const std::filesystem::path &path, bool binary) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return os;
}
} // namespace

void write_itom(const std::filesystem::path &path, FileKind kind, const Eigen::MatrixXd &m) {
    auto os = open_out(path, true);
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(kind));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(m(i, j)));
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

ItomFile read_itom(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error(path.string() + " is not an ITOM file");
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("unsupported ITOM version");
    ItomFile f;
    const auto kind = get<std::uint32_t>(is);
    if (kind > 3) throw std::runtime_error("unknown ITOM kind");
    f.kind = static_cast<FileKind>(kind);
    const auto rows = get<std::uint64_t>(is), cols = get<std::uint64_t>(is);
    if (rows > (1u << 20) || cols > (1u << 20)) throw std::runtime_error("implausible ITOM dimensions");
    f.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < f.data.rows(); ++i)
        for (Eigen::Index j = 0; j < f.data.cols(); ++j) f.data(i, j) = std::bit_cast<double>(get<std::uint64_t>(is));
    return f;
}

void write_ito_matrix(const std::filesystem::path &path, const ItoMatrix &m) {
    write_itom(path, static_cast<FileKind>(static_cast<std::uint32_t>(m.kind)), m.entries);
}

void write_field(const std::filesystem::path &path, const ConductivityField &a) {
    Eigen::MatrixXd d(a.ny(), a.nx());
    for (int j = 0; j < a.ny(); ++j)
        for (int i = 0; i < a.nx(); ++i) d(j, i) = a(i, j);
    write_itom(path, FileKind::field, d);
}

ConductivityField read_field(const std::filesystem::path &path) {
    const ItomFile f = read_itom(path);
    if (f.kind != FileKind::field) throw std::runtime_error(path.string() + " does not hold a field");
    const int ny = static_cast<int>(f.data.rows()), nx = static_cast<int>(f.data.cols());
    Eigen::VectorXd v(static_cast<Eigen::Index>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) v[i + nx * j] = f.data(j, i);
    return {nx, ny, std::move(v)};
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    std::array<char, 32> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return {buf.data(), ptr};
}

void write_matrix_csv(std::ostream &os, const Eigen::MatrixXd &m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << format_double(m(i, j));
        }
        os << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path &path, const Eigen::MatrixXd &m) {
    auto os = open_out(path, false);
    write_matrix_csv(os, m);
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        const char *p = line.data(), *end = line.data() + line.size();
        while (p < end) {
            double v;
            auto [q, ec] = std::from_chars(p, end, v);
            if (ec != std::errc()) throw std::runtime_error("bad number in " + path.string());
            row.push_back(v);
            p = q;
            if (p < end && *p == ',') ++p;
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw std::runtime_error("ragged CSV " + path.string());
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

namespace {
unsigned char grey(double v, double lo, double hi) {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    return static_cast<unsigned char>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
}
} // namespace

void write_pgm(const std::filesystem::path &path, const ConductivityField &a, double lo, double hi) {
    auto os = open_out(path, true);
    os << "P5\n" << a.nx() << ' ' << a.ny() << "\n255\n";
    for (int j = a.ny() - 1; j >= 0; --j)
        for (int i = 0; i < a.nx(); ++i) os.put(static_cast<char>(grey(a(i, j), lo, hi)));
}

void write_pgm(const std::filesystem::path &path, const Eigen::MatrixXd &m, double lo, double hi) {
    auto os = open_out(path, true);
    os << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) os.put(static_cast<char>(grey(m(i, j), lo, hi)));
}

} // namespace itomc
