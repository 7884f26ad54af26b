#include "nlpr/mbi_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "mbi writer assumes a little-endian host");

namespace nlpr {

namespace {

[[noreturn]] void io_fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error("io: " + what + ": " + path.string());
}

}  // namespace

void write_mbi(const std::filesystem::path& path, const MultibandImage& img) {
    std::ofstream os(path, std::ios::binary);
    if (!os) io_fail(path, "cannot open for writing");
    std::ostringstream head;
    head.precision(17);
    head << "MBI1\n"
         << "p " << img.grid.p << "\n"
         << "q " << img.grid.q << "\n"
         << "bands " << img.bands() << "\n"
         << "scalar float64\n"
         << "endian little\n"
         << "order row-major\n"
         << "min " << img.data.minCoeff() << "\n"
         << "max " << img.data.maxCoeff() << "\n"
         << "end_header\n";
    os << head.str();
    for (int c = 0; c < img.bands(); ++c)
        os.write(reinterpret_cast<const char*>(img.data.col(c).data()),
                 static_cast<std::streamsize>(sizeof(double)) * img.pixels());
    if (!os) io_fail(path, "write failed");
}

MultibandImage read_mbi(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) io_fail(path, "cannot open");
    std::string line;
    if (!std::getline(is, line) || line != "MBI1") io_fail(path, "bad magic");
    int p = 0, q = 0, bands = 0;
    while (std::getline(is, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "p") ls >> p;
        else if (key == "q") ls >> q;
        else if (key == "bands") ls >> bands;
        else if (key == "scalar") {
            std::string v;
            ls >> v;
            if (v != "float64") io_fail(path, "unsupported scalar type");
        } else if (key == "endian") {
            std::string v;
            ls >> v;
            if (v != "little") io_fail(path, "unsupported endianness");
        } else if (key == "order") {
            std::string v;
            ls >> v;
            if (v != "row-major") io_fail(path, "unsupported pixel order");
        } else if (key == "min" || key == "max") {
            // informational
        } else
            io_fail(path, "unknown header key '" + key + "'");
    }
    if (p < 1 || q < 1 || bands < 1) io_fail(path, "incomplete header");
    MultibandImage img(Grid(p, q), bands);
    for (int c = 0; c < bands; ++c) {
        is.read(reinterpret_cast<char*>(img.data.col(c).data()),
                static_cast<std::streamsize>(sizeof(double)) * img.pixels());
        if (!is) io_fail(path, "truncated data");
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const MultibandImage& img, int band) {
    if (band < 0 || band >= img.bands()) throw std::invalid_argument("pgm: band out of range");
    const auto col = img.data.col(band);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::ofstream os(path, std::ios::binary);
    if (!os) io_fail(path, "cannot open for writing");
    os << "P5\n# min " << lo << " max " << hi << "\n" << img.grid.q << " " << img.grid.p
       << "\n255\n";
    std::string bytes(static_cast<std::size_t>(img.pixels()), '\0');
    for (int i = 0; i < img.pixels(); ++i)
        bytes[i] = static_cast<char>(
            static_cast<std::uint8_t>(std::lround((col[i] - lo) * scale)));
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) io_fail(path, "write failed");
}

std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) io_fail(path, "cannot open");
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: missing '=' at " + path.string() + ":" +
                                     std::to_string(lineno));
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: empty key at " + path.string() + ":" +
                                     std::to_string(lineno));
        if (!kv.emplace(key, value).second)
            throw std::runtime_error("config: duplicate key '" + key + "' in " + path.string());
    }
    return kv;
}

void write_kv_file(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& kv) {
    std::ofstream os(path);
    if (!os) io_fail(path, "cannot open for writing");
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    if (!os) io_fail(path, "write failed");
}

std::string matrix_to_string(const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os.precision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (i) os << ';';
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << m(i, j);
        }
    }
    return os.str();
}

Eigen::MatrixXd matrix_from_string(const std::string& s) {
    std::vector<std::vector<double>> rows;
    std::istringstream rs(s);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> vals;
        std::istringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) vals.push_back(std::stod(cell));
        if (!vals.empty()) rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error("matrix: empty text form");
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::runtime_error("matrix: ragged rows in text form");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

}  // namespace nlpr
