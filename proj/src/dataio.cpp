#include "gridcast/dataio.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gridcast {

static_assert(std::endian::native == std::endian::little,
              "grid payload is little-endian; big-endian hosts need a swap pass");

namespace {

[[noreturn]] void bad_grid(const std::string& path, const std::string& what,
                           std::streamoff offset) {
    std::ostringstream msg;
    msg << "grid file " << path << ": " << what << " (byte offset " << offset << ")";
    throw std::runtime_error(msg.str());
}

}  // namespace

void write_grid(const std::string& path, const Tensor4& t, bool as_f32) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_grid: cannot open " + path);
    out << "GPT1\n";
    out << "dims " << t.n << " " << t.h << " " << t.w << " " << t.c << "\n";
    out << "dtype " << (as_f32 ? "f32" : "f64") << "\n";
    if (!t.channel_names.empty()) {
        out << "channels";
        for (const auto& n : t.channel_names) out << " " << n;
        out << "\n";
    }
    out << "endian little\n";
    out << "end_header\n";
    if (as_f32) {
        std::vector<float> buf(t.data.size());
        for (std::size_t i = 0; i < t.data.size(); ++i) buf[i] = static_cast<float>(t.data[i]);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    } else {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write_grid: write failed for " + path);
}

Tensor4 read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_grid: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "GPT1") bad_grid(path, "bad magic", 0);

    int n = 0, h = 0, w = 0, c = 0;
    std::string dtype;
    std::vector<std::string> channels;
    bool got_dims = false, got_dtype = false, got_endian = false;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "dims") {
            if (!(ls >> n >> h >> w >> c) || n < 1 || h < 1 || w < 1 || c < 1)
                bad_grid(path, "invalid dims line", in.tellg());
            got_dims = true;
        } else if (key == "dtype") {
            ls >> dtype;
            if (dtype != "f32" && dtype != "f64") bad_grid(path, "unknown dtype", in.tellg());
            got_dtype = true;
        } else if (key == "channels") {
            std::string name;
            while (ls >> name) channels.push_back(name);
        } else if (key == "endian") {
            std::string e;
            ls >> e;
            if (e != "little") bad_grid(path, "unsupported endianness tag", in.tellg());
            got_endian = true;
        } else {
            bad_grid(path, "unknown header key '" + key + "'", in.tellg());
        }
    }
    if (!got_dims || !got_dtype || !got_endian)
        bad_grid(path, "incomplete header", in.tellg());
    if (!channels.empty() && channels.size() != static_cast<std::size_t>(c))
        bad_grid(path, "channel name count does not match dims", in.tellg());

    Tensor4 t(n, h, w, c);
    t.channel_names = channels;
    const std::streamoff payload_start = in.tellg();
    if (dtype == "f64") {
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(double)))
            bad_grid(path, "truncated payload", payload_start + in.gcount());
    } else {
        std::vector<float> buf(t.data.size());
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
            bad_grid(path, "truncated payload", payload_start + in.gcount());
        for (std::size_t i = 0; i < buf.size(); ++i) t.data[i] = static_cast<double>(buf[i]);
    }
    char extra;
    if (in.read(&extra, 1))
        bad_grid(path, "trailing bytes after payload", payload_start + static_cast<std::streamoff>(t.data.size() * (dtype == "f64" ? 8 : 4)));
    return t;
}

void Report::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw std::domain_error("Report: row width does not match column count");
    rows.push_back(std::move(row));
}

namespace {

std::string render_cell(const Report::Cell& cell) {
    if (std::holds_alternative<std::int64_t>(cell))
        return std::to_string(std::get<std::int64_t>(cell));
    if (std::holds_alternative<double>(cell)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9g", std::get<double>(cell));
        return buf;
    }
    return std::get<std::string>(cell);
}

}  // namespace

void write_report(const std::string& path, const Report& report) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw std::runtime_error("write_report: cannot open " + path);
    for (std::size_t i = 0; i < report.columns.size(); ++i)
        out << (i ? "," : "") << report.columns[i];
    out << "\n";
    for (const auto& row : report.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << render_cell(row[i]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_report: write failed for " + path);
}

CsvTable read_csv_numeric(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv_numeric: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv_numeric: empty file " + path);
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != t.columns.size())
            throw std::runtime_error("read_csv_numeric: ragged row in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

void Manifest::validate_against_dir(const std::string& dir) const {
    namespace fs = std::filesystem;
    for (const auto& [role, rel] : files) {
        const fs::path p = fs::path(dir) / rel;
        if (!fs::exists(p))
            throw std::runtime_error("manifest: missing file for role '" + role + "': " +
                                     p.string());
    }
    if (n_days < 2 || train_end < 1 || train_end >= n_days)
        throw std::runtime_error("manifest: invalid split indices");
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << "[manifest]\n";
    out << "name = " << m.name << "\n";
    out << "family = " << m.family << "\n";
    out << "config_hash = " << m.config_hash << "\n";
    out << "n_days = " << m.n_days << "\n";
    out << "train_end = " << m.train_end << "\n";
    out << "[files]\n";
    for (const auto& [role, rel] : m.files) out << role << " = " << rel << "\n";
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_manifest: cannot open " + path);
    Manifest m;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section == "manifest") {
            if (key == "name") m.name = value;
            else if (key == "family") m.family = value;
            else if (key == "config_hash") m.config_hash = std::stoull(value);
            else if (key == "n_days") m.n_days = std::stoi(value);
            else if (key == "train_end") m.train_end = std::stoi(value);
            else
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": unknown manifest key '" + key + "'");
        } else if (section == "files") {
            m.files[key] = value;
        } else {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown section '" + section + "'");
        }
    }
    return m;
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace gridcast
