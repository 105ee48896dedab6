#include "kelab/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "kelab/conventions.hpp"

namespace kelab {

void atomic_write(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw std::runtime_error("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

std::string format_number(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& row)
{
    if (row.size() != columns_.size()) throw std::invalid_argument("CsvTable: row width mismatch");
    rows_.push_back(row);
}

std::string CsvTable::str() const
{
    std::string s;
    for (std::size_t c = 0; c < columns_.size(); ++c) s += (c ? "," : "") + columns_[c];
    s += '\n';
    for (const auto& r : rows_) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) s += ',';
            s += format_number(r[c]);
        }
        s += '\n';
    }
    return s;
}

std::size_t ParsedCsv::column(const std::string& name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::invalid_argument("csv has no column '" + name + "'");
}

ParsedCsv read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing trace file " + path.string());
    ParsedCsv out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty trace file " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.columns.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != out.columns.size()) throw std::runtime_error("ragged row in " + path.string());
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::string weight_csv(const RadialWeight& w)
{
    CsvTable t({"t", "u", "du", "d2u"});
    const auto& g = *w.grid();
    for (int i = 0; i < g.node_count; ++i) t.add_row({g.nodes[i], w.values()[i], w.first()[i], w.second()[i]});
    return t.str();
}

nlohmann::json weight_json(const RadialWeight& w)
{
    auto [lz, li] = lelong_numbers(w);
    return nlohmann::json{{"grid", {{"half_width", w.grid()->half_width}, {"node_count", w.grid()->node_count}}},
                          {"slope_minus", w.slope_minus()},
                          {"slope_plus", w.slope_plus()},
                          {"degree", w.bundle_degree()},
                          {"lelong", {lz, li}},
                          {"convention_hash", conventions_hash()}};
}

nlohmann::json report_json(const SolveReport& rep)
{
    return nlohmann::json{{"iterations", rep.iterations},
                          {"residual", rep.residual},
                          {"tolerance", rep.tolerance},
                          {"mass_defect", rep.mass_defect},
                          {"solution", weight_json(rep.solution)}};
}

std::string sha256_hex(const std::string& data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

}  // namespace kelab
