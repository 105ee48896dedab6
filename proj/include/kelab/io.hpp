#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kelab/ma_solver.hpp"
#include "kelab/radial_geometry.hpp"

namespace kelab {

// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string format_number(double x);  // %.17g

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns);
    void add_row(const std::vector<double>& row);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

struct ParsedCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::size_t column(const std::string& name) const;
};

ParsedCsv read_csv(const std::filesystem::path& path);

std::string weight_csv(const RadialWeight& w);
nlohmann::json weight_json(const RadialWeight& w);
nlohmann::json report_json(const SolveReport& rep);

std::string sha256_hex(const std::string& data);

}  // namespace kelab
